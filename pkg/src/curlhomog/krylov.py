"""Deterministic Krylov solvers used by every discrete problem in the package.

Symmetric systems go through Jacobi-preconditioned conjugate gradients with
an optional projection that removes a known null space (constants on the
torus, constants for pure Neumann problems).  Nonsymmetric systems use
BiCGSTAB.  Both are thin wrappers over :mod:`scipy.sparse.linalg` that fix the
stopping rule (relative residual) and report the achieved residual.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverFailure

DEFAULT_TOL = 1e-10


@dataclass
class SolveInfo:
    residual: float
    iterations: int


def _jacobi(A):
    d = A.diagonal().copy()
    d[d == 0] = 1.0
    return 1.0 / d


def solve_spd(A, b, x0=None, tol=DEFAULT_TOL, maxiter=None,
              project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
              raise_on_failure=True):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    ``project`` maps a vector onto the complement of the null space of A; it
    is applied to the right-hand side, every preconditioned residual and the
    result, so singular but consistent systems converge to the minimal
    (projected) solution.
    """
    n = b.shape[0]
    maxiter = maxiter or max(200, 20 * int(round(n ** (2 / 3))))
    dinv = _jacobi(A)
    P = project if project is not None else (lambda v: v)
    bp = P(b)
    bnorm = np.linalg.norm(bp)
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(0.0, 0)
    if x0 is not None:
        x0 = P(np.asarray(x0, dtype=float))
        r0 = np.linalg.norm(bp - P(A @ x0)) / bnorm
        if r0 <= tol:
            return x0, SolveInfo(float(r0), 0)
    Aop = spla.LinearOperator((n, n), matvec=lambda v: P(A @ P(v)), dtype=float)
    Mop = spla.LinearOperator((n, n), matvec=lambda v: P(dinv * P(v)), dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(Aop, bp, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=Mop, callback=cb)
    x = P(x)
    res = float(np.linalg.norm(bp - P(A @ x)) / bnorm)
    if info != 0 and res > 10 * tol and raise_on_failure:
        raise SolverFailure("conjugate gradients did not converge", res, count[0])
    return x, SolveInfo(res, count[0])


def solve_general(A, b, x0=None, tol=DEFAULT_TOL, maxiter=None,
                  project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  raise_on_failure=True):
    """Solve ``A x = b`` for nonsymmetric ``A`` with positive symmetric part (BiCGSTAB)."""
    n = b.shape[0]
    maxiter = maxiter or max(200, 20 * int(round(n ** (2 / 3))))
    dinv = _jacobi(A)
    P = project if project is not None else (lambda v: v)
    bp = P(b)
    bnorm = np.linalg.norm(bp)
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(0.0, 0)
    Aop = spla.LinearOperator((n, n), matvec=lambda v: P(A @ P(v)), dtype=float)
    Mop = spla.LinearOperator((n, n), matvec=lambda v: P(dinv * P(v)), dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x = None
    for _ in range(3):  # restart guards against rare BiCGSTAB breakdowns
        x, info = spla.bicgstab(Aop, bp, x0=x if x is not None else x0, rtol=tol, atol=0.0,
                                maxiter=maxiter, M=Mop, callback=cb)
        x = P(x)
        res = float(np.linalg.norm(bp - P(A @ x)) / bnorm)
        if res <= tol:
            break
    if res > 10 * tol and raise_on_failure:
        raise SolverFailure("BiCGSTAB did not converge", res, count[0])
    return x, SolveInfo(res, count[0])


def solve(A, b, symmetric=True, **kw):
    return (solve_spd if symmetric else solve_general)(A, b, **kw)


def mean_free(v):
    """Euclidean projection removing constants; the null-space projector for
    symmetric operators that annihilate exactly the constants."""
    return v - v.mean()


def is_symmetric(A, rtol=1e-14) -> bool:
    d = A - A.T
    if sp.issparse(d):
        m = abs(d).max() if d.nnz else 0.0
    else:
        m = np.abs(d).max()
    return bool(m <= rtol * max(1.0, abs(A).max()))

"""Periodic cell problems and effective matrices.

For a periodic coefficient M the correctors chi_j solve

    -div(M(y) (grad chi_j + e_j)) = 0   on the unit torus,   <chi_j> = 0,

and the effective matrix is ``H(M) e_j = < M (grad chi_j + e_j) >``.  The
Maxwell-type system homogenizes to ``A0 = H(A^{-1})^{-1}`` and ``B0 = H(B)``.

Discretization: nodal chi on a periodic staggered grid, gradients on edges,
diagonal coefficient entries sampled at edge midpoints (so a 1-D laminate
reproduces the midpoint-rule harmonic mean exactly).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import krylov
from .coeff import CoefficientField, invert_field
from .errors import InvalidArgument
from .mesh import PeriodicGrid, build_torus

ROUNDOFF = 1e-13


@dataclass
class Corrector:
    grid: PeriodicGrid
    chi: np.ndarray  # (3, n_nodes); chi[j] is the zero-mean corrector for e_j
    source: CoefficientField
    residual: float
    iterations: tuple
    operator: object = field(repr=False, default=None)
    mass: object = field(repr=False, default=None)

    def residuals(self) -> np.ndarray:
        """Re-evaluate ``|div M (grad chi_j + e_j)| / |div M e_j|`` by direct operator application."""
        out = np.zeros(3)
        for j in range(3):
            E = _unit_field(self.grid, j)
            flux = self.mass @ (self.grid.grad @ self.chi[j] + E)
            r = np.linalg.norm(self.grid.grad.T @ flux)
            ref = np.linalg.norm(self.grid.grad.T @ (self.mass @ E))
            scale = max(ref, ROUNDOFF * np.linalg.norm(self.mass @ E))
            out[j] = r / scale if scale > 0 else r
        return out


@dataclass
class EffectiveMatrix:
    matrix: np.ndarray
    source: str
    resolution: int
    error_estimate: float = float("nan")
    provenance: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "source": self.source, "resolution": self.resolution,
                "error_estimate": self.error_estimate, **self.provenance}


def _unit_field(grid, j):
    E = np.zeros(grid.n_edges)
    o = grid.edge_offsets
    E[o[j]:o[j + 1]] = 1.0
    return E


def solve_corrector(M: CoefficientField, resolution: int, tol: float = krylov.DEFAULT_TOL,
                    maxiter: int | None = None) -> Corrector:
    """Solve the three periodic cell problems at ``resolution`` cells per axis."""
    if resolution < 4:
        raise InvalidArgument(f"cell resolution must be >= 4, got {resolution}")
    grid = build_torus(resolution)
    mass = grid.edge_mass(M)
    G = grid.grad
    K = (G.T @ mass @ G).tocsr()
    maxiter = maxiter or 20 * resolution ** 2
    chi = np.zeros((3, grid.n_nodes))
    worst, its = 0.0, []
    for j in range(3):
        flux0 = mass @ _unit_field(grid, j)
        rhs = -(G.T @ flux0)
        if np.linalg.norm(rhs) <= ROUNDOFF * np.linalg.norm(flux0):
            its.append(0)  # divergence-free at roundoff level: chi_j = 0
            continue
        x, info = krylov.solve(K, rhs, symmetric=M.symmetric, tol=tol, maxiter=maxiter,
                               project=krylov.mean_free)
        chi[j] = x - x.mean()
        worst = max(worst, info.residual)
        its.append(info.iterations)
    return Corrector(grid, chi, M, worst, tuple(its), K, mass)


def _effective_from(cor: Corrector) -> np.ndarray:
    grid, mass = cor.grid, cor.mass
    W = [grid.grad @ cor.chi[j] + _unit_field(grid, j) for j in range(3)]
    H = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            H[i, j] = W[i] @ (mass @ W[j]) / grid.volume
    return H


def homogenize(M: CoefficientField, resolution: int = 32, tol: float = krylov.DEFAULT_TOL,
               estimate_error: bool = False) -> EffectiveMatrix:
    """Effective matrix H(M).

    With ``estimate_error`` the same computation at half resolution is used
    as a discretization-error estimate (max-norm difference).
    """
    cor = solve_corrector(M, resolution, tol)
    H = _effective_from(cor)
    err = float("nan")
    if estimate_error and resolution >= 8:
        H2 = _effective_from(solve_corrector(M, resolution // 2, tol))
        err = float(np.abs(H - H2).max())
    return EffectiveMatrix(H, M.label, resolution, err,
                           {"residual": cor.residual, "iterations": list(cor.iterations)})


def effective_maxwell(A: CoefficientField, B: CoefficientField, resolution: int = 32,
                      tol: float = krylov.DEFAULT_TOL, estimate_error: bool = False):
    """Return ``(A0, B0) = (H(A^{-1})^{-1}, H(B))``."""
    HAinv = homogenize(invert_field(A), resolution, tol, estimate_error)
    A0 = np.linalg.inv(HAinv.matrix)
    # first-order propagation of the estimate through the inverse
    err = float(np.abs(A0).max() ** 2 * HAinv.error_estimate) if estimate_error else float("nan")
    eff_A = EffectiveMatrix(A0, f"H({A.label}^-1)^-1", resolution, err,
                            {"H_of_inverse": HAinv.matrix.tolist(), **HAinv.provenance})
    eff_B = homogenize(B, resolution, tol, estimate_error)
    eff_B.source = f"H({B.label})"
    return eff_A, eff_B


def laminate_bounds(M: CoefficientField, n: int = 4096):
    """Harmonic- and arithmetic-mean matrices of M over a fine periodic midpoint sample.

    For symmetric M these bracket H(M) in the quadratic-form order.
    """
    y = np.stack(np.meshgrid(*[(np.arange(round(n ** (1 / 3))) + 0.5) / round(n ** (1 / 3))] * 3,
                             indexing="ij"), -1).reshape(-1, 3)
    S = M(y)
    arith = S.mean(axis=0)
    harm = np.linalg.inv(np.linalg.inv(S).mean(axis=0))
    return harm, arith

"""Scalar divergence-form problems with a flux term.

Both problems read ``div{M(x/eps)(grad w + g)} = div F`` in the box.

Dirichlet (``w = f`` on the boundary)
    Nodal unknowns; gradients, ``g`` and ``F`` live on edges.  The discrete
    weak form is tested with every interior-node hat function, using the
    tensor edge mass matrix of ``M(x/eps)``.

Neumann (``n.M(x/eps)(grad w + g) = f`` on the boundary)
    Cell-centred finite volumes; gradients, ``g`` and ``F`` live on faces,
    the prescribed flux density ``f`` on boundary faces.  Integrating over
    the box gives the compatibility condition ``<f, 1> = \\oint n.F`` (the
    usual ``<f, 1> = 0`` when ``F`` has zero normal trace).  Off-diagonal
    tensor entries couple interior faces only.  Solutions are normalized to
    zero mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import krylov
from .coeff import as_tensor
from .errors import GridMismatch, InvalidArgument
from .mesh import CellField, EdgeField, FaceField, NodeField, StaggeredGrid

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass
class ScalarProblem:
    """Data of one scalar problem.

    ``f`` is, for Dirichlet problems, nodal boundary values (array over
    ``grid.boundary_nodes``, a NodeField whose boundary values are used, or a
    callable of points); for Neumann problems, the outward flux density on
    ``grid.boundary_faces`` (array or callable of points).
    ``eps=None`` uses the coefficient at unscaled points.
    """

    grid: StaggeredGrid
    M: object
    eps: Optional[float] = None
    g: object = None
    F: object = None
    kind: str = DIRICHLET
    f: object = None
    tol: float = krylov.DEFAULT_TOL

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN):
            raise InvalidArgument(f"boundary kind must be 'dirichlet' or 'neumann', got {self.kind!r}")
        if self.eps is not None and not self.eps > 0:
            raise InvalidArgument(f"eps must be positive, got {self.eps}")
        cls = EdgeField if self.kind == DIRICHLET else FaceField
        for name in ("g", "F"):
            v = getattr(self, name)
            if v is None:
                setattr(self, name, cls.zeros(self.grid))
            elif not isinstance(v, cls):
                raise GridMismatch(f"{self.kind} problem needs {name} as {cls.__name__}, got {type(v).__name__}")
            elif v.grid != self.grid:
                raise GridMismatch(f"{name} lives on a different grid")

    def boundary_values(self) -> np.ndarray:
        g = self.grid
        if self.kind == DIRICHLET:
            idx, pts = g.boundary_nodes, g.node_points
        else:
            idx, pts = g.boundary_faces, g.face_points
        if self.f is None:
            return np.zeros(idx.size)
        if isinstance(self.f, NodeField):
            return self.f.values[idx]
        if callable(self.f):
            return np.asarray(self.f(pts[idx]), dtype=float).reshape(-1)
        v = np.asarray(self.f, dtype=float)
        if v.shape != (idx.size,):
            raise InvalidArgument(f"boundary data needs {idx.size} values, got {v.shape}")
        return v


@dataclass
class ScalarSolution:
    w: object            # NodeField (Dirichlet) or CellField (Neumann)
    grad: object         # EdgeField (Dirichlet) or FaceField (Neumann)
    residual: float
    iterations: int
    kind: str = DIRICHLET
    operator: object = field(default=None, repr=False)


def _dirichlet_system(p: ScalarProblem):
    g = p.grid
    T, sym = as_tensor(p.M, p.eps)
    Me = g.edge_mass(T)
    G = g.grad
    I, B = g.interior_nodes, g.boundary_nodes
    GI, GB = G[:, I], G[:, B]
    K = (GI.T @ Me @ GI).tocsr()
    wB = p.boundary_values()
    flux = Me @ (p.g.values + GB @ wB) - g.edge_volumes * p.F.values
    rhs = -(GI.T @ flux)
    return K, rhs, sym, wB


def solve_dirichlet(p: ScalarProblem, w0: NodeField | None = None) -> ScalarSolution:
    """Solve the Dirichlet problem; the boundary trace of ``w`` equals ``f`` exactly.

    ``w0`` is an optional initial guess (its interior values are used).
    """
    if p.kind != DIRICHLET:
        raise InvalidArgument("solve_dirichlet needs a Dirichlet problem")
    g = p.grid
    K, rhs, sym, wB = _dirichlet_system(p)
    I = g.interior_nodes
    if I.size == 0:
        x, info = np.zeros(0), krylov.SolveInfo(0.0, 0)
    else:
        x0 = None if w0 is None else w0.values[I]
        x, info = krylov.solve(K, rhs, symmetric=sym, tol=p.tol, x0=x0)
    w = np.empty(g.n_nodes)
    w[I] = x
    w[g.boundary_nodes] = wB
    wf = NodeField(g, w)
    return ScalarSolution(wf, EdgeField(g, g.grad @ w), info.residual, info.iterations, DIRICHLET, K)


def dirichlet_residual(p: ScalarProblem, s: ScalarSolution) -> float:
    """Relative residual of the discrete weak form, re-evaluated from scratch."""
    K, rhs, _, _ = _dirichlet_system(p)
    r = rhs - K @ s.w.values[p.grid.interior_nodes]
    scale = np.linalg.norm(rhs)
    return float(np.linalg.norm(r) / scale) if scale > 0 else float(np.linalg.norm(r))


def _neumann_system(p: ScalarProblem):
    g = p.grid
    T, sym = as_tensor(p.M, p.eps)
    Mf = g.face_mass(T)
    I, B = g.interior_faces, g.boundary_faces
    D = g.div
    DI, DB = D[:, I], D[:, B]
    MII = Mf[I][:, I]
    K = (DI @ MII @ DI.T).tocsr()
    vol = g.cell_volume
    sign = g.boundary_face_normal_sign
    qB = sign * p.boundary_values()          # flux along +axis on boundary faces
    fdata = p.boundary_values()
    areas = g.face_areas[B]
    total_f = float(np.sum(fdata * areas))
    total_F = float(np.sum(sign * p.F.values[B] * areas))
    scale = float(np.sum(np.abs(fdata) * areas) + np.sum(np.abs(p.F.values[B]) * areas)
                  + vol * np.abs(D @ p.F.values).sum())
    # interior flux of g; W_f = vol on interior faces
    rhs = vol * (-(D @ p.F.values) + DB @ qB) + DI @ (MII @ p.g.values[I])
    return K, rhs, sym, (total_f, total_F, scale), MII, qB


def solve_neumann(p: ScalarProblem, compat_tol: float = 1e-10) -> ScalarSolution:
    """Solve the Neumann problem with cell-centred unknowns; ``w`` has zero mean."""
    if p.kind != NEUMANN:
        raise InvalidArgument("solve_neumann needs a Neumann problem")
    g = p.grid
    K, rhs, sym, (tf, tF, scale), MII, qB = _neumann_system(p)
    if abs(tf - tF) > compat_tol * max(scale, 1.0):
        raise InvalidArgument(f"Neumann data incompatible: <f,1> = {tf:.6g} but boundary flux of F = {tF:.6g}")
    x, info = krylov.solve(K, rhs, symmetric=sym, tol=p.tol, project=krylov.mean_free)
    x = x - x.mean()
    w = CellField(g, x)
    return ScalarSolution(w, FaceField(g, neumann_gradient(p, x, qB)), info.residual, info.iterations, NEUMANN, K)


def neumann_gradient(p: ScalarProblem, x: np.ndarray, qB=None) -> np.ndarray:
    """Face gradient of a cell field: centre differences on interior faces,
    and on boundary faces the value implied by the prescribed flux (diagonal part)."""
    g = p.grid
    grad = -(g.div.T @ x)  # interior faces: (w+ - w-)/h
    B = g.boundary_faces
    if qB is None:
        qB = g.boundary_face_normal_sign * p.boundary_values()
    T, _ = as_tensor(p.M, p.eps)
    Mb = T(g.face_points[B])
    dirs = g.face_dirs[B]
    grad[B] = qB / Mb[np.arange(B.size), dirs, dirs] - p.g.values[B]
    return grad


def neumann_residual(p: ScalarProblem, s: ScalarSolution) -> float:
    K, rhs, *_ = _neumann_system(p)
    rhs = krylov.mean_free(rhs)
    r = rhs - K @ s.w.values
    scale = np.linalg.norm(rhs)
    return float(np.linalg.norm(r) / scale) if scale > 0 else float(np.linalg.norm(r))


def solve_scalar(p: ScalarProblem) -> ScalarSolution:
    return solve_dirichlet(p) if p.kind == DIRICHLET else solve_neumann(p)


def dirichlet_corrector(M, eps, grid: StaggeredGrid, tol: float = krylov.DEFAULT_TOL):
    """The three solutions of ``div(M(x/eps) grad Phi_k) = 0`` with ``Phi_k = x_k`` on the boundary.

    The linear function ``x_k`` is used as initial guess, so directions in
    which the coefficient does not vary cost no iterations.
    """
    out = []
    for k in range(3):
        xk = NodeField(grid, grid.node_points[:, k].copy())
        p = ScalarProblem(grid, M, eps, kind=DIRICHLET, f=xk, tol=tol)
        out.append(solve_dirichlet(p, w0=xk))
    return out


def lipschitz_report(s: ScalarSolution) -> float:
    """Discrete L^inf norm of the gradient: max over DOFs of |grad w|."""
    return float(np.abs(s.grad.values).max(initial=0.0))

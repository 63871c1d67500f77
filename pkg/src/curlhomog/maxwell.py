"""The curl-curl boundary value problem

    curl(A(x/eps) curl u) + B(x/eps) u = F + curl G   in the box,
    n x u = f                                          on the boundary,

discretized with edge unknowns for ``u`` and face unknowns for ``curl u``.
The discrete weak form, tested with every edge field ``v`` of zero
tangential trace, is

    (C v)^T M_face(A) C u + v^T M_edge(B) u = v^T W_e F + (C v)^T W_f G,

with tensor mass matrices ``M_face``, ``M_edge`` and the lumped dual volumes
``W_e``, ``W_f``.  The tangential trace is imposed strongly: ``u`` is a lift
of ``f`` plus a correction supported on interior edges.
"""
from __future__ import annotations

import struct
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import krylov
from .coeff import CoefficientField, as_tensor, constant_field
from .errors import GridMismatch, InvalidArgument
from .mesh import (BoundaryTrace, EdgeField, FaceField, StaggeredGrid, discrete_curl, normal_trace,
                   surface_divergence, tangential_trace)
from .norms import lp_norm


@dataclass
class MaxwellProblem:
    """Data of one curl-curl problem.  ``eps=None`` samples ``A``, ``B`` unscaled
    (constant effective matrices are passed as 3x3 arrays or effective-matrix objects)."""

    grid: StaggeredGrid
    A: object
    B: object
    eps: Optional[float] = None
    F: Optional[EdgeField] = None
    G: Optional[FaceField] = None
    f: Optional[BoundaryTrace] = None
    tol: float = krylov.DEFAULT_TOL

    def __post_init__(self):
        g = self.grid
        if self.eps is not None and not self.eps > 0:
            raise InvalidArgument(f"eps must be positive, got {self.eps}")
        if self.F is None:
            self.F = EdgeField.zeros(g)
        if self.G is None:
            self.G = FaceField.zeros(g)
        if self.f is None:
            self.f = BoundaryTrace.zeros(g)
        if not isinstance(self.F, EdgeField) or not isinstance(self.G, FaceField):
            raise GridMismatch("F must be an EdgeField and G a FaceField")
        if self.F.grid != g or self.G.grid != g or self.f.grid != g:
            raise GridMismatch("problem data live on different grids")
        if not self.f.is_tangential():
            raise InvalidArgument("boundary data must be purely tangential (n.f = 0)")
        for name in ("A", "B"):
            M = getattr(self, name)
            if not isinstance(M, CoefficientField):
                setattr(self, name, constant_field(getattr(M, "matrix", M), name=name + "0"))

    @property
    def symmetric(self) -> bool:
        return bool(self.A.symmetric and self.B.symmetric)

    @property
    def homogeneous(self) -> bool:
        return not np.any(self.f.tangential)

    def with_data(self, F=None, G=None, f=None) -> "MaxwellProblem":
        return replace(self, F=F, G=G, f=f)


@dataclass
class MaxwellSolution:
    u: EdgeField
    curl_u: FaceField
    residual: float
    iterations: int
    seconds: float = 0.0
    problem: Optional[MaxwellProblem] = field(default=None, repr=False)

    def norms(self, p) -> tuple[float, float]:
        return lp_norm(self.u, p), lp_norm(self.curl_u, p)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def system_matrix(grid: StaggeredGrid, A, B, eps=None):
    """Full (all edges) matrix ``C^T M_face(A) C + M_edge(B)`` and the symmetry flag."""
    TA, sa = as_tensor(A, eps)
    TB, sb = as_tensor(B, eps)
    C = grid.curl
    K = (C.T @ grid.face_mass(TA) @ C + grid.edge_mass(TB)).tocsr()
    return K, bool(sa and sb)


def load_vector(grid: StaggeredGrid, F: EdgeField, G: FaceField) -> np.ndarray:
    """``W_e F + C^T W_f G`` on all edges."""
    return grid.edge_volumes * F.values + grid.curl.T @ (grid.face_volumes * G.values)


def _cutoff(t):
    return np.where(t < 1.0, np.cos(0.5 * np.pi * np.clip(t, 0.0, 1.0)) ** 2, 0.0)


def lift_boundary(f: BoundaryTrace, grid: StaggeredGrid | None = None, width: float | None = None) -> EdgeField:
    """Edge field with tangential trace ``f`` and a smooth interior profile.

    Each side's tangential data are carried inward along the normal with the
    cutoff ``cos^2(pi d / 2 width)`` (``width`` defaults to a quarter of the
    smallest extent); overlapping contributions near box edges are
    normalized.  Boundary edges are then set to ``f`` exactly.
    """
    grid = f.grid if grid is None else grid
    if f.grid != grid:
        raise GridMismatch("trace lives on a different grid")
    if not f.is_tangential():
        raise InvalidArgument("cannot lift a trace with a nonzero normal component")
    full = np.zeros(grid.n_edges)
    full[grid.boundary_edges] = f.tangential
    if not np.any(full):
        return EdgeField.zeros(grid)
    width = 0.25 * min(grid.extent) if width is None else width
    num = np.zeros(grid.n_edges)
    den = np.zeros(grid.n_edges)
    for d in range(3):
        blk = grid.edge_block(full, d)
        o = grid.edge_offsets
        nsl = slice(o[d], o[d + 1])
        for a in range(3):
            if a == d:
                continue
            n_a = grid.cells[a]
            dist_idx = np.arange(n_a + 1)
            for side_idx in (0, n_a):
                sl = [slice(None)] * 3
                sl[a] = slice(side_idx, side_idx + 1)
                face_vals = blk[tuple(sl)]
                dist = np.abs(dist_idx - side_idx) * grid.h[a]
                w = _cutoff(dist / width)
                shape = [1, 1, 1]
                shape[a] = n_a + 1
                w = w.reshape(shape)
                num[nsl] += np.broadcast_to(face_vals * w, blk.shape).ravel()
                den[nsl] += np.broadcast_to(w, blk.shape).ravel()
    u = num / np.maximum(den, 1.0)
    u[grid.boundary_edges] = f.tangential
    return EdgeField(grid, u)


def _solve(p: MaxwellProblem, K, sym, b_full, u_lift, x0=None):
    g = p.grid
    I = g.interior_edges
    rhs = (b_full - K @ u_lift)[I]
    KII = K[I][:, I]
    t0 = time.perf_counter()
    x, info = krylov.solve(KII, rhs, symmetric=sym, tol=p.tol, x0=x0)
    secs = time.perf_counter() - t0
    u = u_lift.copy()
    u[I] += x
    uf = EdgeField(g, u)
    return MaxwellSolution(uf, discrete_curl(uf), info.residual, info.iterations, secs, p)


def assemble_solve(p: MaxwellProblem) -> MaxwellSolution:
    """Solve the problem; the tangential trace of ``u`` equals ``f`` bit-exactly."""
    K, sym = system_matrix(p.grid, p.A, p.B, p.eps)
    b = load_vector(p.grid, p.F, p.G)
    u_lift = lift_boundary(p.f, p.grid).values
    return _solve(p, K, sym, b, u_lift)


def residual(p: MaxwellProblem, s: MaxwellSolution) -> float:
    """Relative residual of the interior weak-form equations, re-evaluated from scratch."""
    K, _ = system_matrix(p.grid, p.A, p.B, p.eps)
    I = p.grid.interior_edges
    b = load_vector(p.grid, p.F, p.G)
    r = (b - K @ s.u.values)[I]
    ref = b[I] - (K @ lift_boundary(p.f, p.grid).values)[I]
    scale = np.linalg.norm(ref)
    return float(np.linalg.norm(r) / scale) if scale > 0 else float(np.linalg.norm(r))


def solve_homogenized(A0, B0, data: MaxwellProblem) -> MaxwellSolution:
    """Solve with constant effective matrices ``A0``, ``B0`` and the data of ``data``."""
    p = MaxwellProblem(data.grid, constant_field(getattr(A0, "matrix", A0), "A0"),
                       constant_field(getattr(B0, "matrix", B0), "B0"), None,
                       data.F, data.G, data.f, data.tol)
    return assemble_solve(p)


def solve_adjoint(p: MaxwellProblem, F1: EdgeField, G1: FaceField) -> MaxwellSolution:
    """Solve the transposed-coefficient problem with data ``(F1, G1)`` and zero trace."""
    q = MaxwellProblem(p.grid, p.A.transpose, p.B.transpose, p.eps, F1, G1, None, p.tol)
    return assemble_solve(q)


def duality_residual(u: MaxwellSolution, v: MaxwellSolution, F: EdgeField, G: FaceField,
                     F1: EdgeField, G1: FaceField, floor: float = 1e-300) -> float:
    """``|<F1,u> + <G1,curl u> - <F,v> - <G,curl v>| / (|LHS| + |RHS| + floor)``.

    Pairings use the same quadrature as the load vector, so for exact
    solves the two sides agree algebraically.
    """
    g = u.u.grid
    if v.u.grid != g:
        raise GridMismatch("primal and adjoint solutions live on different grids")
    for s in (u, v):
        if np.any(s.u.values[g.boundary_edges]):
            raise InvalidArgument("the duality identity is stated for zero boundary data")
    lhs = float(u.u.values @ (g.edge_volumes * F1.values) + u.curl_u.values @ (g.face_volumes * G1.values))
    rhs = float(v.u.values @ (g.edge_volumes * F.values) + v.curl_u.values @ (g.face_volumes * G.values))
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + floor)


# ---------------------------------------------------------------------------
# flat binary field dump
# ---------------------------------------------------------------------------

def write_field_dump(path, u: EdgeField) -> None:
    """Header: three little-endian int64 cell counts; then float64 edge values
    (little-endian) in the grid's lexicographic edge order."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<3q", *u.grid.cells))
        fh.write(np.asarray(u.values, dtype="<f8").tobytes())


def read_field_dump(path):
    """Return ``(cells, values)`` from a dump written by :func:`write_field_dump`."""
    with open(path, "rb") as fh:
        cells = struct.unpack("<3q", fh.read(24))
        values = np.frombuffer(fh.read(), dtype="<f8").copy()
    return tuple(cells), values


def boundary_identity_gap(u: EdgeField) -> float:
    """max | n.curl u + Div(n x u) | over boundary faces."""
    n_curl = normal_trace(discrete_curl(u)).normal
    return float(np.abs(n_curl + surface_divergence(tangential_trace(u))).max(initial=0.0))

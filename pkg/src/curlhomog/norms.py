"""Discrete norms on staggered-grid fields.

Conventions
-----------
* Scalar node fields are averaged to cell centres (mean of the eight
  corners), cell fields are used directly; edge and face fields are turned
  into Euclidean cell vectors by averaging parallel DOFs.  Finite ``p`` uses
  the midpoint rule over cells.
* ``p = inf`` is a max without quadrature: over DOFs for scalar fields and
  over cell vectors for vector fields (so monotonicity in ``p`` holds exactly
  on the probability-normalized unit cube).
* Boundary norms reconstruct the in-surface vector on every boundary face
  from its four edges and weight by face area.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.stats import qmc

from .errors import InvalidArgument
from .mesh import (BoundaryTrace, CellField, EdgeField, FaceField, NodeField, Field,
                   discrete_grad)


@dataclass(frozen=True)
class NormReport:
    kind: str
    exponent: float
    value: float
    resolution: tuple
    tag: str = ""

    def as_dict(self):
        d = asdict(self)
        d["exponent"] = "inf" if np.isinf(self.exponent) else self.exponent
        d["resolution"] = list(self.resolution)
        return d


def parse_p(p) -> float:
    """Accept numbers, ``inf`` or the strings ``'inf'``/``'infinity'``; require p in (1, inf]."""
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return np.inf
        try:
            p = float(p)
        except ValueError:
            raise InvalidArgument(f"invalid exponent {p!r}") from None
    p = float(p)
    if not (p > 1.0) or np.isnan(p):
        raise InvalidArgument(f"exponent p must lie in (1, inf], got {p}")
    return p


def _pnorm(mags, weights, p):
    if mags.size == 0:
        return 0.0
    if np.isinf(p):
        return float(mags.max())
    top = mags.max()
    if top == 0.0:
        return 0.0
    # scale to avoid overflow for large p
    return float(top * np.sum(weights * (mags / top) ** p) ** (1.0 / p))


def _cell_magnitudes(field: Field):
    g = field.grid
    if isinstance(field, NodeField):
        return np.abs(g.node_to_cell @ field.values)
    if isinstance(field, CellField):
        return np.abs(field.values)
    if isinstance(field, (EdgeField, FaceField)):
        return np.linalg.norm(field.cell_vectors(), axis=1)
    raise InvalidArgument(f"unsupported field type {type(field).__name__}")


def lp_norm(field, p) -> float:
    """Discrete L^p norm of a grid field (or boundary trace)."""
    p = parse_p(p)
    if isinstance(field, BoundaryTrace):
        return boundary_lp(field, p)
    if np.isinf(p):
        if isinstance(field, (NodeField, CellField)):
            return float(np.abs(field.values).max(initial=0.0))
        return float(_cell_magnitudes(field).max(initial=0.0))
    return _pnorm(_cell_magnitudes(field), field.grid.cell_volumes, p)


def w1p_norm(scalar: NodeField, p) -> float:
    """``lp_norm(w) + lp_norm(grad w)``."""
    if not isinstance(scalar, NodeField):
        raise InvalidArgument("w1p_norm expects a NodeField")
    return lp_norm(scalar, p) + lp_norm(discrete_grad(scalar), p)


# ---------------------------------------------------------------------------
# Hölder norms
# ---------------------------------------------------------------------------

def _holder_samples(field):
    """Values (m, k) on a structured array of points, plus the array shape and spacing."""
    g = field.grid
    if isinstance(field, NodeField):
        return field.values[:, None], tuple(g.node_shape), g.node_points
    if isinstance(field, CellField):
        return field.values[:, None], tuple(g.cell_shape), g.cell_points
    if isinstance(field, (EdgeField, FaceField)):
        return field.cell_vectors(), tuple(g.cell_shape), g.cell_points
    raise InvalidArgument(f"unsupported field type {type(field).__name__}")


def _stencil_offsets(radius):
    r = range(-radius, radius + 1)
    out = []
    for a in r:
        for b in r:
            for c in r:
                if (a, b, c) > (0, 0, 0):
                    out.append((a, b, c))
    return out


def _shifted(arr, off):
    """Pair of overlapping views arr[x], arr[x+off] for a 3-D index offset."""
    s0, s1 = [], []
    for o in off:
        if o >= 0:
            s0.append(slice(0, arr.shape[len(s0)] - o))
            s1.append(slice(o, None))
        else:
            s0.append(slice(-o, None))
            s1.append(slice(0, arr.shape[len(s1)] + o))
    return arr[tuple(s0)], arr[tuple(s1)]


def holder_seminorm_field(field, gamma, stencil_radius=2, lines_per_axis=8, far_pairs=4096) -> float:
    """Lower bound for the C^gamma seminorm from a deterministic pair set.

    Pairs: every point with its neighbours within ``stencil_radius`` index
    steps; all pairs along a quasi-random selection of grid lines in each
    axis direction; ``far_pairs`` Halton-distributed point pairs; and the
    pair (argmax, argmin).
    """
    vals, shape, pts = _holder_samples(field)
    k = vals.shape[1]
    V = vals.reshape(*shape, k)
    h = np.asarray(pts[-1] - pts[0], dtype=float) / np.maximum(np.asarray(shape) - 1, 1)
    best = 0.0
    for off in _stencil_offsets(stencil_radius):
        if any(abs(o) >= n for o, n in zip(off, shape)):
            continue
        a, b = _shifted(V, off)
        d = np.linalg.norm(np.asarray(off) * h)
        best = max(best, float(np.linalg.norm(a - b, axis=-1).max(initial=0.0)) / d ** gamma)
    # grid lines
    halton = qmc.Halton(d=2, scramble=False)
    uv = halton.random(lines_per_axis + 1)[1:]
    for axis in range(3):
        others = [ax for ax in range(3) if ax != axis]
        n = shape[axis]
        if n < 2:
            continue
        t = np.arange(n) * h[axis]
        D = np.abs(t[:, None] - t[None, :])
        np.fill_diagonal(D, np.inf)
        for u, v in uv:
            idx = [0, 0, 0]
            idx[others[0]] = int(u * shape[others[0]])
            idx[others[1]] = int(v * shape[others[1]])
            idx[axis] = slice(None)
            line = V[tuple(idx)]
            diff = np.linalg.norm(line[:, None, :] - line[None, :, :], axis=-1)
            best = max(best, float((diff / D ** gamma).max()))
    # far pairs
    m = vals.shape[0]
    if m > 1 and far_pairs > 0:
        q = qmc.Halton(d=2, scramble=False).random(far_pairs + 1)[1:]
        i = np.minimum((q[:, 0] * m).astype(int), m - 1)
        j = np.minimum((q[:, 1] * m).astype(int), m - 1)
        keep = i != j
        i, j = i[keep], j[keep]
        d = np.linalg.norm(pts[i] - pts[j], axis=1)
        diff = np.linalg.norm(vals[i] - vals[j], axis=1)
        if d.size:
            best = max(best, float((diff / d ** gamma).max()))
    mag = np.linalg.norm(vals, axis=1)
    i, j = int(np.argmax(mag)), int(np.argmin(mag))
    if i != j:
        d = np.linalg.norm(pts[i] - pts[j])
        best = max(best, float(np.linalg.norm(vals[i] - vals[j]) / d ** gamma))
    return best


def holder_norm(field, gamma, **kw) -> float:
    """``sup|field| + [field]_gamma`` on the deterministic pair set (a lower bound)."""
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise InvalidArgument(f"Hölder exponent must lie in (0, 1), got {gamma}")
    vals, _, _ = _holder_samples(field)
    sup = float(np.linalg.norm(vals, axis=1).max(initial=0.0))
    return sup + holder_seminorm_field(field, gamma, **kw)


def gamma_from_q(q: float) -> float:
    """Hölder exponent paired with an integrability exponent q > 3 via gamma = 1 - 3/q."""
    if q <= 3:
        raise InvalidArgument(f"q must exceed 3, got {q}")
    return 1.0 - 3.0 / q


def dual_exponent(p) -> float:
    """p' = p/(p-1); labels only."""
    p = parse_p(p)
    return 1.0 if np.isinf(p) else p / (p - 1.0)


# ---------------------------------------------------------------------------
# Boundary norms
# ---------------------------------------------------------------------------

def _full_edges(trace: BoundaryTrace):
    g = trace.grid
    full = np.zeros(g.n_edges)
    full[g.boundary_edges] = trace.tangential
    return full


def _side_planes(grid):
    """Yield (axis, index) for the six box sides."""
    for axis in range(3):
        yield axis, 0
        yield axis, grid.cells[axis]


def _plane(arr3, axis, index):
    sl = [slice(None)] * 3
    sl[axis] = index
    return arr3[tuple(sl)]


def boundary_face_vectors(trace: BoundaryTrace):
    """Per boundary side: (area per face, in-surface vector magnitudes) arrays."""
    g = trace.grid
    full = _full_edges(trace)
    out = []
    for axis, index in _side_planes(g):
        comps = []
        for d in range(3):
            if d == axis:
                continue
            E = _plane(g.edge_block(full, d), axis, index)  # 2-D in the remaining axes
            # the in-plane axis transverse to d carries node count; average neighbours
            rem = [ax for ax in range(3) if ax != axis]
            t_ax = rem.index([ax for ax in rem if ax != d][0])
            E = 0.5 * (np.take(E, range(E.shape[t_ax] - 1), axis=t_ax)
                       + np.take(E, range(1, E.shape[t_ax]), axis=t_ax))
            comps.append(E)
        mag = np.sqrt(comps[0] ** 2 + comps[1] ** 2)
        area = g.cell_volume / g.h[axis]
        out.append((area, mag.ravel()))
    return out


def boundary_scalar_lp(grid, face_values, p) -> float:
    """L^p(boundary) of a scalar given on boundary faces (ordered as ``grid.boundary_faces``)."""
    p = parse_p(p)
    v = np.abs(np.asarray(face_values, dtype=float))
    return _pnorm(v, grid.face_areas[grid.boundary_faces], p)


def boundary_node_lp(grid, node_values, p) -> float:
    """L^p(boundary) of nodal data, using the mean of the four corners of each boundary face."""
    p = parse_p(p)
    vals = np.asarray(node_values, dtype=float).reshape(grid.node_shape)
    mags = []
    areas = []
    for axis, index in _side_planes(grid):
        P = _plane(vals, axis, index)
        avg = 0.25 * (P[:-1, :-1] + P[1:, :-1] + P[:-1, 1:] + P[1:, 1:])
        mags.append(np.abs(avg).ravel())
        areas.append(np.full(avg.size, grid.cell_volume / grid.h[axis]))
    return _pnorm(np.concatenate(mags), np.concatenate(areas), p)


def boundary_lp(trace: BoundaryTrace, p) -> float:
    """Face-area-weighted L^p norm of a boundary trace.

    The tangential part is measured as the in-surface vector reconstructed on
    each boundary face; a normal part, when present, is added in quadrature.
    """
    p = parse_p(p)
    g = trace.grid
    parts = boundary_face_vectors(trace)
    mags = np.concatenate([m for _, m in parts])
    areas = np.concatenate([np.full(m.size, a) for a, m in parts])
    if trace.normal is not None:
        # reorder face-wise normal values into the same side-major layout
        normal = np.zeros(g.n_faces)
        normal[g.boundary_faces] = trace.normal
        nv = []
        for axis, index in _side_planes(g):
            nv.append(_plane(g.face_block(normal, axis), axis, index).ravel())
        mags = np.sqrt(mags ** 2 + np.concatenate(nv) ** 2)
    return _pnorm(mags, areas, p)


def tangential_gradient_lp(trace: BoundaryTrace, p) -> float:
    """L^p norm of the in-surface derivatives of the tangential components.

    On every side, each tangential component is differenced along both
    in-plane axes; the resulting scalar derivative fields are combined in the
    l^p sense (sum of p-th powers; max for p = inf).
    """
    p = parse_p(p)
    g = trace.grid
    full = _full_edges(trace)
    mags, weights = [], []
    for axis, index in _side_planes(g):
        rem = [ax for ax in range(3) if ax != axis]
        for d in rem:
            E = _plane(g.edge_block(full, d), axis, index)
            for j, ax in enumerate(rem):
                if E.shape[j] < 2:
                    continue
                D = np.diff(E, axis=j) / g.h[ax]
                mags.append(np.abs(D).ravel())
                weights.append(np.full(D.size, g.cell_volume / g.h[axis]))
    if not mags:
        return 0.0
    return _pnorm(np.concatenate(mags), np.concatenate(weights), p)


def besov_surrogate(trace: BoundaryTrace, s: float, p) -> float:
    """Computable stand-in for the W^{s,p}(boundary) norm, s = +-1/p type.

    Negative s: ``boundary_lp``; positive s: ``boundary_lp + L^p of the
    tangential gradient``.  Both dominate (resp. are dominated by) the true
    fractional norms on smooth data, which is all the estimates need.
    """
    base = boundary_lp(trace, p)
    if s <= 0:
        return base
    return base + tangential_gradient_lp(trace, p)


def report(kind: str, field, exponent, tag="") -> NormReport:
    """Evaluate a norm by name ('lp', 'w1p', 'holder', 'boundary') and wrap it."""
    if kind == "lp":
        v = lp_norm(field, exponent)
    elif kind == "w1p":
        v = w1p_norm(field, exponent)
    elif kind == "holder":
        v = holder_norm(field, exponent)
    elif kind == "boundary":
        v = boundary_lp(field, exponent)
    else:
        raise InvalidArgument(f"unknown norm kind {kind!r}")
    e = float(exponent) if kind == "holder" else parse_p(exponent)
    return NormReport(kind, e, v, tuple(field.grid.cells), tag)

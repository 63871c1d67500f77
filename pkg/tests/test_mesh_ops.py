import numpy as np
import pytest
from hypothesis import given, strategies as st

from curlhomog.errors import GridMismatch, InvalidArgument
from curlhomog.mesh import (BoundaryTrace, CellField, EdgeField, FaceField, NodeField, build_grid,
                            discrete_curl, discrete_div, discrete_grad, normal_trace, surface_divergence,
                            tangential_trace)

dims = st.tuples(*[st.integers(2, 6)] * 3)
extents = st.tuples(*[st.floats(0.25, 3.0)] * 3)


# -- construction ---------------------------------------------------------------

def test_counts_cube():
    g = build_grid(0, 1, 4)
    assert g.n_cells == 64 and g.n_faces == 3 * 16 * 5 == 240
    assert build_grid(0, 1, 2).n_edges == 3 * 2 * 9 == 54


@given(dims)
def test_counts_consistent(n):
    g = build_grid(0, 1, n)
    nx, ny, nz = n
    assert g.n_nodes == (nx + 1) * (ny + 1) * (nz + 1)
    assert g.n_edges == nx * (ny + 1) * (nz + 1) + (nx + 1) * ny * (nz + 1) + (nx + 1) * (ny + 1) * nz
    assert g.n_faces == (nx + 1) * ny * nz + nx * (ny + 1) * nz + nx * ny * (nz + 1)
    # Euler characteristic of a solid box
    assert g.n_nodes - g.n_edges + g.n_faces - g.n_cells == 1


@pytest.mark.parametrize("extent,cells", [(1.0, (1, 4, 4)), (0.0, 4), (-1.0, 4), (1.0, (4, 4, 2.5))])
def test_build_rejects(extent, cells):
    with pytest.raises(InvalidArgument):
        build_grid(0, extent, cells)


def test_enumeration_is_lexicographic(box):
    P = box.node_points
    # C order: the last axis varies fastest
    assert np.all(np.diff(P[: box.cells[2] + 1, 2]) > 0)
    assert np.array_equal(build_grid(box.origin, box.extent, box.cells).edge_points, box.edge_points)


def test_dual_volumes_partition_box(box):
    vol = np.prod(box.extent)
    for w in (box.node_volumes, box.edge_volumes, box.face_volumes, box.cell_volumes):
        assert np.isclose(w.sum() / (3 if w.size in (box.n_edges, box.n_faces) else 1), vol)


def test_field_checks(box, cube8):
    with pytest.raises(InvalidArgument):
        NodeField(box, np.zeros(3))
    with pytest.raises(InvalidArgument):
        EdgeField(box, np.full(box.n_edges, np.nan))
    with pytest.raises(GridMismatch):
        NodeField.zeros(box) + NodeField.zeros(cube8)
    with pytest.raises(GridMismatch):
        discrete_curl(NodeField.zeros(box))


# -- operators on closed forms -----------------------------------------------------

def test_grad_examples(box):
    assert not np.any(discrete_grad(NodeField(box, np.full(box.n_nodes, 3.7))).values)
    gx = discrete_grad(NodeField.from_function(box, lambda P: P[:, 0])).values
    assert np.allclose(gx[box.edge_dirs == 0], 1.0, atol=1e-13, rtol=0)
    assert not np.any(gx[box.edge_dirs != 0])


def test_grad_against_independent_loop():
    g = build_grid(0, 1, 4)
    fn = lambda P: P[:, 0] * P[:, 1]
    got = discrete_grad(NodeField.from_function(g, fn)).values
    for e in range(g.n_edges):
        d = g.edge_dirs[e]
        step = np.zeros(3)
        step[d] = g.h[d] / 2
        m = g.edge_points[e]
        ref = (fn((m + step)[None])[0] - fn((m - step)[None])[0]) / g.h[d]
        assert got[e] == pytest.approx(ref, abs=1e-14)


def test_curl_of_rotation(box):
    c = discrete_curl(EdgeField.from_function(box, lambda P: 0.5 * np.stack([-P[:, 1], P[:, 0], 0 * P[:, 0]], 1)))
    assert np.allclose(c.values[box.face_dirs == 2], 1.0, atol=1e-13)
    assert np.allclose(c.values[box.face_dirs != 2], 0.0, atol=1e-13)
    e1 = EdgeField(box, (box.edge_dirs == 0).astype(float))
    assert not np.any(discrete_curl(e1).values)


def test_div_examples(box):
    d = discrete_div(FaceField.from_function(box, lambda P: np.stack([P[:, 0], 0 * P[:, 0], 0 * P[:, 0]], 1)))
    assert np.allclose(d.values, 1.0, atol=1e-13)
    assert not np.any(discrete_div(FaceField(box, (box.face_dirs == 2).astype(float))).values)


# -- mimetic identities --------------------------------------------------------------

@given(dims, extents)
def test_complex_is_structurally_exact(n, L):
    g = build_grid(0, L, n)
    assert (g.curl @ g.grad).count_nonzero() == 0
    assert (g.div @ g.curl).count_nonzero() == 0


@given(dims, st.integers(0, 2 ** 31))
def test_curl_grad_div_curl_on_random_fields(n, seed):
    g = build_grid(0, 1, n)
    rng = np.random.default_rng(seed)
    p = NodeField(g, rng.standard_normal(g.n_nodes))
    u = EdgeField(g, rng.standard_normal(g.n_edges))
    gp = discrete_grad(p).values
    cu = discrete_curl(u).values
    assert np.abs(g.curl @ gp).max() <= 1e-13 * np.abs(gp).max() / g.h.min()
    assert np.abs(g.div @ cu).max() <= 1e-13 * np.abs(cu).max() / g.h.min()


@given(dims, extents, st.integers(0, 2 ** 31))
def test_boundary_identity_bit_exact(n, L, seed):
    g = build_grid(0, L, n)
    u = EdgeField(g, np.random.default_rng(seed).standard_normal(g.n_edges))
    n_curl = normal_trace(discrete_curl(u)).normal
    assert np.array_equal(n_curl, -surface_divergence(tangential_trace(u)))


@given(dims, st.integers(0, 2 ** 31))
def test_summation_by_parts(n, seed):
    """<curl u, v>_faces - <u, curl^T v>_interior edges depends on the tangential trace of u only."""
    g = build_grid(0, 1, n)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.n_faces)
    u1 = rng.standard_normal(g.n_edges)
    u2 = u1.copy()
    u2[g.interior_edges] = rng.standard_normal(g.interior_edges.size)
    adj = g.curl.T @ (g.face_volumes * v)

    def defect(u):
        return (g.curl @ u) @ (g.face_volumes * v) - u[g.interior_edges] @ adj[g.interior_edges]
    d1, d2 = defect(u1), defect(u2)
    assert abs(d1 - d2) <= 1e-10 * (1 + abs(d1))
    u0 = u1.copy()
    u0[g.boundary_edges] = 0.0
    assert abs(defect(u0)) <= 1e-10 * (1 + np.abs(u1).sum())


# -- traces -----------------------------------------------------------------------

def test_trace_examples():
    g = build_grid(0, 1, 8)
    assert not np.any(tangential_trace(EdgeField.zeros(g)).tangential)
    u = EdgeField.from_function(g, lambda P: np.stack([0 * P[:, 0], 0 * P[:, 0],
                                                       np.sin(np.pi * P[:, 0]) * np.sin(np.pi * P[:, 1])], 1))
    assert np.abs(tangential_trace(u).tangential).max() < 1e-15
    t = tangential_trace(EdgeField(g, (g.edge_dirs == 0).astype(float))).tangential
    bdirs = g.edge_dirs[g.boundary_edges]
    assert np.all(t[bdirs == 0] == 1.0) and not np.any(t[bdirs != 0])
    # every boundary x-edge lies on a side whose normal is orthogonal to e1
    P = g.edge_points[g.boundary_edges][bdirs == 0]
    on_side = np.isclose(P[:, 1], 0) | np.isclose(P[:, 1], 1) | np.isclose(P[:, 2], 0) | np.isclose(P[:, 2], 1)
    assert np.all(on_side)


def test_trace_shape_checks(box):
    with pytest.raises(InvalidArgument):
        BoundaryTrace(box, np.zeros(3))
    f = BoundaryTrace(box, normal=np.ones(box.boundary_faces.size))
    assert not f.is_tangential()
    with pytest.raises(InvalidArgument):
        surface_divergence(f)


@given(dims, extents, st.integers(0, 2 ** 31))
def test_surface_divergence_integrates_to_zero(n, L, seed):
    g = build_grid(0, L, n)
    f = BoundaryTrace(g, np.random.default_rng(seed).standard_normal(g.boundary_edges.size))
    s = surface_divergence(f)
    areas = g.face_areas[g.boundary_faces]
    assert abs(s @ areas) <= 1e-12 * (np.abs(s) @ areas)
    assert not np.any(surface_divergence(BoundaryTrace.zeros(g)))


def test_surface_divergence_is_face_laplacian():
    """n x u = grad_tan q on the side z = 0 gives Div = five-point Laplacian of q.

    The trace stores u.t, i.e. the rotated field, so u_t = (grad q) x n with q
    living at the face centres of that side (zero near its rim).
    """
    n = 6
    g = build_grid(0, 1, n)
    h = 1.0 / n
    q = np.zeros((n, n))
    q[1:-1, 1:-1] = np.random.default_rng(3).standard_normal((n - 2, n - 2))

    def qv(x, y):
        i, j = np.floor(x / h + 1e-9).astype(int), np.floor(y / h + 1e-9).astype(int)
        ok = (i >= 0) & (i < n) & (j >= 0) & (j < n) & (x > 0) & (y > 0)
        out = np.zeros_like(x)
        out[ok] = q[i[ok], j[ok]]
        return out
    u = np.zeros(g.n_edges)
    ep, ed = g.edge_points, g.edge_dirs
    m = np.isclose(ep[:, 2], 0) & (ed == 0)
    u[m] = -(qv(ep[m, 0], ep[m, 1] + h / 2) - qv(ep[m, 0], ep[m, 1] - h / 2)) / h
    m = np.isclose(ep[:, 2], 0) & (ed == 1)
    u[m] = (qv(ep[m, 0] + h / 2, ep[m, 1]) - qv(ep[m, 0] - h / 2, ep[m, 1])) / h
    s = surface_divergence(tangential_trace(EdgeField(g, u)))
    bf = g.boundary_faces
    sel = (g.face_dirs[bf] == 2) & np.isclose(g.face_points[bf, 2], 0)
    x, y = g.face_points[bf][sel, 0], g.face_points[bf][sel, 1]
    lap = (qv(x + h, y) + qv(x - h, y) + qv(x, y + h) + qv(x, y - h) - 4 * qv(x, y)) / h ** 2
    assert np.allclose(s[sel], lap, atol=1e-10)
    assert not np.any(s[~sel])


def test_cell_field_roundtrip(box):
    c = CellField.from_function(box, lambda P: P[:, 0])
    assert np.allclose(c.values, box.cell_points[:, 0])
    assert np.array_equal((2 * c - c).values, c.values)

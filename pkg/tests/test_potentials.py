import numpy as np
import pytest
from hypothesis import given, strategies as st

from curlhomog import maxwell
from curlhomog.coeff import make_family
from curlhomog.errors import InvalidArgument
from curlhomog.harness import catalog
from curlhomog.mesh import BoundaryTrace, EdgeField, FaceField, NodeField, build_grid
from curlhomog.potentials import (dual_box, dual_vector_potential, gradient_bound_sides, gradient_potential,
                                  reduce_lemma31, reduce_lemma32, vector_potential, weak_curl, weak_div)

I3 = np.eye(3)
LAM = make_family("laminate", [2.0, 1.0])


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# -- scalar potential ----------------------------------------------------------

def test_gradient_potential_of_radial_field(box):
    u = EdgeField.from_function(box, lambda P: 2 * P)
    sp_ = gradient_potential(u)
    r2 = NodeField.from_function(box, lambda P: np.sum(P ** 2, axis=1)).values
    w = box.node_volumes
    expect = r2 - np.sum(w * r2) / np.sum(w)
    assert sp_.residual <= 1e-10
    assert np.allclose(sp_.P.values, expect, atol=1e-9)
    assert abs(np.sum(w * sp_.P.values)) < 1e-10


def test_gradient_potential_recovers_random_nodal(cube8, rng):
    p = rng.standard_normal(cube8.n_nodes)
    sp_ = gradient_potential(EdgeField(cube8, cube8.grad @ p))
    w = cube8.node_volumes
    assert np.allclose(sp_.P.values, p - np.sum(w * p) / np.sum(w), atol=1e-8)


def test_gradient_potential_rejects_rotation(cube8):
    u = EdgeField.from_function(cube8, lambda P: np.stack([-P[:, 1], P[:, 0], 0 * P[:, 0]], 1))
    with pytest.raises(InvalidArgument, match="curl"):
        gradient_potential(u)


def test_gradient_potential_zero(cube8):
    sp_ = gradient_potential(EdgeField.zeros(cube8))
    assert not np.any(sp_.P.values) and sp_.residual == 0.0


@given(seed=st.integers(0, 2 ** 31 - 1), n=st.integers(3, 7))
def test_grad_right_inverse(seed, n):
    g = build_grid(0.0, [1.0, 0.7, 1.3], n)
    u = g.grad @ np.random.default_rng(seed).standard_normal(g.n_nodes)
    P = gradient_potential(EdgeField(g, u)).P
    assert _rel(g.grad @ P.values, u) <= 1e-8


# -- vector potential ----------------------------------------------------------

def test_vector_potential_constant_field(box):
    g = FaceField.from_function(box, lambda P: np.tile([0.0, 0.0, 1.0], (P.shape[0], 1)))
    vp = vector_potential(g)
    assert vp.curl_residual <= 1e-12
    # the mean-part formula alone: 1/2 e3 x (x - x_c) has curl e3
    lin = EdgeField.from_function(box, lambda P: 0.5 * np.cross([0.0, 0.0, 1.0], P - box.centre))
    assert np.allclose(box.curl @ lin.values, g.values, atol=1e-12)


def test_vector_potential_gauge_equivalence(cube8, rng):
    u = np.zeros(cube8.n_edges)
    I = cube8.interior_edges
    u[I] = rng.standard_normal(I.size)
    gf = FaceField(cube8, cube8.curl @ u)
    vp = vector_potential(gf)
    assert vp.curl_residual <= 1e-8
    # h and u differ by a discrete gradient
    d = cube8.curl @ (vp.h.values - u)
    assert np.linalg.norm(d) <= 1e-8 * np.linalg.norm(gf.values)
    gradient_potential(vp.h - EdgeField(cube8, u))


def test_vector_potential_is_nearly_divergence_free(cube8, rng):
    gf = FaceField(cube8, cube8.curl @ rng.standard_normal(cube8.n_edges))
    vp = vector_potential(gf)
    assert vp.gauge <= 1e-8 and vp.curl_residual <= 1e-8
    assert vp.diagnostics["extended_div_max"] < 1e-8 * np.abs(gf.values).max() / cube8.h.min()
    assert vp.diagnostics["boundary_flux_gap"] < 1e-12


def test_vector_potential_rejects_divergence(cube8, rng):
    gf = FaceField(cube8, cube8.curl @ rng.standard_normal(cube8.n_edges) + 0.5 * cube8.div.T @ np.ones(cube8.n_cells))
    with pytest.raises(InvalidArgument, match="divergence"):
        vector_potential(gf)


def test_vector_potential_zero(cube8):
    vp = vector_potential(FaceField.zeros(cube8))
    assert not np.any(vp.h.values) and vp.curl_residual == 0.0


@given(seed=st.integers(0, 2 ** 31 - 1), n=st.sampled_from([4, 5, 6]))
def test_curl_right_inverse(seed, n):
    g = build_grid([0.0, 0.5, -1.0], [1.0, 0.5, 0.8], n)
    gf = g.curl @ np.random.default_rng(seed).standard_normal(g.n_edges)
    vp = vector_potential(FaceField(g, gf))
    assert _rel(g.curl @ vp.h.values, gf) <= 1e-8
    assert vp.gauge <= 1e-8


# -- dual box --------------------------------------------------------------------

def test_dual_box_maps_weak_operators(cube8, rng):
    db = dual_box(cube8)
    assert db.grid.cells == (7, 7, 7)
    hf = np.zeros(cube8.n_faces)
    hf[db.face_to_edge] = rng.standard_normal(db.face_to_edge.size)
    wc = weak_curl(FaceField(cube8, hf))[db.edge_to_face]
    dual = db.grid.curl @ hf[db.face_to_edge]
    assert np.allclose(wc, dual, atol=1e-10 * np.abs(dual).max())


def test_dual_vector_potential_inverts_weak_curl(cube8, rng):
    hf = np.zeros(cube8.n_faces)
    If = cube8.interior_faces
    hf[If] = rng.standard_normal(If.size)
    d = EdgeField(cube8, weak_curl(FaceField(cube8, hf)))
    I = cube8.interior_edges
    assert np.abs(weak_div(d)).max() < 1e-10 * np.abs(d.values[I]).max()
    h, vp = dual_vector_potential(d)
    assert not np.any(h.values[cube8.boundary_faces])
    assert _rel(weak_curl(h)[I], d.values[I]) <= 1e-8


def test_dual_box_too_small():
    with pytest.raises(InvalidArgument):
        dual_box(build_grid(0, 1, 2))


# -- gradient estimate -----------------------------------------------------------

def test_gradient_bound_zero(cube8):
    assert gradient_bound_sides(EdgeField.zeros(cube8), I3) == (0.0, 0.0)


@pytest.mark.parametrize("p", [2, 4, "inf"])
def test_gradient_bound_constant_field(cube8, p):
    u = EdgeField.from_function(cube8, lambda P: np.tile([1.0, 0.0, 0.0], (P.shape[0], 1)))
    lhs, rhs = gradient_bound_sides(u, I3, p)
    assert lhs == 0.0 and rhs > 0.0


def test_gradient_bound_harmonic_gradient():
    # p = x^2 - y^2 is harmonic; u = grad p
    ratios = []
    for n in (8, 16):
        g = build_grid(0, 1, n)
        u = EdgeField(g, g.grad @ NodeField.from_function(g, lambda P: P[:, 0] ** 2 - P[:, 1] ** 2).values)
        lhs, rhs = gradient_bound_sides(u, I3, 2)
        assert lhs > 0 and rhs > 0
        ratios.append(lhs / rhs)
    assert max(ratios) / min(ratios) < 2.0


# -- reductions ------------------------------------------------------------------

def _solve(g, A, B, eps, name, params=None, tol=1e-12):
    F, G, f = catalog.make_data(name, g, params)
    prob = maxwell.MaxwellProblem(g, A, B, eps, F, G, f, tol)
    return maxwell.assemble_solve(prob), prob


@pytest.fixture(scope="module")
def manufactured32():
    return _solve(build_grid(0, 1, 32), I3, I3, None, "manufactured")


@pytest.mark.slow
def test_reductions_manufactured(manufactured32):
    sol, prob = manufactured32
    for fn in (reduce_lemma31, reduce_lemma32):
        t = fn(sol, prob)
        assert t.passed, t.as_dict()
        assert max(c.value for c in t.residuals.values()) <= 1e-6
    t = reduce_lemma32(sol, prob)
    assert t.residuals["reconstruction"].value <= 1e-6
    assert set(t.fields) == {"v", "h", "Q"}


def test_reductions_zero_solution():
    g = build_grid(0, 1, 6)
    sol, prob = _solve(g, LAM, LAM, 0.5, "zero")
    for fn, names in ((reduce_lemma31, ("d", "h", "P")), (reduce_lemma32, ("v", "h", "Q"))):
        t = fn(sol, prob)
        assert t.failed_stage is None
        for k in names:
            assert not np.any(t.fields[k].values), k
        assert all(c.value == 0.0 for c in t.residuals.values())


@pytest.mark.parametrize("fn", [reduce_lemma31, reduce_lemma32])
def test_reductions_laminate_norm_chain(fn):
    g = build_grid(0, 0.5, 16)   # eps = 1/8, h = eps/4
    sol, prob = _solve(g, LAM, LAM, 0.125, "smooth")
    t = fn(sol, prob)
    assert t.passed, t.as_dict()
    assert all(np.isfinite(v) for v in t.norms.values())
    assert 0 < t.norms["constant"] < 10
    assert "shell_iterations" not in t.norms


def test_gauge_sanity(manufactured32):
    sol, _ = manufactured32
    vp = vector_potential(sol.curl_u)
    gu = sol.u.grid
    assert _rel(gu.curl @ vp.h.values, sol.curl_u.values) <= 1e-8
    gradient_potential(sol.u - vp.h)   # passes the curl precondition


def test_reductions_require_zero_boundary_data():
    g = build_grid(0, 1, 6)
    F, G, _ = catalog.make_data("smooth", g)
    f = BoundaryTrace.from_function(g, lambda P: np.stack([P[:, 1], 0 * P[:, 0], 0 * P[:, 0]], 1))
    prob = maxwell.MaxwellProblem(g, I3, I3, None, F, G, f, 1e-10)
    sol = maxwell.assemble_solve(prob)
    with pytest.raises(InvalidArgument, match="boundary"):
        reduce_lemma31(sol, prob)
    with pytest.raises(InvalidArgument, match="boundary"):
        reduce_lemma32(sol, prob)


def test_transcript_serializes(manufactured32):
    sol, prob = manufactured32
    d = reduce_lemma31(sol, prob).as_dict()
    assert d["pipeline"] == "lemma31" and d["passed"]
    assert set(d) >= {"residuals", "norms", "diagnostics", "failed_stage"}

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curlhomog.errors import InvalidArgument
from curlhomog.mesh import BoundaryTrace, CellField, EdgeField, FaceField, NodeField, build_grid
from curlhomog.norms import (besov_surrogate, boundary_lp, dual_exponent, gamma_from_q, holder_norm,
                             holder_seminorm_field, lp_norm, parse_p, report, tangential_gradient_lp, w1p_norm)

G8 = build_grid(0, 1, 8)
ps = st.one_of(st.floats(1.05, 12.0), st.just(np.inf))


def test_parse_p():
    assert parse_p("inf") == np.inf and parse_p(4) == 4.0
    for bad in (1.0, 0.5, "x", float("nan")):
        with pytest.raises(InvalidArgument):
            parse_p(bad)


@pytest.mark.parametrize("p", [1.5, 2, 7, np.inf])
def test_constant_one(p):
    assert lp_norm(NodeField(G8, np.ones(G8.n_nodes)), p) == pytest.approx(1.0)
    e1 = EdgeField(G8, (G8.edge_dirs == 0).astype(float))
    assert lp_norm(e1, p) == pytest.approx(1.0)


def test_x1_examples_and_quadrature_order():
    errs = []
    for n in (8, 16, 32):
        g = build_grid(0, 1, n)
        x1 = NodeField(g, g.node_points[:, 0].copy())
        errs.append(abs(lp_norm(x1, 2) - 1 / np.sqrt(3)))
        assert lp_norm(x1, np.inf) == 1.0
        assert w1p_norm(x1, 2) == pytest.approx(1 / np.sqrt(3) + 1, abs=2e-3)
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 1.9)


def test_w1p_zero_and_homogeneity(rng):
    w = NodeField(G8, rng.standard_normal(G8.n_nodes))
    assert w1p_norm(NodeField.zeros(G8), 3) == 0.0
    assert w1p_norm(-2.5 * w, 3) == pytest.approx(2.5 * w1p_norm(w, 3))
    with pytest.raises(InvalidArgument):
        w1p_norm(CellField.zeros(G8), 2)


@given(st.integers(0, 2 ** 31), ps, ps)
def test_monotone_in_p(seed, p1, p2):
    p1, p2 = min(p1, p2), max(p1, p2)
    rng = np.random.default_rng(seed)
    for f in (NodeField(G8, rng.standard_normal(G8.n_nodes)), EdgeField(G8, rng.standard_normal(G8.n_edges)),
              FaceField(G8, rng.standard_normal(G8.n_faces))):
        assert lp_norm(f, p1) <= lp_norm(f, p2) * (1 + 1e-12)


@given(st.integers(0, 2 ** 31), ps, st.floats(-5, 5))
def test_triangle_and_homogeneity(seed, p, c):
    rng = np.random.default_rng(seed)
    a = EdgeField(G8, rng.standard_normal(G8.n_edges))
    b = EdgeField(G8, rng.standard_normal(G8.n_edges))
    assert lp_norm(a + b, p) <= (lp_norm(a, p) + lp_norm(b, p)) * (1 + 1e-12)
    assert lp_norm(c * a, p) == pytest.approx(abs(c) * lp_norm(a, p), rel=1e-12, abs=1e-300)


def test_holder_examples():
    g = build_grid(0, 1, 16)
    c = NodeField(g, np.full(g.n_nodes, -3.0))
    assert holder_norm(c, 0.5) == 3.0
    x1 = NodeField(g, g.node_points[:, 0].copy())
    assert holder_norm(x1, 0.5) == pytest.approx(2.0, abs=1e-12)
    assert holder_norm(2 * x1, 0.5) == pytest.approx(2 * holder_norm(x1, 0.5))
    for gam in (0.0, 1.0):
        with pytest.raises(InvalidArgument):
            holder_norm(x1, gam)


def test_holder_seminorm_sees_local_oscillation():
    g = build_grid(0, 1, 16)
    v = np.zeros(g.n_nodes)
    v[g.n_nodes // 2] = 1.0
    s = holder_seminorm_field(NodeField(g, v), 0.5)
    assert s == pytest.approx(1.0 / np.sqrt(1 / 16))


def test_gamma_and_dual():
    assert gamma_from_q(6) == 0.5
    assert dual_exponent(2) == 2 and dual_exponent(4) == pytest.approx(4 / 3) and dual_exponent(np.inf) == 1.0
    with pytest.raises(InvalidArgument):
        gamma_from_q(3)


def test_boundary_examples():
    g = build_grid(0, 1, 4)
    assert boundary_lp(BoundaryTrace.zeros(g), 2) == 0.0
    # (1,1,1)/sqrt(2) has a unit in-surface component on every side
    f = BoundaryTrace.from_function(g, lambda P: np.ones_like(P) / np.sqrt(2))
    assert boundary_lp(f, 2) == pytest.approx(np.sqrt(6))
    assert tangential_gradient_lp(f, 2) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    r = BoundaryTrace(g, rng.standard_normal(g.boundary_edges.size))
    assert besov_surrogate(r, -0.5, 2) == boundary_lp(r, 2)
    assert besov_surrogate(r, -0.5, 2) <= besov_surrogate(r, 0.5, 2)


def test_report():
    g = build_grid(0, 1, 4)
    r = report("lp", NodeField(g, np.ones(g.n_nodes)), "inf", tag="one")
    assert r.value == 1.0 and r.as_dict()["exponent"] == "inf" and r.resolution == (4, 4, 4)
    h = report("holder", NodeField(g, np.ones(g.n_nodes)), 0.5)
    assert h.value == 1.0

import numpy as np
import pytest

from curlhomog import elliptic
from curlhomog.coeff import make_family
from curlhomog.elliptic import ScalarProblem, ScalarSolution
from curlhomog.errors import GridMismatch, InvalidArgument
from curlhomog.mesh import (EdgeField, FaceField, NodeField, build_grid, discrete_grad, tangential_trace)
from curlhomog.norms import boundary_lp, boundary_node_lp, lp_norm

I3 = np.eye(3)
LAM = make_family("laminate", [2.0, 1.0])


def _sss(P):
    return np.prod(np.sin(np.pi * P), axis=1)


def _grad_sss(P):
    s, c = np.sin(np.pi * P), np.cos(np.pi * P)
    return np.pi * np.stack([c[:, 0] * s[:, 1] * s[:, 2], s[:, 0] * c[:, 1] * s[:, 2], s[:, 0] * s[:, 1] * c[:, 2]], 1)


def test_dirichlet_linear_exactness():
    g = build_grid(0, 1, 6)
    s = elliptic.solve_dirichlet(ScalarProblem(g, I3, None, kind="dirichlet", f=lambda P: P[:, 0]))
    assert np.allclose(s.w.values, g.node_points[:, 0], atol=1e-9)
    assert np.array_equal(s.w.values[g.boundary_nodes], g.node_points[g.boundary_nodes, 0])


def test_dirichlet_constant_flux_is_inert():
    g = build_grid(0, 1, 6)
    gflux = EdgeField(g, -(g.edge_dirs == 0).astype(float))
    s = elliptic.solve_dirichlet(ScalarProblem(g, I3, None, g=gflux))
    assert np.abs(s.w.values).max() < 1e-12


def test_dirichlet_manufactured_order():
    errs = []
    for n in (8, 16, 32):
        g = build_grid(0, 1, n)
        F = EdgeField.from_function(g, _grad_sss)
        s = elliptic.solve_dirichlet(ScalarProblem(g, I3, None, F=F, tol=1e-12))
        errs.append(lp_norm(s.w - NodeField.from_function(g, _sss), 2))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) >= 1.9)


def test_neumann_zero_and_divergence_free():
    g = build_grid(0, 1, 6)
    s = elliptic.solve_neumann(ScalarProblem(g, I3, None, kind="neumann"))
    assert not np.any(s.w.values)
    u = np.random.default_rng(0).standard_normal(g.n_edges)
    u[g.boundary_edges] = 0.0
    gflux = FaceField(g, g.curl @ u)
    s = elliptic.solve_neumann(ScalarProblem(g, I3, None, g=gflux, kind="neumann"))
    assert np.abs(s.w.values).max() < 1e-10


def test_neumann_manufactured_order():
    w_star = lambda P: np.cos(np.pi * P[:, 0])
    grad = lambda P: np.stack([-np.pi * np.sin(np.pi * P[:, 0]), 0 * P[:, 0], 0 * P[:, 0]], 1)
    errs = []
    for n in (8, 16, 32):
        g = build_grid(0, 1, n)
        F = FaceField.from_function(g, grad)
        fb = g.boundary_face_normal_sign * F.values[g.boundary_faces]
        s = elliptic.solve_neumann(ScalarProblem(g, I3, None, F=F, kind="neumann", f=fb, tol=1e-12))
        ref = w_star(g.cell_points)
        assert abs(np.mean(s.w.values)) < 1e-12
        errs.append(np.sqrt(np.mean((s.w.values - (ref - ref.mean())) ** 2)))
    assert np.all(np.log2(np.array(errs[:-1]) / errs[1:]) >= 1.9)


def test_neumann_compatibility_enforced():
    g = build_grid(0, 1, 4)
    with pytest.raises(InvalidArgument):
        elliptic.solve_neumann(ScalarProblem(g, I3, None, kind="neumann", f=np.ones(g.boundary_faces.size)))


def test_problem_validation():
    g = build_grid(0, 1, 4)
    with pytest.raises(GridMismatch):
        ScalarProblem(g, I3, None, g=FaceField.zeros(g), kind="dirichlet")
    with pytest.raises(InvalidArgument):
        ScalarProblem(g, I3, None, kind="robin")
    with pytest.raises(InvalidArgument):
        ScalarProblem(g, I3, -1.0)
    with pytest.raises(InvalidArgument):
        ScalarProblem(g, I3, None, f=np.zeros(3)).boundary_values()


def test_residual_reevaluation():
    g = build_grid(0, 0.5, 8)
    F = EdgeField.from_function(g, lambda P: np.sin(3 * P))
    p = ScalarProblem(g, LAM, 0.25, F=F)
    s = elliptic.solve_dirichlet(p)
    assert elliptic.dirichlet_residual(p, s) <= 10 * p.tol
    Ff = FaceField.from_function(g, lambda P: np.sin(3 * P))
    fb = g.boundary_face_normal_sign * Ff.values[g.boundary_faces]
    q = ScalarProblem(g, make_family("trig", [2.0, 1.0], skew=[0.2, 0.1, 0.0]), 0.25, F=Ff, kind="neumann", f=fb)
    t = elliptic.solve_neumann(q)
    assert elliptic.neumann_residual(q, t) <= 10 * q.tol
    assert elliptic.solve_scalar(q).w.values == pytest.approx(t.w.values)


def test_dirichlet_corrector_examples():
    g = build_grid(0, 0.5, 8)
    for s, k in zip(elliptic.dirichlet_corrector(I3, None, g), range(3)):
        assert np.array_equal(s.w.values, g.node_points[:, k]) and s.iterations == 0
        assert elliptic.lipschitz_report(s) == pytest.approx(1.0, abs=1e-14)
    phi = elliptic.dirichlet_corrector(LAM, 0.25, g)
    for k in (1, 2):
        assert np.array_equal(phi[k].w.values, g.node_points[:, k])
    assert phi[0].iterations > 0 and np.isfinite(elliptic.lipschitz_report(phi[0]))


def test_lipschitz_examples():
    g = build_grid(0, 1, 32)
    mk = lambda w: ScalarSolution(w, discrete_grad(w), 0.0, 0)
    assert elliptic.lipschitz_report(mk(NodeField(g, g.node_points[:, 0].copy()))) == pytest.approx(1.0)
    assert elliptic.lipschitz_report(mk(NodeField.zeros(g))) == 0.0
    L = elliptic.lipschitz_report(mk(NodeField.from_function(g, lambda P: np.sin(np.pi * P[:, 0]))))
    assert L == pytest.approx(np.pi, rel=2e-3) and L < np.pi


# -- uniform-in-eps proxies -------------------------------------------------------------------

EPS = (0.25, 0.125, 0.0625)


def _smooth(P):
    s = 2 * P  # box [0, 0.5]^3
    return np.stack([np.sin(np.pi * s[:, 1]) + 0.5, np.sin(np.pi * s[:, 2]), np.cos(np.pi * s[:, 0])], 1)


def _boundary_w(P):
    return np.cos(np.pi * P[:, 0]) * P[:, 1]


@pytest.fixture(scope="module")
def scalar_sweep():
    out = {"dirichlet": [], "neumann": [], "corrector": []}
    for eps in EPS:
        g = build_grid(0, 0.5, round(0.5 * 8 / eps))
        gE = EdgeField.from_function(g, lambda P: 0.3 * _smooth(P)[:, ::-1])
        FE = EdgeField.from_function(g, _smooth)
        p = ScalarProblem(g, LAM, eps, g=gE, F=FE, f=_boundary_w)
        s = elliptic.solve_dirichlet(p)
        bvals = p.boundary_values()
        lift = np.zeros(g.n_nodes)
        lift[g.boundary_nodes] = bvals
        data = {}
        for q in (2, 4):
            trace_grad = boundary_lp(tangential_trace(discrete_grad(NodeField(g, lift))), q)
            data[q] = lp_norm(gE, q) + lp_norm(FE, q) + boundary_node_lp(g, lift, q) + trace_grad
        out["dirichlet"].append({q: lp_norm(s.grad, q) / data[q] for q in (2, 4)} |
                                {"inf": elliptic.lipschitz_report(s)})
        gF = FaceField.from_function(g, lambda P: 0.3 * _smooth(P)[:, ::-1])
        FF = FaceField.from_function(g, _smooth)
        fb = g.boundary_face_normal_sign * FF.values[g.boundary_faces]  # compatible by construction
        t = elliptic.solve_neumann(ScalarProblem(g, LAM, eps, g=gF, F=FF, kind="neumann", f=fb))
        out["neumann"].append({q: lp_norm(t.grad, q) / (lp_norm(gF, q) + lp_norm(FF, q)) for q in (2, 4)} |
                              {"inf": elliptic.lipschitz_report(t)})
        out["corrector"].append(max(elliptic.lipschitz_report(s) for s in elliptic.dirichlet_corrector(LAM, eps, g)))
    return out


def _spread(vals):
    return max(vals) / min(vals)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["dirichlet", "neumann"])
@pytest.mark.parametrize("q", [2, 4, "inf"])
def test_uniform_gradient_bounds(scalar_sweep, kind, q):
    assert _spread([r[q] for r in scalar_sweep[kind]]) <= 2.0


@pytest.mark.slow
def test_corrector_lipschitz_bounded(scalar_sweep):
    assert _spread(scalar_sweep["corrector"]) <= 2.0

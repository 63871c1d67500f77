"""The verification suite: every module's invariants on a small grid ladder.

Each check records a measured value, a threshold and a comparison; the
report is written as ``verify.csv`` (``check,value,threshold,passed``) plus a
JSON document whose header is the effective configuration.  All inputs are
seeded, so two runs with the same configuration produce identical bytes.

``verify.inject_fault = "orientation"`` flips the sign convention of the
y-directed edges inside the curl matrix used by the mimetic checks; those
checks must then fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import cell, elliptic, maxwell, potentials
from ..coeff import constant_field, make_family
from ..errors import InvalidArgument
from ..mesh import (CellField, EdgeField, FaceField, NodeField, build_grid, surface_divergence,
                    tangential_trace)
from ..norms import lp_norm
from . import catalog
from .config import ExperimentConfig
from .experiments import _conv_verdict, _write_csv, data_norms, summarize

FAULTS = (None, "orientation")
VERIFY_COLUMNS = ["check", "value", "threshold", "passed"]


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    op: str = "<="   # value <op> threshold

    @property
    def passed(self) -> bool:
        v = self.value
        if not math.isfinite(v):
            return False
        return {"<=": v <= self.threshold, ">=": v >= self.threshold, "==": v == self.threshold}[self.op]

    def row(self) -> dict:
        return {"check": self.name, "value": self.value, "threshold": self.threshold,
                "passed": "true" if self.passed else "false"}


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def csv(self, path=None) -> str:
        return _write_csv(path, VERIFY_COLUMNS, [c.row() for c in self.checks])

    def as_dict(self) -> dict:
        return {"config": self.header, "passed": self.passed, "failures": self.failures,
                "checks": [{**c.row(), "op": c.op} for c in self.checks]}


def _orientation_fault(grid, C):
    """Curl matrix with the y-edge orientation reversed (test hook)."""
    s = np.ones(grid.n_edges)
    o = grid.edge_offsets
    s[o[1]:o[2]] = -1.0
    return (C @ sp.diags(s)).tocsr()


# ---------------------------------------------------------------------------
# individual groups
# ---------------------------------------------------------------------------

def _mimetic(n, fault):
    g = build_grid(0.0, 1.0, n)
    rng = np.random.default_rng(1000 + n)
    C = g.curl if fault is None else _orientation_fault(g, g.curl)
    hmin = float(g.h.min())
    p = rng.standard_normal(g.n_nodes)
    u = rng.standard_normal(g.n_edges)
    gp = g.grad @ p
    cu = C @ u
    out = [CheckResult(f"mimetic_curl_grad_n{n}", float(np.abs(C @ gp).max() / (np.abs(gp).max() / hmin)), 1e-13),
           CheckResult(f"mimetic_div_curl_n{n}", float(np.abs(g.div @ cu).max() / (np.abs(cu).max() / hmin)), 1e-13)]
    n_curl = g.boundary_face_normal_sign * cu[g.boundary_faces]
    gap = n_curl + surface_divergence(tangential_trace(EdgeField(g, u)))
    out.append(CheckResult(f"mimetic_boundary_identity_n{n}",
                           float(np.abs(gap).max() / (np.abs(u).max() / hmin)), 1e-13))
    return out


def _cell(cfg):
    N = cfg.cell_resolution
    lam = make_family("laminate", [2.0, 1.0])
    H = cell.homogenize(lam, N).matrix
    A0, _ = cell.effective_maxwell(lam, lam, N)
    s3 = math.sqrt(3.0)
    out = [CheckResult("cell_laminate_H", float(np.abs(H - np.diag([s3, 2, 2])).max()), 1e-4),
           CheckResult("cell_laminate_A0", float(np.abs(A0.matrix - np.diag([2, s3, s3])).max()), 1e-4)]
    M = np.array([[2.0, 0.3, 0.1], [0.3, 1.5, 0.2], [0.1, 0.2, 1.2]])
    Cf = constant_field(M, "C")
    eA, eB = cell.effective_maxwell(Cf, Cf, 16)
    out.append(CheckResult("cell_constant_identity",
                           float(max(np.abs(eA.matrix - M).max(), np.abs(eB.matrix - M).max())), 1e-10))
    out.append(CheckResult("cell_constant_corrector_zero", float(np.abs(cell.solve_corrector(Cf, 16).chi).max()),
                           0.0, "=="))
    return out


def _manufactured_maxwell(ladder):
    errs, hs, trace = [], [], 0.0
    for n in ladder:
        g = build_grid(0.0, 1.0, n)
        F, G, f = catalog.make_data("manufactured", g)
        I3 = np.eye(3)
        s = maxwell.assemble_solve(maxwell.MaxwellProblem(g, I3, I3, None, F, G, f, 1e-12))
        ue = EdgeField.from_function(g, catalog.exact_solution("manufactured", g))
        errs.append(lp_norm(s.u - ue, 2))
        hs.append(float(g.h.max()))
        trace = max(trace, float(np.abs(s.u.values[g.boundary_edges]).max()))
    order = min(math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(errs) - 1))
    return [CheckResult("maxwell_manufactured_order", order, 0.9, ">="),
            CheckResult("maxwell_trace_zero", trace, 0.0, "==")]


def _wstar(P):
    x, y, z = P.T
    return np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z) + x * y


def _grad_wstar(P):
    x, y, z = P.T
    s, c = np.sin(np.pi * P), np.cos(np.pi * P)
    return np.pi * np.stack([c[:, 0] * s[:, 1] * s[:, 2], s[:, 0] * c[:, 1] * s[:, 2],
                             s[:, 0] * s[:, 1] * c[:, 2]], axis=1) + np.stack([y, x, 0 * z], axis=1)


def _manufactured_scalar(ladder):
    I3 = np.eye(3)
    out = []
    for kind in ("dirichlet", "neumann"):
        errs, hs = [], []
        for n in ladder:
            g = build_grid(0.0, 1.0, n)
            if kind == "dirichlet":
                F = EdgeField.from_function(g, _grad_wstar)
                s = elliptic.solve_dirichlet(elliptic.ScalarProblem(g, I3, None, None, F, kind, _wstar, 1e-12))
                ref = NodeField(g, _wstar(g.node_points))
            else:
                F = FaceField.from_function(g, _grad_wstar)
                fb = g.boundary_face_normal_sign * F.values[g.boundary_faces]
                s = elliptic.solve_neumann(elliptic.ScalarProblem(g, I3, None, None, F, kind, fb, 1e-12))
                w = _wstar(g.cell_points)
                ref = CellField(g, w - np.mean(w))
            errs.append(lp_norm(s.w - ref, 2))
            hs.append(float(g.h.max()))
        order = min(math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(errs) - 1))
        out.append(CheckResult(f"scalar_{kind}_manufactured_order", order, 1.9, ">="))
    return out


def _duality(cfg, n):
    g = build_grid(cfg.origin, cfg.extent, n)
    F, G, _ = catalog.make_data("smooth", g)
    F1, G1, _ = catalog.make_data("polynomial", g)
    eps = cfg.extent[0] * cfg.resolution_factor / n
    out = []
    for label, A in (("symmetric", make_family("laminate", [2.0, 1.0])),
                     ("nonsymmetric", make_family("trig", [2.0, 1.0], skew=[0.3, -0.2, 0.1]))):
        p = maxwell.MaxwellProblem(g, A, A, eps, F, G, None, 1e-10)
        u = maxwell.assemble_solve(p)
        v = maxwell.solve_adjoint(p, F1, G1)
        out.append(CheckResult(f"duality_{label}", maxwell.duality_residual(u, v, F, G, F1, G1), 1e-8))
    return out


def _reductions(cfg, n):
    out = []
    g_unit = build_grid(0.0, 1.0, n)
    F, G, f = catalog.make_data("manufactured", g_unit)
    cases = [("manufactured", maxwell.MaxwellProblem(g_unit, np.eye(3), np.eye(3), None, F, G, f, 1e-12))]
    g = build_grid(cfg.origin, cfg.extent, n)
    F, G, f = catalog.make_data("smooth", g)
    eps = cfg.extent[0] * cfg.resolution_factor / n
    cases.append(("laminate", maxwell.MaxwellProblem(g, cfg.coefficient("A"), cfg.coefficient("B"), eps,
                                                     F, G, f, 1e-12)))
    for label, prob in cases:
        sol = maxwell.assemble_solve(prob)
        for name, fn in (("lemma31", potentials.reduce_lemma31), ("lemma32", potentials.reduce_lemma32)):
            t = fn(sol, prob)
            worst = max((c.value / c.tol for c in t.residuals.values()), default=math.inf)
            if t.failed_stage is not None:
                worst = math.inf
            out.append(CheckResult(f"reduction_{name}_{label}", worst, 1.0))
    return out


def _correctors(cfg, ladder):
    lam = cfg.coefficient("A")
    L = []
    for n in ladder:
        g = build_grid(cfg.origin, cfg.extent, n)
        eps = cfg.extent[0] * cfg.resolution_factor / n
        L.append(max(elliptic.lipschitz_report(s) for s in elliptic.dirichlet_corrector(lam, eps, g)))
    g = build_grid(cfg.origin, cfg.extent, ladder[0])
    Lc = max(elliptic.lipschitz_report(s) for s in elliptic.dirichlet_corrector(np.eye(3), None, g))
    return [CheckResult("corrector_lipschitz_spread", max(L) / min(L), 2.0),
            CheckResult("corrector_constant_lipschitz", abs(Lc - 1.0), 0.0, "==")]


def _potentials(n):
    g = build_grid(0.0, 1.0, n)
    rng = np.random.default_rng(2000 + n)
    gfield = FaceField(g, g.curl @ rng.standard_normal(g.n_edges))
    vp = potentials.vector_potential(gfield)
    r1 = np.linalg.norm(g.curl @ vp.h.values - gfield.values) / np.linalg.norm(gfield.values)
    u = EdgeField(g, g.grad @ rng.standard_normal(g.n_nodes))
    sp_ = potentials.gradient_potential(u)
    r2 = np.linalg.norm(g.grad @ sp_.P.values - u.values) / np.linalg.norm(u.values)
    return [CheckResult("potential_curl_right_inverse", float(r1), 1e-8),
            CheckResult("potential_grad_right_inverse", float(r2), 1e-8)]


def _sweep_and_convergence(cfg, ladder):
    A, B = cfg.coefficient("A"), cfg.coefficient("B")
    eps_list = [cfg.extent[0] * cfg.resolution_factor / n for n in ladder]
    rows, conv = [], []
    effA, effB = cell.effective_maxwell(A, B, cfg.cell_resolution)
    for n, eps in zip(ladder, eps_list):
        g = build_grid(cfg.origin, cfg.extent, n)
        F, G, f = catalog.make_data("smooth", g)
        s = maxwell.assemble_solve(maxwell.MaxwellProblem(g, A, B, eps, F, G, f, cfg.tol))
        for p in (2.0, 4.0):
            nF, nG, nf, nd = data_norms(F, G, f, p, cfg.gamma)
            nu, nc = s.norms(p)
            rows.append({"p": p, "ratio": (nu + nc) / (nF + nG + nf + nd)})
        F, G, f = catalog.make_data("zdirected", g, {"modes": [1, 2]})
        pr = maxwell.MaxwellProblem(g, A, B, eps, F, G, f, cfg.tol)
        ue = maxwell.assemble_solve(pr)
        u0 = maxwell.solve_homogenized(effA, effB, pr)
        conv.append(lp_norm(ue.u - u0.u, 2) / lp_norm(u0.u, 2))
    summ = summarize(rows, float(cfg.raw["sweep"]["factor"]))
    out = [CheckResult(f"sweep_spread_p{k}", v["spread"], v["threshold"]) for k, v in summ.items()]
    orders, verdict = _conv_verdict(conv, eps_list, float(cfg.raw["converge"]["min_order"]))
    out.append(CheckResult("convergence_min_order", min(orders) if verdict == "pass" else -math.inf,
                           float(cfg.raw["converge"]["min_order"]), ">="))
    return out


def _norms():
    errs, hs = [], []
    for n in (8, 16):
        g = build_grid(0.0, 1.0, n)
        errs.append(abs(lp_norm(NodeField(g, g.node_points[:, 0].copy()), 2) - 1 / math.sqrt(3)))
        hs.append(1.0 / n)
    return [CheckResult("norms_quadrature_order", math.log(errs[0] / errs[1]) / math.log(2), 1.9, ">=")]


# ---------------------------------------------------------------------------

def run_verify(cfg: ExperimentConfig) -> VerifyReport:
    fault = cfg.raw["verify"]["inject_fault"]
    if fault not in FAULTS:
        raise InvalidArgument(f"verify.inject_fault must be one of {FAULTS}")
    ladder = [int(n) for n in cfg.raw["verify"]["ladder"]]
    rep = VerifyReport(header=cfg.header())
    for n in sorted({8, *ladder}):
        rep.checks += _mimetic(n, fault)
    rep.checks += _norms()
    rep.checks += _cell(cfg)
    rep.checks += _manufactured_maxwell(ladder)
    rep.checks += _manufactured_scalar(ladder)
    rep.checks += _duality(cfg, ladder[0])
    rep.checks += _reductions(cfg, ladder[0])
    rep.checks += _correctors(cfg, ladder)
    rep.checks += _potentials(ladder[0])
    rep.checks += _sweep_and_convergence(cfg, ladder)
    return rep

"""Experiment drivers behind the command-line modes.

All outputs are deterministic for a fixed configuration: rows are emitted
in configuration order regardless of how many worker threads computed them,
floats are printed with 17 significant digits, and wall-clock timings are
only written when ``output.timing`` is enabled.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import cell, elliptic, maxwell, potentials
from ..coeff import make_family
from ..errors import InvalidArgument, SolverFailure
from ..mesh import EdgeField, FaceField, build_grid, surface_divergence
from ..norms import (boundary_lp, boundary_scalar_lp, holder_norm, lp_norm,
                     tangential_gradient_lp)
from . import catalog
from .config import ExperimentConfig

CSV_HEADER = ("family_A,family_B,eps,h,p,norm_u,norm_curl_u,norm_F,norm_G,norm_f,norm_divf,"
              "ratio,iters,seconds")
COLUMNS = CSV_HEADER.split(",")
HYPOTHESIS_TAG = "outside hypotheses: nonsymmetric A at p=inf"


def fmt(x) -> str:
    """17 significant digits for floats (``inf``/``nan`` spelled out); ints verbatim."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _grid_for_eps(cfg: ExperimentConfig, eps: float):
    return build_grid(cfg.origin, cfg.extent, cfg.cells_for_eps(eps))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([r[c] if isinstance(r[c], str) else fmt(r[c]) for c in header])
    data = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(data)
    return data


# ---------------------------------------------------------------------------
# norms of data per exponent
# ---------------------------------------------------------------------------

def data_norms(F, G, f, p, gamma):
    """``(norm_F, norm_G, norm_f, norm_divf)``.

    Finite p: L^p norms, boundary L^p of f and (surrogate) of Div f.
    p = inf: Hölder C^gamma norms of F and G; for f the sup norm plus the sup
    of its tangential derivatives; sup norm of Div f.
    """
    grid = F.grid
    divf = surface_divergence(f)
    if np.isinf(p):
        nf = boundary_lp(f, p) + tangential_gradient_lp(f, p) if np.any(f.tangential) else 0.0
        return (holder_norm(F, gamma), holder_norm(G, gamma), nf,
                float(np.abs(divf).max(initial=0.0)))
    return (lp_norm(F, p), lp_norm(G, p), boundary_lp(f, p), boundary_scalar_lp(grid, divf, p))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    rows: list
    summary: dict
    failures: list = field(default_factory=list)
    tags: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and all(s["verdict"] == "pass" for s in self.summary.values())


def _sweep_one(cfg: ExperimentConfig, A, B, eps):
    grid = _grid_for_eps(cfg, eps)
    d = cfg.raw["data"]
    F, G, f = catalog.make_data(d["name"], grid, d.get("params"))
    prob = maxwell.MaxwellProblem(grid, A, B, eps, F, G, f, cfg.tol)
    t0 = time.perf_counter()
    sol = maxwell.assemble_solve(prob)
    secs = time.perf_counter() - t0
    rows = []
    for p in cfg.p_list:
        nu, nc = sol.norms(p)
        nF, nG, nf, nd = data_norms(F, G, f, p, cfg.gamma)
        denom = nF + nG + nf + nd
        rows.append({"family_A": A.label, "family_B": B.label, "eps": eps, "h": float(grid.h.max()),
                     "p": p, "norm_u": nu, "norm_curl_u": nc, "norm_F": nF, "norm_G": nG,
                     "norm_f": nf, "norm_divf": nd, "ratio": (nu + nc) / denom if denom > 0 else math.inf,
                     "iters": int(sol.iterations),
                     "seconds": secs if cfg.raw["output"]["timing"] else 0.0})
    return rows


def summarize(rows, factor: float = 2.0) -> dict:
    """Per-p max/min ratio and boundedness verdict; a pure function of the rows."""
    out = {}
    for p in sorted({float(r["p"]) for r in rows}):
        rs = [float(r["ratio"]) for r in rows if float(r["p"]) == p]
        hi, lo = max(rs), min(rs)
        spread = hi / lo if lo > 0 else math.inf
        out[fmt(p)] = {"max_ratio": hi, "min_ratio": lo, "spread": spread, "rows": len(rs),
                       "threshold": factor, "verdict": "pass" if spread <= factor else "fail"}
    return out


def verdicts_from_csv(path_or_text, factor: float = 2.0) -> dict:
    """Recompute the sweep verdicts from a CSV produced by :func:`run_sweep`."""
    text = path_or_text
    if os.path.exists(str(path_or_text)):
        with open(path_or_text) as fh:
            text = fh.read()
    rows = list(csv.DictReader(io.StringIO(text)))
    return summarize(rows, factor)


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    A, B = cfg.coefficient("A"), cfg.coefficient("B")
    failures = []

    def job(eps):
        try:
            return _sweep_one(cfg, A, B, eps)
        except (SolverFailure, InvalidArgument, ArithmeticError) as exc:
            failures.append({"eps": eps, "reason": f"{type(exc).__name__}: {exc}"})
            return []

    rows = [r for rs in _pmap(job, cfg.eps_list, cfg.threads) for r in rs]
    failures.sort(key=lambda f: -f["eps"])
    tags = {}
    if not A.symmetric and any(np.isinf(p) for p in cfg.p_list):
        tags["inf"] = HYPOTHESIS_TAG
    return SweepResult(rows, summarize(rows, float(cfg.raw["sweep"]["factor"])) if rows else {}, failures, tags)


def sweep_csv(result: SweepResult, path=None) -> str:
    return _write_csv(path, COLUMNS, result.rows)


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

CONV_COLUMNS = ["variant", "eps", "h", "rel_error", "order", "iters_eps", "iters_0"]


@dataclass
class ConvergenceResult:
    rows: list
    verdict: str
    orders: list
    A0: np.ndarray
    B0: np.ndarray
    control: dict | None = None

    @property
    def passed(self) -> bool:
        ok = self.verdict == "pass"
        if self.control is not None:
            ok = ok and self.control["verdict"] == "fail"
        return ok


def _conv_verdict(errs, epss, min_order):
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(epss[i] / epss[i + 1])
              if errs[i + 1] > 0 and errs[i] > 0 else math.inf for i in range(len(errs) - 1)]
    decreasing = all(errs[i + 1] < errs[i] for i in range(len(errs) - 1))
    ok = decreasing and all(o >= min_order for o in orders)
    return orders, ("pass" if ok else "fail")


def run_convergence(cfg: ExperimentConfig) -> ConvergenceResult:
    """Relative L^2 distance between the eps-solution and the homogenized solution on each eps-grid."""
    A, B = cfg.coefficient("A"), cfg.coefficient("B")
    effA, effB = cell.effective_maxwell(A, B, cfg.cell_resolution)
    A0, B0 = effA.matrix, effB.matrix
    d = cfg.raw["data"]
    min_order = float(cfg.raw["converge"]["min_order"])
    variants = [("homogenized", A0, B0)]
    if cfg.raw["converge"]["negative_control"]:
        variants.append(("swapped", B0, A0))

    def job(eps):
        grid = _grid_for_eps(cfg, eps)
        F, G, f = catalog.make_data(d["name"], grid, d.get("params"))
        prob = maxwell.MaxwellProblem(grid, A, B, eps, F, G, f, cfg.tol)
        ue = maxwell.assemble_solve(prob)
        out = []
        for name, M1, M2 in variants:
            u0 = maxwell.solve_homogenized(M1, M2, prob)
            err = lp_norm(ue.u - u0.u, 2) / lp_norm(u0.u, 2)
            out.append({"variant": name, "eps": eps, "h": float(grid.h.max()), "rel_error": err,
                        "iters_eps": ue.iterations, "iters_0": u0.iterations})
        return out

    per_eps = _pmap(job, cfg.eps_list, cfg.threads)
    rows, verdicts = [], {}
    for vi, (name, _, _) in enumerate(variants):
        vr = [rs[vi] for rs in per_eps]
        orders, verdict = _conv_verdict([r["rel_error"] for r in vr], [r["eps"] for r in vr], min_order)
        for i, r in enumerate(vr):
            r["order"] = orders[i - 1] if i > 0 else math.nan
        rows.extend(vr)
        verdicts[name] = (orders, verdict)
    control = None
    if "swapped" in verdicts:
        control = {"orders": verdicts["swapped"][0], "verdict": verdicts["swapped"][1]}
    orders, verdict = verdicts["homogenized"]
    return ConvergenceResult(rows, verdict, orders, A0, B0, control)


def convergence_csv(result: ConvergenceResult, path=None) -> str:
    return _write_csv(path, CONV_COLUMNS, result.rows)


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

def run_cell(cfg: ExperimentConfig) -> dict:
    A, B = cfg.coefficient("A"), cfg.coefficient("B")
    N = cfg.cell_resolution
    HA = cell.homogenize(A, N, estimate_error=True)
    effA, effB = cell.effective_maxwell(A, B, N, estimate_error=True)
    doc = {"resolution": N, "tolerance": cfg.tol,
           "A": {"family": A.label, "mu": A.mu, "symmetric": A.symmetric},
           "B": {"family": B.label, "mu": B.mu, "symmetric": B.symmetric},
           "H_A": HA.as_dict(), "A0": effA.as_dict(), "B0": effB.as_dict(),
           "convention": "A0 = inv(H(inv(A))), B0 = H(B); H(M) e_j = <M (grad chi_j + e_j)>"}
    doc["passed"] = bool(all(np.all(np.isfinite(m.matrix)) for m in (HA, effA, effB)))
    return doc


def _single_grid(cfg):
    return build_grid(cfg.origin, cfg.extent, cfg.cells)


def run_solve(cfg: ExperimentConfig, out_dir=None) -> dict:
    grid = _single_grid(cfg)
    A, B = cfg.coefficient("A"), cfg.coefficient("B")
    eps = cfg.eps_list[0]
    d = cfg.raw["data"]
    F, G, f = catalog.make_data(d["name"], grid, d.get("params"))
    prob = maxwell.MaxwellProblem(grid, A, B, eps, F, G, f, cfg.tol)
    sol = maxwell.assemble_solve(prob)
    res = maxwell.residual(prob, sol)
    doc = {"grid": {"origin": list(grid.origin), "extent": list(grid.extent), "cells": list(grid.cells)},
           "family_A": A.label, "family_B": B.label, "eps": eps, "data": d,
           "iterations": sol.iterations, "residual": res,
           "trace_exact": bool(np.array_equal(sol.u.values[grid.boundary_edges], f.tangential)),
           "norms": {}}
    for p in cfg.p_list:
        nu, nc = sol.norms(p)
        doc["norms"][fmt(p)] = {"u": nu, "curl_u": nc}
    exact = catalog.exact_solution(d["name"], grid, d.get("params"))
    if exact is not None and A.constant and B.constant:
        ue = EdgeField.from_function(grid, exact)
        doc["l2_error_vs_closed_form"] = lp_norm(sol.u - ue, 2)
    if cfg.raw["output"]["dump_field"] and out_dir is not None:
        path = os.path.join(out_dir, "u.bin")
        maxwell.write_field_dump(path, sol.u)
        doc["field_dump"] = path
    if cfg.raw["output"]["timing"]:
        doc["seconds"] = sol.seconds
    doc["passed"] = bool(res <= 10 * cfg.tol)
    return doc


def run_reduce(cfg: ExperimentConfig) -> dict:
    grid = _single_grid(cfg)
    A, B = cfg.coefficient("A"), cfg.coefficient("B")
    eps = cfg.eps_list[0]
    d = cfg.raw["data"]
    F, G, f = catalog.make_data(d["name"], grid, d.get("params"))
    prob = maxwell.MaxwellProblem(grid, A, B, eps, F, G, f, cfg.tol)
    sol = maxwell.assemble_solve(prob)
    which = cfg.raw["reduce"]["pipeline"]
    p = cfg.raw["reduce"]["p"]
    out = {"grid": list(grid.cells), "family_A": A.label, "family_B": B.label, "eps": eps, "transcripts": []}
    if which in ("lemma31", "both"):
        out["transcripts"].append(potentials.reduce_lemma31(sol, prob, p).as_dict())
    if which in ("lemma32", "both"):
        out["transcripts"].append(potentials.reduce_lemma32(sol, prob, p).as_dict())
    out["passed"] = all(t["passed"] for t in out["transcripts"])
    return out


def run_scalar(cfg: ExperimentConfig) -> dict:
    """One scalar problem with the catalog's F (and G as flux term), zero boundary data."""
    grid = _single_grid(cfg)
    sc = cfg.raw["scalar"]
    M = make_family(sc["M"]["family"], sc["M"].get("params", []), sc["M"].get("skew")) if sc["M"] else \
        cfg.coefficient("A")
    eps = cfg.eps_list[0]
    d = cfg.raw["data"]
    Ff, Gf, _ = catalog.functions(d["name"], grid, d.get("params"))
    if sc["kind"] == "dirichlet":
        prob = elliptic.ScalarProblem(grid, M, eps, EdgeField.from_function(grid, Gf),
                                      EdgeField.from_function(grid, Ff), "dirichlet", None, cfg.tol)
        s = elliptic.solve_dirichlet(prob)
        res = elliptic.dirichlet_residual(prob, s)
    else:
        F = FaceField.from_function(grid, Ff)
        # prescribe the boundary flux that makes the data compatible
        fb = grid.boundary_face_normal_sign * F.values[grid.boundary_faces]
        g = FaceField.from_function(grid, Gf)
        prob = elliptic.ScalarProblem(grid, M, eps, g, F, "neumann", fb, cfg.tol)
        s = elliptic.solve_neumann(prob)
        res = elliptic.neumann_residual(prob, s)
    doc = {"kind": sc["kind"], "family": M.label, "eps": eps, "iterations": s.iterations, "residual": res,
           "lipschitz": elliptic.lipschitz_report(s), "norms": {}}
    for p in cfg.p_list:
        doc["norms"][fmt(p)] = {"w": lp_norm(s.w, p), "grad_w": lp_norm(s.grad, p)}
    doc["passed"] = bool(res <= 10 * cfg.tol)
    return doc


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def emit_plot_data(results, out_dir) -> list:
    """Plain-text column files: ``eps ratio`` per p for sweeps, ``eps rel_error`` for convergence."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name, lines):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w") as fh:
                fh.write("".join(" ".join(fmt(v) for v in ln) + "\n" for ln in lines))
        except OSError as exc:
            raise OSError(f"cannot write plot data {path}: {exc}") from exc
        written.append(path)

    if isinstance(results, SweepResult):
        for p in sorted({float(r["p"]) for r in results.rows}):
            put(f"sweep_ratio_p{fmt(p)}.dat", [(r["eps"], r["ratio"]) for r in results.rows if float(r["p"]) == p])
    elif isinstance(results, ConvergenceResult):
        for variant, fname in (("homogenized", "convergence.dat"), ("swapped", "convergence_control.dat")):
            lines = [(r["eps"], r["rel_error"]) for r in results.rows if r["variant"] == variant]
            if lines:
                put(fname, lines)
    else:
        raise InvalidArgument(f"no plot data for {type(results).__name__}")
    return written


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")

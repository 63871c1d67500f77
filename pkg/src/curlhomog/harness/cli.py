"""``curl-homog <mode> --config <path> [--out <dir>] [--threads <n>]``

Exit status is 0 iff every verdict of the run passes, 1 if a verdict fails
and 2 for invalid input (bad config, unknown keys, unreadable files).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ..errors import GridMismatch, InvalidArgument
from . import config as cfgmod
from . import experiments as ex
from .verify import run_verify

log = logging.getLogger("curl-homog")


def _parser():
    ap = argparse.ArgumentParser(prog="curl-homog", description="Periodic homogenization laboratory for "
                                 "curl-curl systems: effective coefficients, solves, sweeps, audits.")
    ap.add_argument("mode", choices=cfgmod.MODES)
    ap.add_argument("--config", required=True, help="JSON experiment configuration")
    ap.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for independent rows")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(mode, cfg, out_dir) -> bool:
    """Execute one mode, write its artifacts into ``out_dir``; return the overall verdict."""
    os.makedirs(out_dir, exist_ok=True)
    header = cfg.header()
    if mode == "sweep":
        res = ex.run_sweep(cfg)
        ex.sweep_csv(res, os.path.join(out_dir, "sweep.csv"))
        ex.write_json(os.path.join(out_dir, "sweep_summary.json"),
                      {"config": header, "summary": res.summary, "failures": res.failures, "tags": res.tags,
                       "passed": res.passed})
        ex.emit_plot_data(res, os.path.join(out_dir, "plot"))
        for p, s in res.summary.items():
            log.info("p=%s spread=%.4g verdict=%s", p, s["spread"], s["verdict"])
        return res.passed
    if mode == "converge":
        res = ex.run_convergence(cfg)
        ex.convergence_csv(res, os.path.join(out_dir, "convergence.csv"))
        ex.write_json(os.path.join(out_dir, "convergence_summary.json"),
                      {"config": header, "verdict": res.verdict, "orders": res.orders, "A0": res.A0,
                       "B0": res.B0, "control": res.control, "passed": res.passed})
        ex.emit_plot_data(res, os.path.join(out_dir, "plot"))
        log.info("convergence verdict=%s orders=%s", res.verdict, res.orders)
        return res.passed
    if mode == "verify":
        rep = run_verify(cfg)
        rep.csv(os.path.join(out_dir, "verify.csv"))
        ex.write_json(os.path.join(out_dir, "verify_report.json"), rep.as_dict())
        for c in rep.checks:
            if not c.passed:
                log.error("FAILED %s: value=%s threshold=%s (%s)", c.name, ex.fmt(c.value), ex.fmt(c.threshold), c.op)
        return rep.passed
    runner = {"cell": ex.run_cell, "reduce": ex.run_reduce, "scalar": ex.run_scalar}.get(mode)
    doc = ex.run_solve(cfg, out_dir) if mode == "solve" else runner(cfg)
    ex.write_json(os.path.join(out_dir, f"{mode}.json"), {"config": header, **doc})
    return bool(doc["passed"])


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        doc_cfg = cfgmod.load(args.config, args.mode)
        if args.threads is not None:
            if args.threads < 1:
                raise InvalidArgument("--threads must be >= 1")
            doc_cfg.raw["threads"] = args.threads
        out_dir = args.out or doc_cfg.out_dir
        ok = run(args.mode, doc_cfg, out_dir)
    except (InvalidArgument, GridMismatch, OSError) as exc:
        print(f"curl-homog: error: {exc}", file=sys.stderr)
        return 2
    print(f"curl-homog {args.mode}: {'PASS' if ok else 'FAIL'} -> {out_dir}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

"""Experiment configuration: one JSON document, unknown keys rejected.

Every section is optional; missing values take the defaults below and the
effective (filled-in) configuration is written into each report header.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..coeff import CoefficientField, make_family
from ..errors import InvalidArgument
from ..norms import parse_p

MODES = ("cell", "solve", "sweep", "converge", "reduce", "verify", "scalar")

DEFAULTS = {
    "mode": None,
    "grid": {"origin": [0.0, 0.0, 0.0], "extent": [0.5, 0.5, 0.5], "cells": [16, 16, 16],
             "resolution_factor": 8},
    "A": {"family": "laminate", "params": [2.0, 1.0], "skew": None},
    "B": {"family": "laminate", "params": [2.0, 1.0], "skew": None},
    "eps": [0.25, 0.125, 0.0625],
    "p": [2, 4, "inf"],
    "q": 6.0,
    "data": {"name": "smooth", "params": {}},
    "solver": {"tol": 1e-10, "cell_resolution": 32},
    "output": {"dir": "out", "dump_field": False, "timing": False},
    "sweep": {"factor": 2.0},
    "converge": {"min_order": 0.4, "negative_control": False},
    "reduce": {"pipeline": "both", "p": 2},
    "scalar": {"kind": "dirichlet", "M": None},
    "verify": {"ladder": [16, 32], "inject_fault": None},
    "threads": 1,
}


def _merge(defaults, given, path="config"):
    if not isinstance(given, dict):
        raise InvalidArgument(f"{path} must be a JSON object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise InvalidArgument(f"unknown key(s) in {path}: {', '.join(unknown)}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        d = defaults[k]
        if isinstance(d, dict) and k != "params":  # data.params is free-form
            if v is None:
                continue
            out[k] = _merge(d, v, f"{path}.{k}")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _vec3(v, name, cast=float):
    a = np.broadcast_to(np.asarray(v, dtype=float), (3,))
    return [cast(x) for x in a]


@dataclass
class ExperimentConfig:
    raw: dict          # effective configuration (defaults filled in)
    given: dict        # the document as supplied

    # -- accessors -----------------------------------------------------------
    @property
    def mode(self):
        return self.raw["mode"]

    @property
    def origin(self):
        return self.raw["grid"]["origin"]

    @property
    def extent(self):
        return self.raw["grid"]["extent"]

    @property
    def cells(self):
        return self.raw["grid"]["cells"]

    @property
    def resolution_factor(self) -> int:
        return int(self.raw["grid"]["resolution_factor"])

    @property
    def eps_list(self):
        return [float(e) for e in self.raw["eps"]]

    @property
    def p_list(self):
        return [parse_p(p) for p in self.raw["p"]]

    @property
    def tol(self) -> float:
        return float(self.raw["solver"]["tol"])

    @property
    def cell_resolution(self) -> int:
        return int(self.raw["solver"]["cell_resolution"])

    @property
    def out_dir(self):
        return self.raw["output"]["dir"]

    @property
    def threads(self) -> int:
        return int(self.raw["threads"])

    @property
    def gamma(self) -> float:
        return 1.0 - 3.0 / float(self.raw["q"])

    def coefficient(self, which: str) -> CoefficientField:
        spec = self.raw[which]
        return make_family(spec["family"], spec.get("params", []), spec.get("skew"))

    def cells_for_eps(self, eps: float):
        """Cells per axis giving ``h = eps / resolution_factor``; must be integral."""
        out = []
        for L in self.extent:
            c = Fraction(L).limit_denominator(10 ** 6) * self.resolution_factor / Fraction(eps).limit_denominator(10 ** 6)
            if c.denominator != 1:
                raise InvalidArgument(f"extent {L} is not a multiple of h = eps/{self.resolution_factor} for eps={eps}")
            out.append(int(c))
        return out

    def header(self) -> dict:
        return copy.deepcopy(self.raw)


def validate(raw: dict) -> None:
    g = raw["grid"]
    ext = _vec3(g["extent"], "extent")
    if min(ext) <= 0:
        raise InvalidArgument("grid.extent must be positive")
    g["extent"] = ext
    g["origin"] = _vec3(g["origin"], "origin")
    cells = _vec3(g["cells"], "cells", float)
    if any(c != int(c) or c < 2 for c in cells):
        raise InvalidArgument("grid.cells must be integers >= 2")
    g["cells"] = [int(c) for c in cells]
    if int(g["resolution_factor"]) < 2:
        raise InvalidArgument("grid.resolution_factor must be >= 2")
    if not isinstance(raw["eps"], list) or not raw["eps"]:
        raise InvalidArgument("eps must be a non-empty list")
    for e in raw["eps"]:
        if not (isinstance(e, (int, float)) and 0 < e <= 1):
            raise InvalidArgument(f"eps values must lie in (0, 1], got {e!r}")
    if not isinstance(raw["p"], list) or not raw["p"]:
        raise InvalidArgument("p must be a non-empty list")
    for p in raw["p"]:
        parse_p(p)
    if not float(raw["q"]) > 3:
        raise InvalidArgument("q must exceed 3 (gamma = 1 - 3/q)")
    for which in ("A", "B"):
        spec = raw[which]
        make_family(spec["family"], spec.get("params", []), spec.get("skew"))
    if raw["mode"] is not None and raw["mode"] not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}")
    if raw["reduce"]["pipeline"] not in ("lemma31", "lemma32", "both"):
        raise InvalidArgument("reduce.pipeline must be lemma31, lemma32 or both")
    if raw["scalar"]["kind"] not in ("dirichlet", "neumann"):
        raise InvalidArgument("scalar.kind must be dirichlet or neumann")
    if int(raw["threads"]) < 1:
        raise InvalidArgument("threads must be >= 1")
    ladder = raw["verify"]["ladder"]
    if not isinstance(ladder, list) or len(ladder) < 2 or any(int(n) < 4 for n in ladder):
        raise InvalidArgument("verify.ladder needs at least two resolutions >= 4")


def from_dict(doc: dict, mode: str | None = None) -> ExperimentConfig:
    raw = _merge(DEFAULTS, doc)
    if mode is not None:
        if raw["mode"] is not None and raw["mode"] != mode:
            raise InvalidArgument(f"config mode {raw['mode']!r} conflicts with requested mode {mode!r}")
        raw["mode"] = mode
    validate(raw)
    return ExperimentConfig(raw, copy.deepcopy(doc))


def load(path, mode: str | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: invalid JSON ({exc})") from None
    return from_dict(doc, mode)

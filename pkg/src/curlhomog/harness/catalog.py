"""Named data generators ``(F, G, f)`` for experiments.

Every generator is a closed form in the box-relative coordinates
``s = (x - origin) / extent`` in [0, 1]^3, so one name + parameter set
reproduces the same data on any grid.

``zero``
    F = G = 0, f = 0.
``manufactured``
    F = c (0, 0, sin(pi s1) sin(pi s2)) with c = 1 + (pi/L1)^2 + (pi/L2)^2;
    for A = B = I the solution is u = (0, 0, sin(pi s1) sin(pi s2)) and its
    tangential trace vanishes.  params: ``amplitude`` (1).
``zdirected``
    F = a (0, 0, sin(m1 pi s1) sin(m2 pi s2)), G = 0, f = 0: for coefficients
    laminated along x1 or x2 the problem stays two-dimensional.  params:
    ``amplitude`` (1), ``modes`` ([1, 1]); unequal modes make the solution
    sensitive to the orientation of the effective tensor.
``smooth``
    F = a_F (sin(pi s2) + 1/2, sin(pi s3), sin(pi s1) cos(pi s2)),
    G = a_G (cos(pi s3), sin(pi s1) sin(pi s3), cos(pi s2)), f = 0.
    params: ``aF`` (1), ``aG`` (0.5).
``polynomial``
    F = (s2 s3, s1 s3, s1 s2), G = (s1, s2^2, s3 s1), f = 0.
``boundary``
    f = tangential trace of v = b (sin(pi s2), sin(pi s3), sin(pi s1)), plus the
    ``smooth`` F, G scaled by ``interior`` (0).  params: ``b`` (1), ``interior``.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument
from ..mesh import BoundaryTrace, EdgeField, FaceField

NAMES = ("zero", "manufactured", "zdirected", "smooth", "polynomial", "boundary")


def _rel(grid, P):
    return (P - np.asarray(grid.origin)) / np.asarray(grid.extent)


def _vec(*cols):
    return np.stack(cols, axis=1)


def _smooth_F(grid, aF):
    def F(P):
        s = _rel(grid, P)
        return aF * _vec(np.sin(np.pi * s[:, 1]) + 0.5, np.sin(np.pi * s[:, 2]),
                         np.sin(np.pi * s[:, 0]) * np.cos(np.pi * s[:, 1]))
    return F


def _smooth_G(grid, aG):
    def G(P):
        s = _rel(grid, P)
        return aG * _vec(np.cos(np.pi * s[:, 2]), np.sin(np.pi * s[:, 0]) * np.sin(np.pi * s[:, 2]),
                         np.cos(np.pi * s[:, 1]))
    return G


def functions(name: str, grid, params: dict | None = None):
    """Closed-form ``(F, G, v)`` callables (``v`` supplies the boundary trace, or None)."""
    params = dict(params or {})
    zero = lambda P: np.zeros_like(P)
    L = np.asarray(grid.extent)

    def take(key, default):
        return float(params.pop(key, default))

    if name == "zero":
        out = (zero, zero, None)
    elif name in ("manufactured", "zdirected"):
        a = take("amplitude", 1.0)
        c = 1.0 + (np.pi / L[0]) ** 2 + (np.pi / L[1]) ** 2 if name == "manufactured" else 1.0
        m1, m2 = (1.0, 1.0) if name == "manufactured" else [float(m) for m in params.pop("modes", (1, 1))]

        def F(P):
            s = _rel(grid, P)
            z = np.zeros(P.shape[0])
            return _vec(z, z, a * c * np.sin(m1 * np.pi * s[:, 0]) * np.sin(m2 * np.pi * s[:, 1]))
        out = (F, zero, None)
    elif name == "smooth":
        out = (_smooth_F(grid, take("aF", 1.0)), _smooth_G(grid, take("aG", 0.5)), None)
    elif name == "polynomial":
        def F(P):
            s = _rel(grid, P)
            return _vec(s[:, 1] * s[:, 2], s[:, 0] * s[:, 2], s[:, 0] * s[:, 1])

        def G(P):
            s = _rel(grid, P)
            return _vec(s[:, 0], s[:, 1] ** 2, s[:, 2] * s[:, 0])
        out = (F, G, None)
    elif name == "boundary":
        b = take("b", 1.0)
        k = take("interior", 0.0)

        def v(P):
            s = _rel(grid, P)
            return b * _vec(np.sin(np.pi * s[:, 1]), np.sin(np.pi * s[:, 2]), np.sin(np.pi * s[:, 0]))
        out = (_smooth_F(grid, k), _smooth_G(grid, 0.5 * k), v)
    else:
        raise InvalidArgument(f"unknown data set {name!r}; choose from {NAMES}")
    if params:
        raise InvalidArgument(f"unknown parameter(s) for data set {name!r}: {sorted(params)}")
    return out


def exact_solution(name: str, grid, params: dict | None = None):
    """Closed-form u for the ``manufactured`` set (A = B = I), else None."""
    if name != "manufactured":
        return None
    a = float((params or {}).get("amplitude", 1.0))

    def u(P):
        s = _rel(grid, P)
        z = np.zeros(P.shape[0])
        return _vec(z, z, a * np.sin(np.pi * s[:, 0]) * np.sin(np.pi * s[:, 1]))
    return u


def make_data(name: str, grid, params: dict | None = None):
    """Sample a catalog entry on ``grid``: ``(F EdgeField, G FaceField, f BoundaryTrace)``."""
    F, G, v = functions(name, grid, params)
    f = BoundaryTrace.zeros(grid) if v is None else BoundaryTrace.from_function(grid, v)
    return EdgeField.from_function(grid, F), FaceField.from_function(grid, G), f

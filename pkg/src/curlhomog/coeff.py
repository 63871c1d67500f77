"""Periodic matrix-valued coefficient fields on the unit torus.

A :class:`CoefficientField` is a closed-form rule ``y -> M(y)`` (3x3, 1-periodic
in each coordinate) together with the constants it declares: ellipticity
``mu``, Hoelder exponent ``tau`` and seminorm ``lam``.  Closed forms let any
grid sample the coefficient, including the rescaled ``M(x / eps)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import InvalidArgument, NumericalDegeneracy


@dataclass(frozen=True)
class CoefficientField:
    name: str
    params: tuple
    rule: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    mu: float
    tau: float = 1.0
    lam: float = 0.0
    symmetric: bool = True
    holder: bool = True  # False for fields outside the Hoelder class (raw checkerboard)
    constant: bool = False

    def __call__(self, y) -> np.ndarray:
        """Evaluate at points ``y`` of shape (m, 3) (or (3,)); returns (m, 3, 3)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return self.rule(y)

    def at_scale(self, eps: float) -> Callable[[np.ndarray], np.ndarray]:
        """The tensor field ``x -> M(x / eps)``; ``eps=None`` returns M itself."""
        if eps is None:
            return self
        if not eps > 0:
            raise InvalidArgument(f"eps must be positive, got {eps}")
        return lambda x: self(np.mod(np.asarray(x, dtype=float) / eps, 1.0))

    @property
    def label(self) -> str:
        return f"{self.name}({','.join(f'{p:g}' for p in self.params)})"

    @property
    def transpose(self) -> "CoefficientField":
        if self.symmetric:
            return self
        rule = self.rule
        return replace(self, name=self.name + "^T", rule=lambda y: np.swapaxes(rule(y), -1, -2))


@dataclass
class EllipticityReport:
    min_quotient: float
    max_quotient: float
    worst_point: np.ndarray
    worst_direction: np.ndarray
    passed: bool


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

def _mu_from_range(lo, hi):
    return float(min(lo, 1.0 / hi)) if lo > 0 else float(lo)


def _skew_matrix(k):
    k1, k2, k3 = k
    return np.array([[0.0, k3, -k2], [-k3, 0.0, k1], [k2, -k1, 0.0]])


def _scalar_times_identity(a):
    def rule(y):
        out = np.zeros((y.shape[0], 3, 3))
        v = a(y)
        out[:, 0, 0] = out[:, 1, 1] = out[:, 2, 2] = v
        return out
    return rule


def _smooth_square(t, width):
    # smoothed indicator of the half period where sin(2 pi t) > 0; equal volumes
    return 0.5 + 0.5 * np.tanh(np.sin(2 * np.pi * t) / width) / np.tanh(1.0 / width)


def make_family(name: str, params=(), skew=None) -> CoefficientField:
    """Build a catalogued coefficient family.

    ``constant``
        params: one value (c I), three (diagonal) or nine (row-major matrix).
    ``laminate``
        params ``(c0, c1[, axis])``: ``(c0 + c1 cos 2 pi y_axis) I``.
    ``two_phase``
        params ``(a1, a2, width[, axis])``: equal-volume two-phase laminate
        smoothed with a tanh profile of the given width.
    ``trig``
        params ``(c0, c1)``: ``diag(c0 + c1 cos 2 pi y_i)``.
    ``checkerboard``
        params ``(c0, c1, tau)``: ``(c0 + c1 sgn(q)|q|^tau) I`` with
        ``q = sin 2 pi y1 sin 2 pi y2 sin 2 pi y3``; tau-Hoelder.
    ``raw_checkerboard``
        params ``(c0, c1)``: the discontinuous limit; flagged ``holder=False``.

    ``skew`` adds a constant antisymmetric part (axial vector ``skew``),
    which leaves the quadratic form and the Hoelder seminorm unchanged.
    """
    params = tuple(float(p) for p in params)
    if name == "constant":
        if len(params) == 1:
            M = params[0] * np.eye(3)
        elif len(params) == 3:
            M = np.diag(params)
        elif len(params) == 9:
            M = np.array(params).reshape(3, 3)
        else:
            raise InvalidArgument("constant needs 1, 3 or 9 parameters")
        ev = np.linalg.eigvalsh(0.5 * (M + M.T))
        mu = _mu_from_range(ev[0], ev[-1])
        rule = lambda y, M=M: np.broadcast_to(M, (y.shape[0], 3, 3)).copy()
        fld = CoefficientField(name, params, rule, mu, 1.0, 0.0, bool(np.allclose(M, M.T, atol=0, rtol=0)),
                               constant=True)
    elif name == "laminate":
        if len(params) not in (2, 3):
            raise InvalidArgument("laminate needs (c0, c1[, axis])")
        c0, c1 = params[:2]
        axis = int(params[2]) if len(params) == 3 else 0
        lo, hi = c0 - abs(c1), c0 + abs(c1)
        mu = _mu_from_range(lo, hi)
        a = lambda y: c0 + c1 * np.cos(2 * np.pi * y[:, axis])
        fld = CoefficientField(name, params, _scalar_times_identity(a), mu, 1.0, 2 * np.pi * abs(c1))
    elif name == "two_phase":
        if len(params) not in (3, 4):
            raise InvalidArgument("two_phase needs (a1, a2, width[, axis])")
        a1, a2, w = params[:3]
        axis = int(params[3]) if len(params) == 4 else 0
        if not w > 0:
            raise InvalidArgument("two_phase smoothing width must be positive")
        lo, hi = min(a1, a2), max(a1, a2)
        mu = _mu_from_range(lo, hi)
        a = lambda y: a1 + (a2 - a1) * _smooth_square(y[:, axis], w)
        lam = abs(a2 - a1) * np.pi / (w * np.tanh(1.0 / w))
        fld = CoefficientField(name, params, _scalar_times_identity(a), mu, 1.0, lam)
    elif name == "trig":
        if len(params) != 2:
            raise InvalidArgument("trig needs (c0, c1)")
        c0, c1 = params
        mu = _mu_from_range(c0 - abs(c1), c0 + abs(c1))

        def rule(y, c0=c0, c1=c1):
            out = np.zeros((y.shape[0], 3, 3))
            for i in range(3):
                out[:, i, i] = c0 + c1 * np.cos(2 * np.pi * y[:, i])
            return out
        fld = CoefficientField(name, params, rule, mu, 1.0, 2 * np.pi * abs(c1))
    elif name in ("checkerboard", "raw_checkerboard"):
        raw = name == "raw_checkerboard"
        if len(params) != (2 if raw else 3):
            raise InvalidArgument(f"{name} needs {'(c0, c1)' if raw else '(c0, c1, tau)'}")
        c0, c1 = params[:2]
        tau = 1.0 if raw else params[2]
        if not raw and not 0 < tau <= 1:
            raise InvalidArgument("checkerboard tau must lie in (0, 1]")
        mu = _mu_from_range(c0 - abs(c1), c0 + abs(c1))

        def a(y):
            q = np.prod(np.sin(2 * np.pi * y), axis=1)
            return c0 + c1 * (np.sign(q) if raw else np.sign(q) * np.abs(q) ** tau)
        lam = np.inf if raw else abs(c1) * 2 ** (1 - tau) * (2 * np.pi * np.sqrt(3)) ** tau
        fld = CoefficientField(name, params, _scalar_times_identity(a), mu, tau, lam, holder=not raw)
    else:
        raise InvalidArgument(f"unknown coefficient family {name!r}")

    if not fld.mu > 0:
        raise InvalidArgument(f"{name}{params} is not elliptic (mu={fld.mu:g})")
    if skew is not None and np.any(np.asarray(skew, dtype=float)):
        K = _skew_matrix(np.asarray(skew, dtype=float))
        base = fld.rule
        fld = replace(fld, rule=lambda y: base(y) + K, symmetric=False,
                      params=fld.params + tuple(float(s) for s in skew), name=fld.name + "+skew")
    return fld


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _sample_points(n, d=3, seed=0):
    """Deterministic low-discrepancy points in [0, 1)^d."""
    return qmc.Halton(d=d, scramble=False).random(n + 1)[1:] if seed == 0 else \
        qmc.Halton(d=d, scramble=True, seed=seed).random(n)


def validate_ellipticity(C: CoefficientField, samples: int = 512, tol: float = 1e-12) -> EllipticityReport:
    """Check mu |xi|^2 <= xi.M(y)xi <= |xi|^2 / mu on a deterministic sample.

    For every sampled y the extreme quotients over xi are the eigenvalues of
    the symmetric part, so the directional search is exact.
    """
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    y = np.vstack([np.zeros((1, 3)), _sample_points(samples - 1)]) if samples > 1 else np.zeros((1, 3))
    M = C(y)
    S = 0.5 * (M + np.swapaxes(M, 1, 2))
    w, V = np.linalg.eigh(S)
    i_min, i_max = int(np.argmin(w[:, 0])), int(np.argmax(w[:, -1]))
    lo, hi = float(w[i_min, 0]), float(w[i_max, -1])
    ok_lo = lo >= C.mu * (1 - tol)
    ok_hi = hi <= (1 + tol) / C.mu
    if ok_hi or not ok_lo:
        worst, direction = y[i_min], V[i_min, :, 0]
    else:
        worst, direction = y[i_max], V[i_max, :, -1]
    return EllipticityReport(lo, hi, worst, direction, bool(ok_lo and ok_hi))


def sample_scaled(C: CoefficientField, eps: float, points) -> np.ndarray:
    """``C(x / eps mod 1)`` at each point."""
    if not eps > 0:
        raise InvalidArgument(f"eps must be positive, got {eps}")
    return C.at_scale(eps)(np.atleast_2d(points))


def holder_pairs(n: int, seed: int = 0):
    """First ``n`` pairs of a fixed nested sequence; distances span 1e-6 .. 1."""
    s = qmc.Halton(d=6, scramble=False).random(n + 1)[1:]
    x = s[:, :3]
    z = s[:, 3:] * 2 - 1
    z /= np.maximum(np.linalg.norm(z, axis=1, keepdims=True), 1e-12)
    r = 10.0 ** (-6 * np.mod(s[:, 3] * 7.0, 1.0))
    # every fourth pair is axis-aligned so 1-D features are resolved
    axis_pairs = np.arange(n) % 4 < 3
    e = np.eye(3)[np.arange(n) % 3]
    z = np.where(axis_pairs[:, None], e, z)
    return x, x + r[:, None] * z


def holder_seminorm(C: CoefficientField, tau: float, sample_pairs: int = 4096) -> float:
    """Lower bound of the Hoelder seminorm: max |C(x)-C(y)| / |x-y|^tau (spectral norm)."""
    if not 0 < tau <= 1:
        raise InvalidArgument(f"tau must lie in (0, 1], got {tau}")
    x, y = holder_pairs(sample_pairs)
    d = np.linalg.norm(x - y, axis=1)
    diff = np.linalg.norm(C(x) - C(y), ord=2, axis=(1, 2))
    return float(np.max(diff / d ** tau))


def invert_field(C: CoefficientField, cond_limit: float = 1e12) -> CoefficientField:
    """Pointwise inverse field ``y -> M(y)^{-1}``."""
    probe = C(np.vstack([np.zeros((1, 3)), _sample_points(255)]))
    if not np.all(np.isfinite(probe)) or np.max(np.linalg.cond(probe)) > cond_limit:
        raise NumericalDegeneracy(f"{C.label} has a singular sample")
    rule = C.rule

    def inv_rule(y):
        M = rule(y)
        try:
            return np.linalg.inv(M)
        except np.linalg.LinAlgError as exc:
            raise NumericalDegeneracy(f"{C.label} is singular at a sample point") from exc

    if C.symmetric:
        mu = C.mu
    else:
        # xi.M^{-1}xi = eta.M eta with xi = M eta; bound by |M| over the sample
        Minv = np.linalg.inv(probe)
        S = 0.5 * (Minv + np.swapaxes(Minv, 1, 2))
        w = np.linalg.eigvalsh(S)
        mu = 0.99 * min(w[:, 0].min(), 1.0 / w[:, -1].max())
    name = C.name[:-3] if C.name.endswith("^-1") else C.name + "^-1"
    return CoefficientField(name, C.params, inv_rule, float(mu), C.tau, C.lam / C.mu ** 2,
                            C.symmetric, C.holder, C.constant)


def constant_field(matrix, name="matrix") -> CoefficientField:
    """Wrap a constant 3x3 matrix (e.g. an effective matrix) as a coefficient field."""
    M = np.asarray(matrix, dtype=float)
    if M.shape != (3, 3) or not np.all(np.isfinite(M)):
        raise InvalidArgument(f"expected a finite 3x3 matrix, got shape {M.shape}")
    ev = np.linalg.eigvalsh(0.5 * (M + M.T))
    mu = _mu_from_range(ev[0], ev[-1])
    if not mu > 0:
        raise InvalidArgument(f"matrix is not elliptic (mu={mu:g})")
    return CoefficientField(name, tuple(M.ravel()), lambda y, M=M: np.broadcast_to(M, (y.shape[0], 3, 3)).copy(),
                            mu, 1.0, 0.0, bool(np.array_equal(M, M.T)), constant=True)


def as_tensor(M, eps=None):
    """Return ``(callable points -> (m,3,3), symmetric flag)`` for the coefficient ``M(x/eps)``.

    ``M`` may be a :class:`CoefficientField`, a 3x3 array, or any object with
    a ``matrix`` attribute (an effective matrix).  ``eps=None`` (or inf)
    samples the field at unscaled points.
    """
    if not isinstance(M, CoefficientField):
        M = constant_field(getattr(M, "matrix", M))
    if eps is None or np.isinf(eps) or M.constant:
        return M, M.symmetric
    return M.at_scale(eps), M.symmetric

"""Shared numerical primitives.

Composite-Simpson quadrature with a fixed panel count (bit-reproducible,
adequate for the smooth integrands of this package), a cumulative integral
of the same order for survival-type exponents, a scan-and-bisect root
finder that also reports tangent (double) roots, and central-difference
differentiation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

Function = Callable[[float], float]


class NonFiniteEvaluation(ValueError):
    """A sampled function returned NaN or infinity."""


@dataclass(frozen=True)
class Quadrature:
    """Composite-Simpson rule on a uniform grid with `panel_count` panels."""

    panel_count: int = 4096

    def __post_init__(self) -> None:
        if self.panel_count < 2 or self.panel_count % 2 != 0:
            raise ValueError("panel_count must be even and >= 2")


@dataclass(frozen=True)
class RootScanConfig:
    """Mesh density and refinement tolerances for `find_roots`."""

    scan_points: int = 2000
    abs_tol: float = 1e-10
    max_bisect_iters: int = 200

    def __post_init__(self) -> None:
        if self.scan_points < 2:
            raise ValueError("scan_points must be >= 2")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")


@dataclass(frozen=True)
class Root:
    """A located root; `tangent` marks even-multiplicity (no sign change)."""

    x: float
    tangent: bool = False


DEFAULT_QUADRATURE = Quadrature()
DEFAULT_ROOT_SCAN = RootScanConfig()


def simpson_weights(panel_count: int, h: float) -> np.ndarray:
    """Weights for composite Simpson on `panel_count` panels of width h."""
    w = np.ones(panel_count + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _sample(f, xs: np.ndarray) -> np.ndarray:
    """Evaluate f on all of xs, tolerating scalar-only callables."""
    try:
        vals = np.asarray(f(xs), dtype=float)
        if vals.shape == xs.shape:
            return vals
        if vals.ndim == 0:
            return np.full(xs.shape, float(vals))
    except (TypeError, ValueError):
        pass
    return np.array([float(f(x)) for x in xs])


def integrate(f, a: float, b: float, q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Composite-Simpson approximation of the integral of f over [a, b]."""
    if a > b:
        raise ValueError(f"integration bounds out of order: a={a} > b={b}")
    if a == b:
        return 0.0
    xs = np.linspace(a, b, q.panel_count + 1)
    vals = _sample(f, xs)
    bad = ~np.isfinite(vals)
    if bad.any():
        x_bad = xs[int(np.argmax(bad))]
        raise NonFiniteEvaluation(f"integrand is not finite at x={x_bad!r}")
    h = (b - a) / q.panel_count
    return float(simpson_weights(q.panel_count, h) @ vals)


def cumulative_integral(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral of uniformly sampled values, node by node.

    Each step integrates the quadratic through three neighbouring samples,
    so the result is exact for quadratics and one order better than the
    cumulative trapezoid rule.
    """
    v = np.asarray(values, dtype=float)
    n = v.size - 1
    if n < 1:
        return np.zeros_like(v)
    if n == 1:
        return np.array([0.0, 0.5 * h * (v[0] + v[1])])
    inc = np.empty(n)
    inc[:-1] = (5.0 * v[:-2] + 8.0 * v[1:-1] - v[2:]) * (h / 12.0)
    inc[-1] = (-v[-3] + 8.0 * v[-2] + 5.0 * v[-1]) * (h / 12.0)
    out = np.empty(n + 1)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out


def derivative(f: Function, x: float) -> float:
    """Central difference with step 1e-6 * max(1, |x|)."""
    h = 1e-6 * max(1.0, abs(x))
    fp = float(f(x + h))
    fm = float(f(x - h))
    if not math.isfinite(fp):
        raise NonFiniteEvaluation(f"function is not finite at x={x + h!r}")
    if not math.isfinite(fm):
        raise NonFiniteEvaluation(f"function is not finite at x={x - h!r}")
    return (fp - fm) / (2.0 * h)


def _bisect(g: Function, a: float, b: float, fa: float, fb: float,
            cfg: RootScanConfig) -> float:
    for _ in range(cfg.max_bisect_iters):
        if b - a <= cfg.abs_tol:
            break
        mid = 0.5 * (a + b)
        fm = float(g(mid))
        if not math.isfinite(fm):
            raise NonFiniteEvaluation(f"function is not finite at x={mid!r}")
        if fm == 0.0:
            return mid
        if (fa < 0.0) != (fm < 0.0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _slope(g: Function, x: float) -> float:
    d = 1e-6 * max(1.0, abs(x))
    return float(g(x + d)) - float(g(x - d))


def _golden_min(g: Function, a: float, b: float, cfg: RootScanConfig) -> float:
    """Golden-section minimizer of |g|; fallback when the slope has no
    sign change across the bracket."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = abs(float(g(c))), abs(float(g(d)))
    for _ in range(cfg.max_bisect_iters):
        if b - a <= cfg.abs_tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = abs(float(g(c)))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = abs(float(g(d)))
    return 0.5 * (a + b)


def _refine_extremum(g: Function, a: float, b: float, cfg: RootScanConfig) -> float:
    """Locate the stationary point of g inside [a, b].

    Bisects on the sign of a central-difference slope, which stays reliable
    far below the ~sqrt(eps) floor where value-comparison searches stall.
    """
    pad = 1e-6 * max(1.0, abs(a), abs(b))
    lo, hi = a + pad, b - pad
    if lo >= hi:
        return _golden_min(g, a, b, cfg)
    sa, sb = _slope(g, lo), _slope(g, hi)
    if sa == 0.0:
        return lo
    if sb == 0.0:
        return hi
    if (sa < 0.0) == (sb < 0.0):
        return _golden_min(g, a, b, cfg)
    for _ in range(cfg.max_bisect_iters):
        if hi - lo <= cfg.abs_tol:
            break
        mid = 0.5 * (lo + hi)
        sm = _slope(g, mid)
        if sm == 0.0:
            return mid
        if (sa < 0.0) != (sm < 0.0):
            hi = mid
        else:
            lo, sa = mid, sm
    return 0.5 * (lo + hi)


def find_roots(g: Function, lo: float, hi: float,
               cfg: RootScanConfig = DEFAULT_ROOT_SCAN) -> list[Root]:
    """All roots of g in [lo, hi] found by a uniform scan.

    Sign changes are refined by bisection to `cfg.abs_tol`.  Local minima of
    |g| without a sign change are refined as tangency candidates and
    reported with ``tangent=True`` when the refined |g| falls below
    sqrt(abs_tol).  Non-finite scan nodes are skipped and logged.  Roots are
    returned in increasing order, deduplicated within 10 * abs_tol.
    """
    if not lo < hi:
        raise ValueError(f"scan interval is empty: [{lo}, {hi}]")
    xs = np.linspace(lo, hi, cfg.scan_points)
    vals = np.empty(cfg.scan_points)
    for i, x in enumerate(xs):
        vals[i] = float(g(x))
    finite = np.isfinite(vals)
    if not finite.all():
        for x in xs[~finite]:
            logger.info("find_roots: skipping non-finite node x=%r", x)

    plain: list[float] = []
    tangent: list[float] = []

    for i in range(cfg.scan_points):
        if finite[i] and vals[i] == 0.0:
            plain.append(float(xs[i]))

    for i in range(cfg.scan_points - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        if vals[i] * vals[i + 1] < 0.0:
            plain.append(_bisect(g, float(xs[i]), float(xs[i + 1]),
                                 vals[i], vals[i + 1], cfg))

    accept = math.sqrt(cfg.abs_tol)
    for i in range(1, cfg.scan_points - 1):
        if not (finite[i - 1] and finite[i] and finite[i + 1]):
            continue
        if vals[i] == 0.0 or vals[i - 1] * vals[i] < 0.0 or vals[i] * vals[i + 1] < 0.0:
            continue
        ai, vi = abs(vals[i]), abs(vals[i - 1])
        if not (ai <= vi and ai < abs(vals[i + 1])):
            continue
        x_hat = _refine_extremum(g, float(xs[i - 1]), float(xs[i + 1]), cfg)
        if abs(float(g(x_hat))) <= accept:
            tangent.append(x_hat)

    # tangency sitting on an interval endpoint (a boundary minimum of |g|)
    for j in (0, cfg.scan_points - 1):
        if finite[j] and 0.0 < abs(vals[j]) <= accept:
            neighbor = j + 1 if j == 0 else j - 1
            if finite[neighbor] and abs(vals[j]) <= abs(vals[neighbor]):
                tangent.append(float(xs[j]))

    merged: list[Root] = []
    eps = 10.0 * cfg.abs_tol
    for x, is_tan in sorted([(x, False) for x in plain] + [(x, True) for x in tangent]):
        if merged and abs(x - merged[-1].x) <= eps:
            if merged[-1].tangent and not is_tan:
                merged[-1] = Root(x, False)
            continue
        merged.append(Root(x, is_tan))
    return merged

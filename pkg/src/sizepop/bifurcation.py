"""Equilibrium branches over the inflow parameter and fold location.

A sweep collects the equilibria and their stability tags for each inflow
value and refines every change in the number of positive equilibria to a
fold estimate.  `locate_fold` solves the tangency (net growth = 1 with zero
slope) precisely by bisecting, over the inflow, the defect of the interior
extremum of the net growth rate: the extremal value is monotone in the
inflow because the per-capita inflow term is.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .equilibrium import (DEFAULT_GRID, DEFAULT_QUADRATURE, SizeGrid,
                          find_equilibria, net_growth, net_reproduction)
from .model import ModelIngredients
from .numerics import (DEFAULT_ROOT_SCAN, Quadrature, RootScanConfig,
                       find_roots, _refine_extremum)
from .spectral import classify

logger = logging.getLogger(__name__)

_JUMP_GUARD = 0.5   # nearest-P branch pairings with a larger jump are rejected


@dataclass(frozen=True)
class BranchPoint:
    P_star: float
    classification: str
    tangent: bool = False
    trivial: bool = False


@dataclass(frozen=True)
class Fold:
    C_star: float
    P_fold: float


@dataclass
class BifurcationDiagram:
    entries: list[tuple[float, list[BranchPoint]]] = field(default_factory=list)
    folds: list[Fold] = field(default_factory=list)


def _positive_roots(model: ModelIngredients, C: float, P_lo: float, P_hi: float,
                    quadrature: Quadrature, scan: RootScanConfig) -> list:
    return find_roots(lambda P: net_growth(model, C, P, quadrature) - 1.0,
                      P_lo, P_hi, scan)


def _closest_pair_mid(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return values[0] if values else None
    xs = sorted(values)
    gaps = [(xs[i + 1] - xs[i], 0.5 * (xs[i] + xs[i + 1])) for i in range(len(xs) - 1)]
    gap, mid = min(gaps)
    return mid if gap <= _JUMP_GUARD else None


def sweep(model: ModelIngredients, C_values: Sequence[float], P_hi: float = 50.0, *,
          P_lo: float = 1e-4,
          quadrature: Quadrature = DEFAULT_QUADRATURE,
          grid: SizeGrid = DEFAULT_GRID,
          scan: RootScanConfig = DEFAULT_ROOT_SCAN,
          fold_tol: float = 1e-4,
          classify_points: bool = True) -> BifurcationDiagram:
    """Branches with stability tags for each inflow value, plus the folds
    found by refining root-count changes between consecutive values.

    The trivial equilibrium exists exactly when the inflow vanishes and is
    reported with the stability implied by the net reproduction limit at
    small populations.  Classification failures are recorded per-point and
    the sweep continues.
    """
    C_values = list(C_values)
    if any(c < 0 for c in C_values):
        raise ValueError("inflow values must be nonnegative")
    if sorted(C_values) != C_values:
        raise ValueError("inflow values must be increasing")

    diagram = BifurcationDiagram()
    counts: list[int] = []
    for C in C_values:
        points = find_equilibria(model, C, P_lo, P_hi, quadrature=quadrature,
                                 grid=grid, scan=scan)
        branch: list[BranchPoint] = []
        if C == 0.0:
            trivial_stable = net_reproduction(model, P_lo, quadrature) < 1.0
            branch.append(BranchPoint(
                P_star=0.0,
                classification="LinearlyStable" if trivial_stable else "LinearlyUnstable",
                trivial=True))
        for eq in points:
            if classify_points:
                try:
                    label = classify(model, eq, quadrature=quadrature, grid=grid,
                                     scan=scan, compute_eigenvalue=False).classification
                except Exception as exc:
                    logger.warning("classification failed at C=%g, P=%g: %s",
                                   C, eq.P_star, exc)
                    label = "ClassificationFailed"
            else:
                label = "Unclassified"
            branch.append(BranchPoint(P_star=eq.P_star, classification=label,
                                      tangent=eq.tangent))
        diagram.entries.append((C, branch))
        counts.append(len(points))

    for i in range(len(C_values) - 1):
        if counts[i] == counts[i + 1]:
            continue
        fold = _refine_count_change(model, C_values[i], C_values[i + 1],
                                    counts[i], counts[i + 1], P_lo, P_hi,
                                    quadrature, scan, fold_tol)
        diagram.folds.append(fold)
    diagram.folds.sort(key=lambda f: f.C_star)
    return diagram


def _refine_count_change(model, C_lo, C_hi, n_lo, n_hi, P_lo, P_hi,
                         quadrature, scan, tol) -> Fold:
    """Bisect the inflow on the root-count predicate to `tol` and estimate
    the fold's P coordinate from the merging pair on the richer side."""
    a, b = C_lo, C_hi
    rich_C = C_lo if n_lo > n_hi else C_hi
    n_rich = max(n_lo, n_hi)
    while b - a > tol:
        mid = 0.5 * (a + b)
        n_mid = len(_positive_roots(model, mid, P_lo, P_hi, quadrature, scan))
        if n_mid == n_lo:
            a = mid
        else:
            b = mid
        if n_mid == n_rich:
            rich_C = mid
    roots = [r.x for r in _positive_roots(model, rich_C, P_lo, P_hi, quadrature, scan)]
    mid = _closest_pair_mid(roots)
    return Fold(C_star=0.5 * (a + b), P_fold=mid if mid is not None else math.nan)


def _window_extremum(model: ModelIngredients, C: float,
                     window: tuple[float, float], use_min: bool,
                     quadrature: Quadrature, scan: RootScanConfig,
                     samples: int = 801) -> tuple[float, float]:
    """(P_hat, Q(P_hat)) where P_hat extremizes the net growth over the
    window; interior extrema are refined to scan.abs_tol."""
    P_vals = np.linspace(window[0], window[1], samples)
    q = np.array([net_growth(model, C, float(P), quadrature) for P in P_vals])
    idx = int(np.argmin(q)) if use_min else int(np.argmax(q))
    P_hat = float(P_vals[idx])
    if 0 < idx < samples - 1:
        g = (lambda P: net_growth(model, C, P, quadrature)) if use_min else \
            (lambda P: -net_growth(model, C, P, quadrature))
        P_hat = _refine_extremum(g, float(P_vals[idx - 1]), float(P_vals[idx + 1]), scan)
    return P_hat, net_growth(model, C, P_hat, quadrature)


def locate_fold(model: ModelIngredients, C_lo: float, C_hi: float,
                P_window: tuple[float, float], *,
                quadrature: Quadrature = DEFAULT_QUADRATURE,
                scan: RootScanConfig = DEFAULT_ROOT_SCAN,
                C_tol: float = 1e-8) -> Fold:
    """Solve the tangency system (net growth equal to 1 with zero slope)
    inside the window.

    Requires the number of equilibria in the window to differ between the
    two inflow bounds.  When roots annihilate as the inflow grows, the
    interior minimum of the net growth rate crosses 1 from below; when
    roots appear, its interior maximum crosses from below.  Either extremal
    defect is strictly increasing in the inflow, so a plain bisection
    pins the fold.
    """
    if not C_lo < C_hi:
        raise ValueError("require C_lo < C_hi")
    lo, hi = P_window
    n_lo = len(find_roots(lambda P: net_growth(model, C_lo, P, quadrature) - 1.0,
                          lo, hi, scan))
    n_hi = len(find_roots(lambda P: net_growth(model, C_hi, P, quadrature) - 1.0,
                          lo, hi, scan))
    if n_lo == n_hi:
        raise ValueError(
            f"no fold in window: {n_lo} equilibria at both C={C_lo} and C={C_hi}")
    use_min = n_hi < n_lo

    def defect(C: float) -> tuple[float, float]:
        P_hat, q = _window_extremum(model, C, P_window, use_min, quadrature, scan)
        return q - 1.0, P_hat

    t_lo, P_lo_hat = defect(C_lo)
    t_hi, P_hi_hat = defect(C_hi)
    if abs(t_lo) <= 1e-9:
        return Fold(C_star=C_lo, P_fold=P_lo_hat)
    if abs(t_hi) <= 1e-9:
        return Fold(C_star=C_hi, P_fold=P_hi_hat)
    if (t_lo < 0.0) == (t_hi < 0.0):
        raise ValueError(
            "no fold in window: the extremal net-growth defect does not "
            f"change sign over [{C_lo}, {C_hi}]")
    a, b, t_a = C_lo, C_hi, t_lo
    P_hat = P_lo_hat
    while b - a > C_tol:
        mid = 0.5 * (a + b)
        t_mid, P_hat = defect(mid)
        if t_mid == 0.0:
            return Fold(C_star=mid, P_fold=P_hat)
        if (t_a < 0.0) != (t_mid < 0.0):
            b = mid
        else:
            a, t_a = mid, t_mid
    C_star = 0.5 * (a + b)
    _, P_hat = defect(C_star)
    return Fold(C_star=C_star, P_fold=P_hat)

"""Stationary analysis: survival profile, net reproduction, expected
lifetime, net growth, and the positive equilibria of the model.

The survival weight pi(s, P) = exp(-int_0^s (gamma_s + mu)/gamma dr) shapes
every stationary profile.  Net reproduction R(P) is the inflow-free net
growth; with inflow C the net growth rate picks up the per-capita term
C * L(P) / P, and equilibria are the positive solutions of
net_growth(P) = 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import ModelIngredients, ModelViolationError, sample_rate
from .numerics import (DEFAULT_QUADRATURE, DEFAULT_ROOT_SCAN, Quadrature,
                       Root, RootScanConfig, cumulative_integral, derivative,
                       find_roots, integrate, simpson_weights)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SizeGrid:
    """Uniform size grid with N cells; nodes s_i = i * m / N."""

    N: int = 1024

    def __post_init__(self) -> None:
        if self.N < 2 or self.N % 2 != 0:
            raise ValueError("N must be even and >= 2")

    def nodes(self, m: float) -> np.ndarray:
        return np.linspace(0.0, m, self.N + 1)

    def spacing(self, m: float) -> float:
        return m / self.N


DEFAULT_GRID = SizeGrid()


@dataclass(frozen=True)
class EquilibriumPoint:
    """A stationary solution: total population, boundary density, sampled
    profile, and the local slope of the net growth rate."""

    P_star: float
    C: float
    p0: float
    profile: np.ndarray
    dQ: float
    tangent: bool = False


def _gamma_nodes(model: ModelIngredients, P: float, nodes: np.ndarray) -> np.ndarray:
    gamma = sample_rate(model.gamma, nodes, P)
    if gamma.min() <= 0.0:
        idx = int(np.argmin(gamma))
        raise ModelViolationError(
            f"gamma <= 0 at s={nodes[idx]!r}, P={P!r} (gamma={gamma[idx]!r})")
    return gamma


def _survival_nodes(model: ModelIngredients, P: float,
                    nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Survival weight on uniform nodes, plus gamma on the same nodes."""
    gamma = _gamma_nodes(model, P, nodes)
    hazard = (sample_rate(model.gamma_s, nodes, P) + sample_rate(model.mu, nodes, P)) / gamma
    h = nodes[1] - nodes[0]
    pi = np.exp(-cumulative_integral(hazard, h))
    return pi, gamma


def survival_pi(model: ModelIngredients, s: float, P: float,
                quadrature: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Probability-like survival weight pi(s, P) in [0, 1]-ish scale."""
    if not 0.0 <= s <= model.m:
        raise ValueError(f"s={s} outside [0, {model.m}]")
    if not P > 0:
        raise ValueError("P must be positive")
    if s == 0.0:
        return 1.0

    def hazard(r):
        gamma = _gamma_nodes(model, P, np.asarray(r, dtype=float))
        return (sample_rate(model.gamma_s, r, P) + sample_rate(model.mu, r, P)) / gamma

    return math.exp(-integrate(hazard, 0.0, s, quadrature))


def _growth_parts(model: ModelIngredients, P: float,
                  quadrature: Quadrature) -> tuple[float, float]:
    """(net reproduction, expected lifetime) from one survival profile."""
    if not P > 0:
        raise ValueError("P must be positive")
    nodes = np.linspace(0.0, model.m, quadrature.panel_count + 1)
    pi, gamma = _survival_nodes(model, P, nodes)
    w = simpson_weights(quadrature.panel_count, nodes[1] - nodes[0])
    beta = sample_rate(model.beta, nodes, P)
    gamma0 = gamma[0]
    return float(w @ (beta * pi)) / gamma0, float(w @ pi) / gamma0


def net_reproduction(model: ModelIngredients, P: float,
                     quadrature: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Expected lifetime offspring per individual at standing population P."""
    return _growth_parts(model, P, quadrature)[0]


def expected_lifetime(model: ModelIngredients, P: float,
                      quadrature: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Expected lifetime of an individual at standing population P."""
    return _growth_parts(model, P, quadrature)[1]


def net_growth(model: ModelIngredients, C: float, P: float,
               quadrature: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Net growth rate: net reproduction plus the per-capita inflow term."""
    if C < 0:
        raise ValueError("inflow C must be nonnegative")
    if not P > 0:
        raise ValueError("P must be positive (per-capita inflow C/P is undefined at 0)")
    R, L = _growth_parts(model, P, quadrature)
    return R + C * L / P


def net_growth_slope(model: ModelIngredients, C: float, P: float,
                     quadrature: Quadrature = DEFAULT_QUADRATURE) -> float:
    """d/dP of the net growth rate.

    Uses the model's partial derivatives when they are analytic; otherwise a
    central difference of `net_growth`, which carries more noise near the
    marginal case.
    """
    if not model.analytic_partials:
        return derivative(lambda p: net_growth(model, C, p, quadrature), P)
    nodes = np.linspace(0.0, model.m, quadrature.panel_count + 1)
    h = nodes[1] - nodes[0]
    w = simpson_weights(quadrature.panel_count, h)
    pi, gamma = _survival_nodes(model, P, nodes)
    gamma_s = sample_rate(model.gamma_s, nodes, P)
    mu = sample_rate(model.mu, nodes, P)
    gamma_P = sample_rate(model.gamma_P, nodes, P)
    gamma_sP = sample_rate(model.gamma_sP, nodes, P)
    mu_P = sample_rate(model.mu_P, nodes, P)
    beta = sample_rate(model.beta, nodes, P)
    beta_P = sample_rate(model.beta_P, nodes, P)

    sensitivity = cumulative_integral(
        (gamma_sP + mu_P) / gamma - gamma_P * (gamma_s + mu) / gamma ** 2, h)
    pi_P = -pi * sensitivity
    gamma0 = gamma[0]
    gamma_P0 = gamma_P[0]

    I_bpi = float(w @ (beta * pi))
    I_pi = float(w @ pi)
    R = I_bpi / gamma0
    L = I_pi / gamma0
    R_prime = float(w @ (beta_P * pi + beta * pi_P)) / gamma0 - I_bpi * gamma_P0 / gamma0 ** 2
    L_prime = float(w @ pi_P) / gamma0 - I_pi * gamma_P0 / gamma0 ** 2
    return R_prime + C * (L_prime / P - L / P ** 2)


def equilibrium_profile(model: ModelIngredients, P_star: float,
                        grid: SizeGrid = DEFAULT_GRID) -> np.ndarray:
    """Stationary density on the grid nodes, normalized so its Simpson
    quadrature on the same grid equals P_star exactly."""
    if not P_star > 0:
        raise ValueError("P_star must be positive")
    nodes = grid.nodes(model.m)
    pi, _ = _survival_nodes(model, P_star, nodes)
    w = simpson_weights(grid.N, grid.spacing(model.m))
    return P_star * pi / float(w @ pi)


def _make_point(model: ModelIngredients, C: float, root: Root,
                quadrature: Quadrature, grid: SizeGrid) -> EquilibriumPoint:
    nodes = np.linspace(0.0, model.m, quadrature.panel_count + 1)
    pi, _ = _survival_nodes(model, root.x, nodes)
    w = simpson_weights(quadrature.panel_count, nodes[1] - nodes[0])
    p0 = root.x / float(w @ pi)
    return EquilibriumPoint(
        P_star=root.x,
        C=C,
        p0=p0,
        profile=equilibrium_profile(model, root.x, grid),
        dQ=net_growth_slope(model, C, root.x, quadrature),
        tangent=root.tangent,
    )


def find_equilibria(model: ModelIngredients, C: float,
                    P_lo: float = 1e-4, P_hi: float = 50.0, *,
                    quadrature: Quadrature = DEFAULT_QUADRATURE,
                    grid: SizeGrid = DEFAULT_GRID,
                    scan: RootScanConfig = DEFAULT_ROOT_SCAN) -> list[EquilibriumPoint]:
    """All positive equilibria in [P_lo, P_hi], in increasing order.

    Tangencies (double roots of net_growth = 1) are flagged.  The trivial
    equilibrium P = 0 exists only without inflow and is never part of this
    scan; an empty list is a valid result.  The scan window excludes 0
    because the per-capita inflow diverges there.
    """
    if not 0 < P_lo < P_hi:
        raise ValueError("require 0 < P_lo < P_hi")
    roots = find_roots(lambda P: net_growth(model, C, P, quadrature) - 1.0,
                       P_lo, P_hi, scan)
    logger.info("net reproduction at scan bound P=%g is %g "
                "(a value below 1 leaves existence beyond the window undecided)",
                P_hi, net_reproduction(model, P_hi, quadrature))
    return [_make_point(model, C, r, quadrature, grid) for r in roots]


def age_form_crosscheck(model: ModelIngredients, P: float, *,
                        quadrature: Quadrature = DEFAULT_QUADRATURE,
                        steps: int = 2048) -> tuple[float, float]:
    """Net reproduction computed along two routes: the size integral and the
    age integral obtained by integrating ds/da = gamma along characteristics
    with classical fourth-order Runge-Kutta."""
    size_form = net_reproduction(model, P, quadrature)

    def inv_gamma(s):
        return 1.0 / _gamma_nodes(model, P, np.asarray(s, dtype=float))

    a_max = integrate(inv_gamma, 0.0, model.m, quadrature)

    def rate(f, s):
        return float(sample_rate(f, min(s, model.m), P))

    def deriv(state):
        s, hazard, _ = state
        return (rate(model.gamma, s), rate(model.mu, s),
                rate(model.beta, s) * math.exp(-hazard))

    state = (0.0, 0.0, 0.0)
    da = a_max / steps
    for _ in range(steps):
        k1 = deriv(state)
        k2 = deriv(tuple(y + 0.5 * da * k for y, k in zip(state, k1)))
        k3 = deriv(tuple(y + 0.5 * da * k for y, k in zip(state, k2)))
        k4 = deriv(tuple(y + da * k for y, k in zip(state, k3)))
        state = tuple(y + (da / 6.0) * (a + 2.0 * b + 2.0 * c + d)
                      for y, a, b, c, d in zip(state, k1, k2, k3, k4))
    return size_form, state[2]

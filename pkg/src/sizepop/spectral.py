"""Linear stability analysis at an equilibrium.

The linearisation is summarized by two kernels: the boundary kernel b(s)
(fertility response of the birth law, including the population-derivative
feedback terms) and the bulk kernel rho(s) (response of transport and
mortality to perturbations of the total population).  Real eigenvalues of
the linearised generator are the real solutions of
``characteristic_value(lambda) = 1``; the sign of the net-growth slope at
the equilibrium decides stability whenever three positivity conditions
hold.  The marginal case (slope zero) is resolved by the quadratic term of
the fertility response.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .equilibrium import (DEFAULT_GRID, EquilibriumPoint, SizeGrid,
                          net_growth_slope, _survival_nodes)
from .model import ModelIngredients, sample_rate
from .numerics import (DEFAULT_QUADRATURE, DEFAULT_ROOT_SCAN, Quadrature,
                       RootScanConfig, cumulative_integral, find_roots,
                       simpson_weights)

logger = logging.getLogger(__name__)

LINEARLY_STABLE = "LinearlyStable"
LINEARLY_UNSTABLE = "LinearlyUnstable"
MARGINAL_ZERO_EIGENVALUE = "MarginalZeroEigenvalue"
INDETERMINATE_POSITIVITY_FAILS = "IndeterminatePositivityFails"

VERDICT_NONLINEARLY_UNSTABLE = "nonlinearly unstable"
VERDICT_DEGENERATE = "inconclusive (degenerate)"

DEFAULT_TOL_MARGIN = 1e-7
_CONDITION_SLACK = 1e-9
_EXP_LIMIT = 700.0


class UnsupportedModelError(ValueError):
    """Raised when a diagnostic is requested outside its model class."""


@dataclass(frozen=True)
class LinearisationData:
    """Kernels of the linearised problem sampled on a uniform grid."""

    s: np.ndarray
    h: float
    b: np.ndarray
    rho_star: np.ndarray
    p_star: np.ndarray
    p_star_prime: np.ndarray
    survival: np.ndarray
    cum_hazard: np.ndarray
    cum_inv_gamma: np.ndarray
    gamma: np.ndarray
    weights: np.ndarray
    equilibrium: EquilibriumPoint

    @property
    def gamma0(self) -> float:
        return float(self.gamma[0])


@dataclass(frozen=True)
class PositivityConditions:
    """The three inequalities backing the stability theorem, with the
    minimal margin observed for each (nonnegative margin = condition met)."""

    boundary_kernel_nonneg: bool
    boundary_kernel_margin: float
    bulk_kernel_nonneg: bool
    bulk_kernel_margin: float
    sensitivity_bounded: bool
    sensitivity_margin: float

    def all_hold(self) -> bool:
        return (self.boundary_kernel_nonneg and self.bulk_kernel_nonneg
                and self.sensitivity_bounded)

    def flags(self) -> tuple[bool, bool, bool]:
        return (self.boundary_kernel_nonneg, self.bulk_kernel_nonneg,
                self.sensitivity_bounded)


@dataclass(frozen=True)
class StabilityReport:
    conditions: PositivityConditions
    K0: float
    dQ: float
    dominant_real_eigenvalue: Optional[float]
    classification: str


@dataclass(frozen=True)
class MarginalDiagnosis:
    """Outcome of the quadratic analysis at a marginal equilibrium."""

    Rpp: float
    one_sided_sign: int
    verdict: str


def _kernels(model: ModelIngredients, eq: EquilibriumPoint,
             nodes: np.ndarray) -> LinearisationData:
    P = eq.P_star
    h = float(nodes[1] - nodes[0])
    n_panels = nodes.size - 1
    pi, gamma = _survival_nodes(model, P, nodes)
    gamma_s = sample_rate(model.gamma_s, nodes, P)
    mu = sample_rate(model.mu, nodes, P)
    hazard = (gamma_s + mu) / gamma
    w = simpson_weights(n_panels, h)

    p0 = P / float(w @ pi)
    p_star = p0 * pi
    p_star_prime = -p_star * hazard  # analytic derivative of the profile

    gamma_P = sample_rate(model.gamma_P, nodes, P)
    gamma_sP = sample_rate(model.gamma_sP, nodes, P)
    mu_P = sample_rate(model.mu_P, nodes, P)
    rho = gamma_sP * p_star + mu_P * p_star + gamma_P * p_star_prime

    beta = sample_rate(model.beta, nodes, P)
    beta_P = sample_rate(model.beta_P, nodes, P)
    gamma0 = float(gamma[0])
    gamma_P0 = float(gamma_P[0])
    b = (beta - gamma_P0 * p0 + float(w @ (beta_P * p_star))) / gamma0

    return LinearisationData(
        s=nodes, h=h, b=b, rho_star=rho, p_star=p_star,
        p_star_prime=p_star_prime, survival=pi,
        cum_hazard=cumulative_integral(hazard, h),
        cum_inv_gamma=cumulative_integral(1.0 / gamma, h),
        gamma=gamma, weights=w, equilibrium=eq,
    )


def linearise(model: ModelIngredients, eq: EquilibriumPoint,
              quadrature: Quadrature = DEFAULT_QUADRATURE) -> LinearisationData:
    """Boundary and bulk kernels of the linearisation at an equilibrium."""
    nodes = np.linspace(0.0, model.m, quadrature.panel_count + 1)
    return _kernels(model, eq, nodes)


def characteristic_value(model: ModelIngredients, eq: EquilibriumPoint,
                         lam: float, *,
                         quadrature: Quadrature = DEFAULT_QUADRATURE,
                         lin: Optional[LinearisationData] = None) -> float:
    """The scalar characteristic function evaluated at a real lambda;
    eigenvalues of the linearised generator solve
    ``characteristic_value == 1``.

    Inner and outer integrals share one Simpson grid; the inner cumulative
    sums keep each evaluation O(grid size).
    """
    if lin is None:
        lin = linearise(model, eq, quadrature)
    exponent = lin.cum_hazard + lam * lin.cum_inv_gamma
    if -exponent.min() > _EXP_LIMIT:
        raise OverflowError(
            f"characteristic function overflows at lambda={lam} "
            f"(transport weight exceeds the representable range)")
    f = np.exp(-exponent)
    w = lin.weights
    S_fb = float(w @ (f * lin.b))
    if not np.any(lin.rho_star):
        return S_fb
    if exponent.max() > _EXP_LIMIT:
        raise OverflowError(
            f"characteristic function overflows at lambda={lam} "
            f"(inverse transport weight exceeds the representable range)")
    inner = cumulative_integral(np.exp(exponent) * lin.rho_star / lin.gamma, lin.h)
    S_fJ = float(w @ (f * inner))
    S_f = float(w @ f)
    S_fbJ = float(w @ (f * lin.b * inner))
    return S_fb * (1.0 + S_fJ) - S_fJ - S_f * S_fbJ


def check_positivity(model: ModelIngredients, eq: EquilibriumPoint, *,
                     grid: SizeGrid = DEFAULT_GRID) -> PositivityConditions:
    """Evaluate the three positivity conditions by sampling on the grid.

    The first requires the boundary kernel to be nonnegative, the second the
    bulk kernel, and the third bounds the accumulated sensitivity of the
    survival profile to the total population from below by -1 (this is what
    makes the characteristic function monotone for lambda >= 0).
    """
    lin = _kernels(model, eq, grid.nodes(model.m))
    P = eq.P_star
    nodes = lin.s
    gamma_s = sample_rate(model.gamma_s, nodes, P)
    mu = sample_rate(model.mu, nodes, P)
    gamma_P = sample_rate(model.gamma_P, nodes, P)
    gamma_sP = sample_rate(model.gamma_sP, nodes, P)
    mu_P = sample_rate(model.mu_P, nodes, P)

    b_margin = float((lin.b * lin.gamma0).min())
    rho_margin = float(lin.rho_star.min())
    sensitivity = cumulative_integral(
        (gamma_sP + mu_P) / lin.gamma
        - gamma_P * (gamma_s + mu) / lin.gamma ** 2, lin.h)
    sens_value = float(lin.weights @ (lin.p_star * sensitivity))
    return PositivityConditions(
        boundary_kernel_nonneg=b_margin >= -_CONDITION_SLACK,
        boundary_kernel_margin=b_margin,
        bulk_kernel_nonneg=rho_margin >= -_CONDITION_SLACK,
        bulk_kernel_margin=rho_margin,
        sensitivity_bounded=sens_value + 1.0 >= -_CONDITION_SLACK,
        sensitivity_margin=sens_value + 1.0,
    )


def dominant_real_eigenvalue(model: ModelIngredients, eq: EquilibriumPoint, *,
                             lam_lo: float = -5.0, lam_hi: float = 20.0,
                             quadrature: Quadrature = DEFAULT_QUADRATURE,
                             scan: RootScanConfig = DEFAULT_ROOT_SCAN,
                             lin: Optional[LinearisationData] = None
                             ) -> Optional[float]:
    """Largest real eigenvalue in [lam_lo, lam_hi], or None if the scan
    finds no real root there (a valid outcome)."""
    if lin is None:
        lin = linearise(model, eq, quadrature)

    def g(lam: float) -> float:
        try:
            return characteristic_value(model, eq, lam, lin=lin) - 1.0
        except OverflowError:
            return math.nan  # skipped and logged by the root scan

    roots = find_roots(g, lam_lo, lam_hi, scan)
    return roots[-1].x if roots else None


def classify(model: ModelIngredients, eq: EquilibriumPoint, *,
             tol_margin: float = DEFAULT_TOL_MARGIN,
             quadrature: Quadrature = DEFAULT_QUADRATURE,
             grid: SizeGrid = DEFAULT_GRID,
             scan: RootScanConfig = DEFAULT_ROOT_SCAN,
             compute_eigenvalue: bool = True) -> StabilityReport:
    """Assemble the stability report for an equilibrium.

    A net-growth slope above `tol_margin` is unstable outright; a slope
    below -tol_margin is stable only if all three positivity conditions
    hold, and indeterminate otherwise (instability never needs the
    conditions, stability does).  |slope| <= tol_margin is the marginal
    zero-eigenvalue case.
    """
    lin = linearise(model, eq, quadrature)
    conditions = check_positivity(model, eq, grid=grid)
    K0 = characteristic_value(model, eq, 0.0, lin=lin)
    dominant = (dominant_real_eigenvalue(model, eq, quadrature=quadrature,
                                         scan=scan, lin=lin)
                if compute_eigenvalue else None)
    dQ = eq.dQ
    if dQ > tol_margin:
        classification = LINEARLY_UNSTABLE
    elif abs(dQ) <= tol_margin:
        classification = MARGINAL_ZERO_EIGENVALUE
    elif conditions.all_hold():
        classification = LINEARLY_STABLE
    else:
        classification = INDETERMINATE_POSITIVITY_FAILS
    return StabilityReport(
        conditions=conditions, K0=K0, dQ=dQ,
        dominant_real_eigenvalue=dominant, classification=classification,
    )


def center_eigenfunction(model: ModelIngredients, eq: EquilibriumPoint,
                         grid: SizeGrid = DEFAULT_GRID, *,
                         tol_margin: float = DEFAULT_TOL_MARGIN) -> np.ndarray:
    """Eigenfunction of the zero eigenvalue on the grid nodes, normalized to
    unit integral of its absolute value.

    Off the marginal case the same formula is still evaluated (with a
    warning); it only spans the kernel when the dominant eigenvalue is 0.
    """
    if abs(eq.dQ) > tol_margin:
        warnings.warn(
            "center_eigenfunction called off the marginal case "
            f"(net-growth slope {eq.dQ!r}); computing formally",
            stacklevel=2)
    lin = _kernels(model, eq, grid.nodes(model.m))
    F = lin.survival
    ratio = cumulative_integral(lin.rho_star / (lin.gamma * F), lin.h)
    w = lin.weights
    const = (1.0 + float(w @ (F * ratio))) / float(w @ F)
    u = F * (const - ratio)
    return u / float(w @ np.abs(u))


def marginal_diagnosis(model: ModelIngredients, eq: EquilibriumPoint, *,
                       quadrature: Quadrature = DEFAULT_QUADRATURE,
                       tol_margin: float = DEFAULT_TOL_MARGIN) -> MarginalDiagnosis:
    """Resolve the marginal case for models whose mortality and growth do
    not depend on the population.

    The curvature of net reproduction at the equilibrium decides: a nonzero
    value permits stationary perturbations on one side only (the side
    opposite to its sign), so the equilibrium is nonlinearly unstable.
    """
    nodes = np.linspace(0.0, model.m, quadrature.panel_count + 1)
    P = eq.P_star
    for name in ("mu_P", "gamma_P", "gamma_sP"):
        vals = sample_rate(getattr(model, name), nodes, P)
        if np.abs(vals).max() > 1e-12:
            raise UnsupportedModelError(
                "marginal diagnosis requires mortality and growth independent "
                f"of the population ({name} is not identically zero)")
    slope = net_growth_slope(model, 0.0, P, quadrature)
    if abs(slope) > tol_margin:
        warnings.warn(
            f"marginal diagnosis at a non-marginal equilibrium (slope {slope!r})",
            stacklevel=2)
    pi, gamma = _survival_nodes(model, P, nodes)
    w = simpson_weights(quadrature.panel_count, nodes[1] - nodes[0])
    beta_PP = sample_rate(model.beta_PP, nodes, P)
    Rpp = float(w @ (beta_PP * pi)) / float(gamma[0])
    weighted = float(w @ (beta_PP * (eq.p0 * pi)))
    if abs(Rpp) <= 1e-10:
        return MarginalDiagnosis(Rpp=Rpp, one_sided_sign=0,
                                 verdict=VERDICT_DEGENERATE)
    return MarginalDiagnosis(Rpp=Rpp, one_sided_sign=-int(math.copysign(1.0, weighted)),
                             verdict=VERDICT_NONLINEARLY_UNSTABLE)

"""Model ingredients: vital rates and the partial derivatives used by the
linearised analysis.

A model supplies fertility ``beta(s, P)``, mortality ``mu(s, P)`` and growth
``gamma(s, P)`` on [0, m] x [0, inf), together with the partials
``beta_P, mu_P, gamma_P, gamma_s, gamma_sP, beta_PP``.  Built-in models carry
analytic partials; expression-defined models synthesize them with central
finite differences.  Rates must evaluate elementwise on numpy arrays of
sizes at a fixed scalar population.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .expressions import VitalRateExpression, parse_rate

RateFn = Callable[[np.ndarray, float], np.ndarray]

# steps for synthesized derivatives; second-order differences use a larger
# step because float cancellation at 1e-6 would drown beta_PP entirely
_STEP_FIRST = 1e-6
_STEP_SECOND = 2e-4


class ModelViolationError(ValueError):
    """A vital-rate assumption (gamma > 0, beta/mu >= 0) failed at runtime."""


@dataclass(frozen=True)
class ModelIngredients:
    """Vital rates with their partial derivatives and the maximal size m."""

    m: float
    beta: RateFn
    mu: RateFn
    gamma: RateFn
    beta_P: RateFn
    mu_P: RateFn
    gamma_P: RateFn
    gamma_s: RateFn
    gamma_sP: RateFn
    beta_PP: RateFn
    analytic_partials: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.m) and self.m > 0):
            raise ValueError("maximal size m must be finite and positive")


def sample_rate(rate: RateFn, s, P: float) -> np.ndarray:
    """Evaluate a rate at array s and scalar P, broadcasting constants."""
    s = np.asarray(s, dtype=float)
    out = np.asarray(rate(s, float(P)), dtype=float)
    if out.shape != s.shape:
        out = np.broadcast_to(out, s.shape).copy() if s.shape else np.asarray(float(out))
    return out


def constant_rate(value: float) -> RateFn:
    def rate(s, P):
        return np.full_like(np.asarray(s, dtype=float), value)
    return rate


_ZERO = constant_rate(0.0)


def builtin_example() -> ModelIngredients:
    """Benchmark model on [0, 6]: unit mortality and growth, and a
    density-dependent fertility whose hump in P produces bistability once
    inflow is switched on.

    The fertility normalization is chosen so the net reproduction function
    reduces to the closed form P^2 exp(2 - P) / 4.
    """
    norm = 3.0 * math.exp(-2.0) - 2.0 * math.exp(-8.0) - 13.0 * math.exp(-14.0)

    def shape(s):
        return s * np.exp(-s) + 0.5

    def beta(s, P):
        return (P * P * math.exp(-P) / norm) * shape(s)

    def beta_P(s, P):
        return ((2.0 * P - P * P) * math.exp(-P) / norm) * shape(s)

    def beta_PP(s, P):
        return ((2.0 - 4.0 * P + P * P) * math.exp(-P) / norm) * shape(s)

    return ModelIngredients(
        m=6.0,
        beta=beta,
        mu=constant_rate(1.0),
        gamma=constant_rate(1.0),
        beta_P=beta_P,
        mu_P=_ZERO,
        gamma_P=_ZERO,
        gamma_s=_ZERO,
        gamma_sP=_ZERO,
        beta_PP=beta_PP,
        analytic_partials=True,
    )


RateSpec = Union[str, VitalRateExpression]


def _as_expression(spec: RateSpec) -> VitalRateExpression:
    return spec if isinstance(spec, VitalRateExpression) else parse_rate(spec)


def _d_dP(f: RateFn) -> RateFn:
    def deriv(s, P):
        h = _STEP_FIRST * max(1.0, abs(P))
        return (f(s, P + h) - f(s, P - h)) / (2.0 * h)
    return deriv


def _d_ds(f: RateFn) -> RateFn:
    def deriv(s, P):
        s = np.asarray(s, dtype=float)
        h = _STEP_FIRST * np.maximum(1.0, np.abs(s))
        return (f(s + h, P) - f(s - h, P)) / (2.0 * h)
    return deriv


def _d2_dP2(f: RateFn) -> RateFn:
    def deriv(s, P):
        h = _STEP_SECOND * max(1.0, abs(P))
        return (f(s, P + h) - 2.0 * f(s, P) + f(s, P - h)) / (h * h)
    return deriv


def _d2_dsdP(f: RateFn) -> RateFn:
    def deriv(s, P):
        s = np.asarray(s, dtype=float)
        a = _STEP_SECOND * np.maximum(1.0, np.abs(s))
        b = _STEP_SECOND * max(1.0, abs(P))
        return (f(s + a, P + b) - f(s - a, P + b)
                - f(s + a, P - b) + f(s - a, P - b)) / (4.0 * a * b)
    return deriv


def from_expressions(m: float, beta: RateSpec, mu: RateSpec,
                     gamma: RateSpec) -> ModelIngredients:
    """Build a model from expression-defined rates; partial derivatives are
    synthesized by central differences."""
    b = _as_expression(beta)
    u = _as_expression(mu)
    g = _as_expression(gamma)
    return ModelIngredients(
        m=float(m),
        beta=b,
        mu=u,
        gamma=g,
        beta_P=_d_dP(b),
        mu_P=_d_dP(u),
        gamma_P=_d_dP(g),
        gamma_s=_d_ds(g),
        gamma_sP=_d2_dsdP(g),
        beta_PP=_d2_dP2(b),
        analytic_partials=False,
    )


@dataclass(frozen=True)
class Violation:
    rate: str
    s: float
    P: float
    value: float
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations


_MAX_RECORDED = 100


def validate(model: ModelIngredients, P_max: float,
             s_samples: int = 200, P_samples: int = 200) -> ValidationReport:
    """Sample the rates on an (s, P) lattice and report sign violations.

    Nonnegativity is checked by sampling, not proven; the report never
    raises.
    """
    if not P_max > 0:
        raise ValueError("P_max must be positive")
    report = ValidationReport()
    s_grid = np.linspace(0.0, model.m, s_samples)
    P_grid = np.linspace(0.0, P_max, P_samples)

    def record(rate, s, P, value, message):
        if len(report.violations) >= _MAX_RECORDED:
            report.truncated = True
            return
        report.violations.append(Violation(rate, float(s), float(P), float(value), message))

    checks = (
        ("beta", model.beta, lambda v: v < 0.0, "beta < 0"),
        ("mu", model.mu, lambda v: v < 0.0, "mu < 0"),
        ("gamma", model.gamma, lambda v: v <= 0.0, "gamma <= 0"),
    )
    for name, rate, is_bad, message in checks:
        for P in P_grid:
            try:
                vals = sample_rate(rate, s_grid, P)
            except Exception as exc:  # report, never abort
                record(name, s_grid[0], P, math.nan, f"evaluation failed: {exc}")
                continue
            bad = ~np.isfinite(vals)
            for idx in np.nonzero(bad)[0]:
                record(name, s_grid[idx], P, vals[idx], "non-finite value")
            bad = np.isfinite(vals) & is_bad(vals)
            for idx in np.nonzero(bad)[0]:
                record(name, s_grid[idx], P, vals[idx], message)
    return report

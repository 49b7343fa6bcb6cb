"""The acceptance study: every headline claim of the toolkit checked
against an independent oracle, with one pass/fail result per check.

The oracles never go through the code paths they check: net reproduction
of the benchmark model has the closed form P^2 exp(2-P) / 4 (obtained by
integrating the benchmark rates symbolically), equilibria come from a
dense million-point scan of that closed form, and the fold solves
P^2 (3-P) exp(2-P) = 4 with C* = P^3 (2-P) exp(2-P) / (4 (1 - e^-6)).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .equilibrium import (EquilibriumPoint, SizeGrid, age_form_crosscheck,
                          equilibrium_profile, expected_lifetime,
                          find_equilibria, net_growth, net_reproduction,
                          _survival_nodes)
from .model import ModelIngredients, builtin_example, sample_rate
from .numerics import Quadrature, RootScanConfig, simpson_weights
from .simulator import SimulationConfig, Trajectory, simulate
from .spectral import (LINEARLY_STABLE, LINEARLY_UNSTABLE,
                       MARGINAL_ZERO_EIGENVALUE, VERDICT_NONLINEARLY_UNSTABLE,
                       characteristic_value, check_positivity, classify,
                       linearise, marginal_diagnosis)
from .bifurcation import locate_fold, sweep

INFLOW_BATTERY = (0.0, 0.05, 0.1, 0.2, 0.3)


@dataclass
class AcceptanceOptions:
    """Grid sizes and the identity tolerance; `coarse(N)` trades accuracy
    for speed while the discretization-independent identity checks keep
    passing at a looser tolerance."""

    grid_N: int = 1024
    panels: int = 4096
    sim_Ns: tuple[int, ...] = (256, 512, 1024)
    identity_tol: float = 1e-6

    @classmethod
    def coarse(cls, N: int) -> "AcceptanceOptions":
        N = max(4, N - N % 2)
        return cls(grid_N=N, panels=max(8, N), sim_Ns=(N,), identity_tol=1e-4)

    @property
    def grid(self) -> SizeGrid:
        return SizeGrid(self.grid_N)

    @property
    def quadrature(self) -> Quadrature:
        return Quadrature(self.panels)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime_s: float
    budget_s: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "runtime_s": self.runtime_s,
            "budget_s": self.budget_s,
            "details": self.details,
        }


# ---------------------------------------------------------------- oracles

EXPECTED_LIFETIME = 1.0 - math.exp(-6.0)


def closed_form_R(P):
    return P * P * np.exp(2.0 - P) / 4.0


def closed_form_Q(P, C):
    return closed_form_R(P) + C * EXPECTED_LIFETIME / P


def _bisect_closed(f: Callable[[float], float], a: float, b: float) -> float:
    fa, fb = f(a), f(b)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fa * fm <= 0.0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
        if b - a < 1e-15 * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def oracle_roots(C: float, P_lo: float = 1e-4, P_hi: float = 50.0,
                 points: int = 10 ** 6) -> list[float]:
    """Positive equilibria of the benchmark model from a dense scan of the
    closed-form net growth rate."""
    P = np.linspace(P_lo, P_hi, points)
    vals = closed_form_Q(P, C) - 1.0
    signs = np.sign(vals)
    idx = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    return [_bisect_closed(lambda p: closed_form_Q(p, C) - 1.0,
                           float(P[i]), float(P[i + 1])) for i in idx]


def oracle_fold() -> tuple[float, float]:
    """Tangency of the closed-form net growth: P solves
    P^2 (3-P) exp(2-P) = 4 on (0, 2), then the critical inflow follows."""
    P_fold = _bisect_closed(lambda p: p * p * (3.0 - p) * math.exp(2.0 - p) - 4.0,
                            0.01, 1.99)
    C_star = P_fold ** 3 * (2.0 - P_fold) * math.exp(2.0 - P_fold) / (4.0 * EXPECTED_LIFETIME)
    return C_star, P_fold


# ------------------------------------------------------- randomized models

def _linear_exp_model(m, g0, g1, m0, m1, m2, k, b1, b2, c) -> ModelIngredients:
    def beta(s, P):
        return k * (1.0 + b1 * s) * np.exp(-b2 * s) * math.exp(-c * P)

    def beta_P(s, P):
        return -c * beta(s, P)

    def beta_PP(s, P):
        return c * c * beta(s, P)

    def mu(s, P):
        return m0 + m1 * s + m2 * P / (1.0 + P) + 0.0 * s

    def mu_P(s, P):
        return np.full_like(np.asarray(s, float), m2 / (1.0 + P) ** 2)

    def gamma(s, P):
        return g0 + g1 * s + 0.0 * np.asarray(s, float)

    def gamma_s(s, P):
        return np.full_like(np.asarray(s, float), g1)

    def zero(s, P):
        return np.zeros_like(np.asarray(s, float))

    return ModelIngredients(m=m, beta=beta, mu=mu, gamma=gamma,
                            beta_P=beta_P, mu_P=mu_P, gamma_P=zero,
                            gamma_s=gamma_s, gamma_sP=zero, beta_PP=beta_PP,
                            analytic_partials=True)


def random_smooth_models(count: int, seed: int,
                         quadrature: Optional[Quadrature] = None,
                         require_equilibrium: bool = True
                         ) -> list[tuple[ModelIngredients, float]]:
    """Deterministic battery of smooth models with population-independent
    growth rates, analytic partials, and (optionally) at least one positive
    equilibrium at the drawn inflow."""
    rng = np.random.default_rng(seed)
    quadrature = quadrature or Quadrature(2048)
    out: list[tuple[ModelIngredients, float]] = []
    attempts = 0
    while len(out) < count and attempts < 50 * count:
        attempts += 1
        m = rng.uniform(3.0, 6.0)
        g0, g1 = rng.uniform(0.6, 1.4), rng.uniform(-0.05, 0.12)
        if g0 + g1 * m <= 0.3:
            continue
        m0, m1, m2 = rng.uniform(0.2, 0.8), rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.6)
        b1, b2, c = rng.uniform(0.0, 1.5), rng.uniform(0.1, 0.6), rng.uniform(0.25, 0.8)
        target = rng.uniform(1.4, 2.5)
        C = rng.uniform(0.0, 0.3)
        base = _linear_exp_model(m, g0, g1, m0, m1, m2, 1.0, b1, b2, c)
        k = target / net_reproduction(base, 1.0, quadrature)
        model = _linear_exp_model(m, g0, g1, m0, m1, m2, k, b1, b2, c)
        if require_equilibrium:
            eqs = find_equilibria(model, C, 1e-3, 40.0, quadrature=quadrature,
                                  grid=SizeGrid(256),
                                  scan=RootScanConfig(scan_points=1200))
            if not eqs:
                continue
        out.append((model, C))
    if len(out) < count:
        raise RuntimeError("random model battery failed to fill (seed issue)")
    return out


# --------------------------------------------------------------- scenarios

@lru_cache(maxsize=None)
def _scenario(name: str, N: int, panels: int) -> Trajectory:
    model = builtin_example()
    grid = SizeGrid(N)
    s = grid.nodes(model.m)
    if name == "decay":
        config = SimulationConfig(model=model, C=0.0, T_final=100.0, grid=grid)
        initial = 1.9 * np.exp(-s) / (1.0 - np.exp(-6.0))
    elif name == "approach":
        config = SimulationConfig(model=model, C=0.2, T_final=200.0, grid=grid)
        initial = 0.7 * np.exp(-0.4 * s) / (1.0 - np.exp(-6.0))
    elif name == "persistence":
        quadrature = Quadrature(panels)
        upper = find_equilibria(builtin_example(), 0.2, quadrature=quadrature,
                                grid=grid)[-1]
        config = SimulationConfig(model=model, C=0.2, T_final=100.0, grid=grid)
        initial = upper.profile
    else:
        raise ValueError(name)
    return simulate(config, initial)


def _timed(budget: float):
    def wrap(fn):
        def run(opts: AcceptanceOptions = AcceptanceOptions()) -> CriterionResult:
            t0 = time.monotonic()
            passed, details = fn(opts)
            runtime = time.monotonic() - t0
            if runtime > budget:
                passed = False
                details["runtime_exceeded"] = True
            return CriterionResult(name=fn.__name__.removeprefix("_"),
                                   passed=passed, runtime_s=runtime,
                                   budget_s=budget, details=details)
        run.__name__ = fn.__name__.removeprefix("_")
        return run
    return wrap


# --------------------------------------------------------------- criteria

@_timed(budget=1.0)
def _example_equilibrium(opts):
    """Unique tangent equilibrium at P*=2 with the explicit profile."""
    model = builtin_example()
    eqs = find_equilibria(model, 0.0, quadrature=opts.quadrature, grid=opts.grid)
    details = {"count": len(eqs)}
    if len(eqs) != 1 or not eqs[0].tangent:
        details["tangent"] = bool(eqs and eqs[0].tangent)
        return False, details
    eq = eqs[0]
    s = opts.grid.nodes(model.m)
    profile_dev = float(np.abs(eq.profile - 2.0 * np.exp(-s) / (1.0 - np.exp(-6.0))).max())
    details.update(P_star=eq.P_star, P_error=abs(eq.P_star - 2.0),
                   profile_error=profile_dev, tangent=True)
    return abs(eq.P_star - 2.0) <= 1e-8 and profile_dev <= 1e-8, details


@_timed(budget=1.0)
def _closed_form_net_reproduction(opts):
    """Quadrature net reproduction against the symbolic closed form."""
    model = builtin_example()
    worst = 0.0
    for P in (0.5, 1.0, 2.0, 3.0, 5.0):
        worst = max(worst, abs(net_reproduction(model, P, opts.quadrature)
                               - float(closed_form_R(P))))
    return worst <= 1e-8, {"max_error": worst}


@_timed(budget=10.0)
def _characteristic_identity(opts):
    """K(0) equals P* dQ + 1 across the benchmark battery and ten
    randomized models: the cross-module consistency oracle."""
    worst = 0.0
    cases = 0

    def residual(model, eq):
        lin = linearise(model, eq, opts.quadrature)
        K0 = characteristic_value(model, eq, 0.0, lin=lin)
        return abs(K0 - (eq.P_star * eq.dQ + 1.0))

    model = builtin_example()
    for C in INFLOW_BATTERY:
        for eq in find_equilibria(model, C, quadrature=opts.quadrature, grid=opts.grid):
            worst = max(worst, residual(model, eq))
            cases += 1
    for rand_model, C in random_smooth_models(10, seed=20240601):
        for eq in find_equilibria(rand_model, C, 1e-3, 40.0,
                                  quadrature=opts.quadrature, grid=opts.grid):
            worst = max(worst, residual(rand_model, eq))
            cases += 1
    return worst <= opts.identity_tol, {
        "max_residual": worst, "cases": cases, "tolerance": opts.identity_tol}


@_timed(budget=10.0)
def _stability_pattern(opts):
    """Three equilibria at C=0.2, stable/unstable/stable, eigenvalue signs
    coherent with the net-growth slope, roots matching the dense oracle."""
    model = builtin_example()
    eqs = find_equilibria(model, 0.2, quadrature=opts.quadrature, grid=opts.grid)
    details = {"count": len(eqs)}
    if len(eqs) != 3:
        return False, details
    expected = oracle_roots(0.2)
    root_err = max(abs(eq.P_star - ref) for eq, ref in zip(eqs, expected))
    labels = []
    signs_ok = True
    for eq in eqs:
        report = classify(model, eq, quadrature=opts.quadrature, grid=opts.grid)
        labels.append(report.classification)
        dom = report.dominant_real_eigenvalue
        if dom is None or math.copysign(1.0, dom) != math.copysign(1.0, eq.dQ):
            signs_ok = False
    details.update(root_error=root_err, classifications=labels, signs_ok=signs_ok)
    pattern_ok = labels == [LINEARLY_STABLE, LINEARLY_UNSTABLE, LINEARLY_STABLE]
    return pattern_ok and signs_ok and root_err <= 1e-8, details


@_timed(budget=30.0)
def _fold(opts):
    """Fold location against the tangency oracle, and branch counts on the
    two sides of the critical inflow."""
    model = builtin_example()
    C_ref, P_ref = oracle_fold()
    fold = locate_fold(model, 0.0, 1.0, (0.05, 2.0), quadrature=opts.quadrature)
    q_res = abs(net_growth(model, fold.C_star, fold.P_fold, opts.quadrature) - 1.0)
    from .equilibrium import net_growth_slope
    dq_res = abs(net_growth_slope(model, fold.C_star, fold.P_fold, opts.quadrature))
    C_vals = [round(c, 10) for c in np.linspace(0.0, 0.6, 25)]
    diagram = sweep(model, C_vals, quadrature=opts.quadrature, grid=opts.grid,
                    classify_points=False)
    below = [len([b for b in branch if not b.trivial])
             for C, branch in diagram.entries if 0.0 < C < fold.C_star]
    above = [len([b for b in branch if not b.trivial])
             for C, branch in diagram.entries if C > fold.C_star]
    details = {
        "C_star": fold.C_star, "P_fold": fold.P_fold,
        "C_star_error": abs(fold.C_star - C_ref),
        "P_fold_error": abs(fold.P_fold - P_ref),
        "net_growth_residual": q_res, "slope_residual": dq_res,
        "branches_below": sorted(set(below)), "branches_above": sorted(set(above)),
    }
    ok = (q_res <= 1e-6 and dq_res <= 1e-5
          and abs(fold.C_star - C_ref) <= 1e-5 and abs(fold.P_fold - P_ref) <= 1e-5
          and set(below) == {3} and set(above) == {1})
    return ok, details


@_timed(budget=5.0)
def _marginal_diagnosis(opts):
    """The inflow-free tangent equilibrium: marginal classification, zero
    dominant eigenvalue, curvature -1/2, nonlinear instability verdict."""
    model = builtin_example()
    eq = find_equilibria(model, 0.0, quadrature=opts.quadrature, grid=opts.grid)[0]
    report = classify(model, eq, quadrature=opts.quadrature, grid=opts.grid)
    diag = marginal_diagnosis(model, eq, quadrature=opts.quadrature)
    dom = report.dominant_real_eigenvalue
    details = {
        "classification": report.classification,
        "dominant_real_eigenvalue": dom,
        "Rpp": diag.Rpp, "verdict": diag.verdict,
    }
    ok = (report.classification == MARGINAL_ZERO_EIGENVALUE
          and dom is not None and abs(dom) <= 1e-6
          and abs(diag.Rpp + 0.5) <= 1e-6
          and diag.verdict == VERDICT_NONLINEARLY_UNSTABLE)
    return ok, details


@_timed(budget=120.0)
def _simulation_behavior(opts):
    """The two published initial conditions plus persistence at the upper
    equilibrium, all at the production grid."""
    N = opts.sim_Ns[-1]
    model = builtin_example()
    details = {}

    decay = _scenario("decay", N, opts.panels)
    mask = decay.times >= 1.0
    decay_monotone = bool(np.all(np.diff(decay.totals[mask]) <= 1e-12))
    details.update(decay_terminal=float(decay.terminal.P), decay_monotone=decay_monotone)
    ok_a = decay_monotone and decay.terminal.P < 0.5

    approach = _scenario("approach", N, opts.panels)
    P_end = float(approach.terminal.P)
    q_res = abs(net_growth(model, 0.2, P_end, opts.quadrature) - 1.0)
    roots = find_equilibria(model, 0.2, quadrature=opts.quadrature, grid=opts.grid)
    dist = min(abs(P_end - eq.P_star) for eq in roots)
    details.update(approach_terminal=P_end, approach_net_growth_residual=q_res,
                   approach_root_distance=dist)
    ok_b = q_res <= 1e-3 and dist <= 1e-2

    persistence = _scenario("persistence", N, opts.panels)
    upper = roots[-1].P_star
    sup_dev = float(np.abs(persistence.totals - upper).max())
    details.update(persistence_sup_deviation=sup_dev)
    ok_c = sup_dev <= 1e-2

    return ok_a and ok_b and ok_c, details


@_timed(budget=120.0)
def _scheme_convergence(opts):
    """First-order decay of the balance-law defect under grid refinement.
    The first time unit is excluded: the defect there measures the
    boundary-layer adjustment of the initial data, not the scheme."""
    residuals = {N: _scenario("approach", N, opts.panels).max_balance_residual(1.0)
                 for N in opts.sim_Ns}
    Ns = sorted(residuals)
    orders = [math.log2(residuals[a] / residuals[b])
              for a, b in zip(Ns, Ns[1:])]
    details = {"residuals": {str(N): residuals[N] for N in Ns},
               "observed_orders": orders}
    return all(o >= 0.8 for o in orders) if orders else True, details


@_timed(budget=60.0)
def _property_suites(opts):
    """Survival normalization and positivity, the inflow decomposition of
    net growth, the size/age crosscheck, monotone decay of the
    characteristic function, and nonnegative simulated densities."""
    details = {}
    model = builtin_example()
    quadrature = opts.quadrature

    survival_ok = True
    battery = [(model, 0.2)] + random_smooth_models(3, seed=777)
    for mod, _ in battery:
        for P in (0.5, 2.0, 7.0):
            nodes = np.linspace(0.0, mod.m, 512 + 1)
            pi, _ = _survival_nodes(mod, P, nodes)
            if pi[0] != 1.0 or pi.min() <= 0.0:
                survival_ok = False
    details["survival_ok"] = survival_ok

    worst_identity = 0.0
    for mod, C in battery:
        for P in (0.5, 1.5, 4.0):
            nodes = np.linspace(0.0, mod.m, quadrature.panel_count + 1)
            pi, gamma = _survival_nodes(mod, P, nodes)
            w = simpson_weights(quadrature.panel_count, nodes[1] - nodes[0])
            beta = sample_rate(mod.beta, nodes, P)
            direct = (C / P * float(w @ pi) + float(w @ (beta * pi))) / float(gamma[0])
            worst_identity = max(worst_identity,
                                 abs(direct - net_growth(mod, C, P, quadrature)))
    details["inflow_identity_error"] = worst_identity

    worst_age = 0.0
    rng = np.random.default_rng(424242)
    for mod, _ in random_smooth_models(20, seed=424242, require_equilibrium=False):
        P = float(rng.uniform(0.5, 3.0))
        size_form, age_form = age_form_crosscheck(mod, P, quadrature=Quadrature(2048))
        worst_age = max(worst_age, abs(size_form - age_form) / max(abs(size_form), 1e-12))
    details["age_form_relative_error"] = worst_age

    lam_grid = np.arange(0.0, 20.0 + 0.25, 0.5)
    monotone_ok = True
    checked = 0
    spectra_battery = [(model, C) for C in INFLOW_BATTERY] \
        + random_smooth_models(3, seed=888)
    for mod, C in spectra_battery:
        for eq in find_equilibria(mod, C, 1e-3, 40.0, quadrature=quadrature,
                                  grid=opts.grid):
            # monotone decay needs the full positivity package, not just the
            # sensitivity bound: a sign-changing boundary kernel breaks it
            conditions = check_positivity(mod, eq, grid=opts.grid)
            if not conditions.all_hold():
                continue
            lin = linearise(mod, eq, quadrature)
            values = [characteristic_value(mod, eq, float(l), lin=lin)
                      for l in lam_grid]
            checked += 1
            if not all(a > b for a, b in zip(values, values[1:])):
                monotone_ok = False
            if values[-1] >= values[0] / 10.0:
                monotone_ok = False
    details.update(monotone_ok=monotone_ok, monotone_cases=checked)

    grid = SizeGrid(256)
    s = grid.nodes(model.m)
    config = SimulationConfig(model=model, C=0.1, T_final=5.0, grid=grid)
    traj = simulate(config, np.where(s < 3.0, s * (3.0 - s), 0.0))
    details["min_density"] = traj.min_density
    nonneg_ok = traj.min_density >= -1e-12

    ok = (survival_ok and worst_identity <= 1e-10 and worst_age <= 1e-6
          and monotone_ok and checked > 0 and nonneg_ok)
    return ok, details


example_equilibrium = _example_equilibrium
closed_form_net_reproduction = _closed_form_net_reproduction
characteristic_identity = _characteristic_identity
stability_pattern = _stability_pattern
fold = _fold
marginal = _marginal_diagnosis
simulation_behavior = _simulation_behavior
scheme_convergence = _scheme_convergence
property_suites = _property_suites

ALL_CRITERIA = (
    example_equilibrium,
    closed_form_net_reproduction,
    characteristic_identity,
    stability_pattern,
    fold,
    marginal,
    simulation_behavior,
    scheme_convergence,
    property_suites,
)


def run_all(opts: AcceptanceOptions = AcceptanceOptions()) -> list[CriterionResult]:
    return [criterion(opts) for criterion in ALL_CRITERIA]

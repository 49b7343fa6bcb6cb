"""Equilibria, linear stability, bifurcation diagrams and time integration
for a size-structured population model with a nonlocal birth law and a
constant inflow of minimal-size individuals.
"""

__version__ = "0.1.0"

from .bifurcation import BifurcationDiagram, BranchPoint, Fold, locate_fold, sweep
from .equilibrium import (EquilibriumPoint, SizeGrid, age_form_crosscheck,
                          equilibrium_profile, expected_lifetime,
                          find_equilibria, net_growth, net_growth_slope,
                          net_reproduction, survival_pi)
from .expressions import ExpressionError, VitalRateExpression, parse_rate
from .model import (ModelIngredients, ModelViolationError, builtin_example,
                    from_expressions, validate)
from .numerics import (Quadrature, Root, RootScanConfig, derivative,
                       find_roots, integrate)
from .simulator import SimulationConfig, SimulationState, Trajectory, simulate, step
from .spectral import (LinearisationData, MarginalDiagnosis,
                       PositivityConditions, StabilityReport,
                       center_eigenfunction, characteristic_value,
                       check_positivity, classify, dominant_real_eigenvalue,
                       linearise, marginal_diagnosis)

__all__ = [
    "BifurcationDiagram", "BranchPoint", "EquilibriumPoint", "ExpressionError",
    "Fold", "LinearisationData", "MarginalDiagnosis", "ModelIngredients",
    "ModelViolationError", "PositivityConditions", "Quadrature", "Root",
    "RootScanConfig", "SimulationConfig", "SimulationState", "SizeGrid",
    "StabilityReport", "Trajectory", "VitalRateExpression",
    "age_form_crosscheck", "builtin_example", "center_eigenfunction",
    "characteristic_value", "check_positivity", "classify", "derivative",
    "dominant_real_eigenvalue", "equilibrium_profile", "expected_lifetime",
    "find_equilibria", "find_roots", "from_expressions", "integrate",
    "linearise", "locate_fold", "marginal_diagnosis", "net_growth",
    "net_growth_slope", "net_reproduction", "parse_rate", "simulate",
    "step", "survival_pi", "sweep", "validate",
]

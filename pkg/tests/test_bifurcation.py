import math

import numpy as np
import pytest

import sizepop as sp
from sizepop.numerics import Quadrature, RootScanConfig
from sizepop.spectral import (INDETERMINATE_POSITIVITY_FAILS, LINEARLY_STABLE,
                              LINEARLY_UNSTABLE, MARGINAL_ZERO_EIGENVALUE)

# frozen from the tangency oracle: solve P^2 (3-P) exp(2-P) = 4 on (0, 2),
# then C* = P^3 (2-P) exp(2-P) / (4 (1 - e^-6))
ORACLE_C_STAR = 0.38670082160180038
ORACLE_P_FOLD = 0.67739591995502594

FAST_QUAD = Quadrature(1024)
FAST_SCAN = RootScanConfig(scan_points=900)


@pytest.fixture(scope="module")
def diagram(model):
    return sp.sweep(model, [0.0, 0.05, 0.1, 0.2, 0.3], quadrature=FAST_QUAD,
                    scan=FAST_SCAN)


class TestSweep:
    def test_no_inflow_entry(self, diagram):
        C, branch = diagram.entries[0]
        assert C == 0.0
        assert len(branch) == 2
        trivial, positive = branch
        assert trivial.trivial and trivial.P_star == 0.0
        assert trivial.classification == LINEARLY_STABLE
        assert positive.tangent
        assert positive.P_star == pytest.approx(2.0, abs=1e-7)
        assert positive.classification == MARGINAL_ZERO_EIGENVALUE

    def test_bistable_pattern(self, diagram):
        # stable / unstable / stable across the bistability window; at
        # C = 0.3 the boundary-kernel condition genuinely fails on the upper
        # branch, so the classifier reports the indeterminate class there
        for C, branch in diagram.entries[1:]:
            points = [b for b in branch if not b.trivial]
            assert len(points) == 3
            assert [points[0].classification, points[1].classification] == \
                [LINEARLY_STABLE, LINEARLY_UNSTABLE]
            assert points[2].classification == (
                INDETERMINATE_POSITIVITY_FAILS if C == 0.3 else LINEARLY_STABLE)

    def test_entries_ordered(self, diagram):
        Cs = [C for C, _ in diagram.entries]
        assert Cs == sorted(Cs)
        for _, branch in diagram.entries:
            P = [b.P_star for b in branch]
            assert P == sorted(P)

    def test_birth_fold_recorded_near_zero(self, diagram):
        assert len(diagram.folds) == 1
        fold = diagram.folds[0]
        assert 0.0 <= fold.C_star <= 1e-4
        assert fold.P_fold == pytest.approx(2.0, abs=1e-2)

    def test_constant_branch_count_between_folds(self, model):
        diagram = sp.sweep(model, [round(c, 4) for c in np.linspace(0.01, 0.6, 13)],
                           quadrature=FAST_QUAD, scan=FAST_SCAN,
                           classify_points=False)
        counts = [len(branch) for _, branch in diagram.entries]
        change_points = [f.C_star for f in diagram.folds]
        assert len(change_points) == 1
        below = [c for (C, _), c in zip(diagram.entries, counts)
                 if C < change_points[0]]
        above = [c for (C, _), c in zip(diagram.entries, counts)
                 if C > change_points[0]]
        assert set(below) == {3}
        assert set(above) == {1}

    def test_branch_monotonicity_near_zero_inflow(self, model):
        Cs = [round(c, 6) for c in np.linspace(0.02, ORACLE_C_STAR / 2, 5)]
        diagram = sp.sweep(model, Cs, quadrature=FAST_QUAD, scan=FAST_SCAN,
                           classify_points=False)
        lowest = [branch[0].P_star for _, branch in diagram.entries]
        middle = [branch[1].P_star for _, branch in diagram.entries]
        assert all(a < b for a, b in zip(lowest, lowest[1:]))
        assert all(a > b for a, b in zip(middle, middle[1:]))

    def test_rejects_decreasing_values(self, model):
        with pytest.raises(ValueError):
            sp.sweep(model, [0.2, 0.1])
        with pytest.raises(ValueError):
            sp.sweep(model, [-0.1, 0.2])


class TestLocateFold:
    def test_matches_tangency_oracle(self, model):
        fold = sp.locate_fold(model, 0.0, 1.0, (0.05, 2.0), quadrature=FAST_QUAD)
        assert fold.C_star == pytest.approx(ORACLE_C_STAR, abs=1e-5)
        assert fold.P_fold == pytest.approx(ORACLE_P_FOLD, abs=1e-5)

    def test_fold_consistency(self, model):
        fold = sp.locate_fold(model, 0.0, 1.0, (0.05, 2.0), quadrature=FAST_QUAD)
        assert abs(sp.net_growth(model, fold.C_star, fold.P_fold, FAST_QUAD)
                   - 1.0) <= 1e-6
        assert abs(sp.net_growth_slope(model, fold.C_star, fold.P_fold,
                                       FAST_QUAD)) <= 1e-5

    def test_pair_birth_at_zero_inflow(self, model):
        fold = sp.locate_fold(model, 0.0, 0.05, (1.5, 3.0), quadrature=FAST_QUAD)
        assert fold.C_star == pytest.approx(0.0, abs=1e-7)
        assert fold.P_fold == pytest.approx(2.0, abs=1e-3)

    def test_no_fold_in_window(self, model):
        with pytest.raises(ValueError, match="no fold"):
            sp.locate_fold(model, 0.5, 0.6, (0.05, 2.0), quadrature=FAST_QUAD)

    def test_root_counts_straddle_fold(self, model):
        below = sp.find_equilibria(model, ORACLE_C_STAR - 0.01,
                                   quadrature=FAST_QUAD, scan=FAST_SCAN)
        above = sp.find_equilibria(model, ORACLE_C_STAR + 0.01,
                                   quadrature=FAST_QUAD, scan=FAST_SCAN)
        assert len(below) == 3
        assert len(above) == 1

import math

import numpy as np
import pytest

from sizepop.numerics import (NonFiniteEvaluation, Quadrature, Root,
                              RootScanConfig, cumulative_integral, derivative,
                              find_roots, integrate, simpson_weights)


class TestIntegrate:
    def test_constant(self):
        assert integrate(lambda x: np.ones_like(x), 0.0, 6.0) == pytest.approx(6.0, abs=1e-12)

    def test_exponential(self):
        # oracle: closed-form antiderivative
        expected = 1.0 - math.exp(-6.0)
        assert abs(integrate(lambda x: np.exp(-x), 0.0, 6.0) - expected) <= 1e-10

    def test_x_exp(self):
        # oracle: integration by parts
        expected = 0.25 - (13.0 / 4.0) * math.exp(-12.0)
        assert abs(integrate(lambda x: x * np.exp(-2.0 * x), 0.0, 6.0) - expected) <= 1e-10

    def test_cubic_exactness(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            coeffs = rng.uniform(-3.0, 3.0, size=4)
            a, b = sorted(rng.uniform(-4.0, 4.0, size=2))
            if b - a < 0.1:
                continue
            exact = np.polyval(np.polyint(coeffs), b) - np.polyval(np.polyint(coeffs), a)
            got = integrate(lambda x: np.polyval(coeffs, x), a, b, Quadrature(32))
            assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_empty_interval(self):
        assert integrate(lambda x: np.exp(x), 2.0, 2.0) == 0.0

    def test_reversed_bounds(self):
        with pytest.raises(ValueError):
            integrate(lambda x: x, 1.0, 0.0)

    def test_nonfinite_reports_abscissa(self):
        with pytest.raises(NonFiniteEvaluation, match="x="):
            integrate(lambda x: 1.0 / (x - 3.0), 0.0, 6.0, Quadrature(4))

    def test_scalar_only_callable(self):
        got = integrate(lambda x: float(x) ** 2, 0.0, 1.0, Quadrature(16))
        assert got == pytest.approx(1.0 / 3.0, rel=1e-12)


class TestQuadratureConfig:
    @pytest.mark.parametrize("panels", [0, 1, 3, -2])
    def test_rejects_bad_panel_count(self, panels):
        with pytest.raises(ValueError):
            Quadrature(panels)

    def test_weights_sum(self):
        w = simpson_weights(8, 0.5)
        assert w.sum() == pytest.approx(8 * 0.5)


class TestCumulativeIntegral:
    def test_constant_exact(self):
        v = np.full(11, 3.0)
        out = cumulative_integral(v, 0.1)
        assert np.allclose(out, 3.0 * 0.1 * np.arange(11), atol=1e-15)

    def test_quadratic_exact(self):
        x = np.linspace(0.0, 2.0, 21)
        out = cumulative_integral(x ** 2, x[1] - x[0])
        assert np.allclose(out, x ** 3 / 3.0, atol=1e-14)

    def test_matches_simpson_on_smooth(self):
        x = np.linspace(0.0, 6.0, 4097)
        out = cumulative_integral(np.exp(-x), x[1] - x[0])
        assert out[-1] == pytest.approx(1.0 - math.exp(-6.0), abs=1e-12)


class TestFindRoots:
    def test_linear(self):
        roots = find_roots(lambda x: x - 1.0, 0.0, 2.0)
        assert len(roots) == 1
        assert not roots[0].tangent
        assert roots[0].x == pytest.approx(1.0, abs=1e-9)

    def test_double_root_tangent(self):
        roots = find_roots(lambda x: (x - 2.0) ** 2, 0.0, 4.0)
        assert len(roots) == 1
        assert roots[0].tangent
        assert roots[0].x == pytest.approx(2.0, abs=1e-8)

    def test_net_reproduction_tangency(self):
        # oracle: the closed form P^2 exp(2-P)/4 touches 1 exactly at P=2
        roots = find_roots(lambda x: x * x * np.exp(2.0 - x) / 4.0 - 1.0, 0.01, 10.0)
        assert len(roots) == 1
        assert roots[0].tangent
        assert roots[0].x == pytest.approx(2.0, abs=1e-8)

    def test_superset_of_separated_sign_changes(self):
        targets = [-2.5, -0.5, 0.75, 1.25, 3.0]
        def g(x):
            return np.prod([x - t for t in targets])
        found = find_roots(g, -4.0, 4.0)
        assert len(found) == len(targets)
        for root, t in zip(found, targets):
            assert root.x == pytest.approx(t, abs=1e-9)

    def test_empty_result_is_valid(self):
        assert find_roots(lambda x: x * x + 1.0, -1.0, 1.0) == []

    def test_nonfinite_nodes_skipped(self):
        def g(x):
            return math.nan if 0.4 < x < 0.6 else x - 1.0
        roots = find_roots(g, 0.0, 2.0)
        assert len(roots) == 1
        assert roots[0].x == pytest.approx(1.0, abs=1e-9)

    def test_tangency_on_interval_endpoint(self):
        roots = find_roots(lambda x: x * x * np.exp(2.0 - x) / 4.0 - 1.0, 0.05, 2.0)
        assert len(roots) == 1
        assert roots[0].tangent
        assert roots[0].x == pytest.approx(2.0, abs=1e-8)

    def test_ordering_and_dedup(self):
        roots = find_roots(lambda x: np.sin(x), 0.5, 9.0, RootScanConfig(scan_points=4000))
        xs = [r.x for r in roots]
        assert xs == sorted(xs)
        assert len(xs) == 2
        assert xs[0] == pytest.approx(math.pi, abs=1e-9)
        assert xs[1] == pytest.approx(2.0 * math.pi, abs=1e-9)


class TestDerivative:
    def test_square(self):
        assert derivative(lambda x: x * x, 3.0) == pytest.approx(6.0, abs=1e-6)

    def test_exp_at_zero(self):
        assert derivative(math.exp, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_net_reproduction_stationary_point(self):
        # oracle: d/dP [P^2 exp(2-P)/4] = (2P - P^2) exp(2-P)/4 vanishes at 2
        got = derivative(lambda P: P * P * math.exp(2.0 - P) / 4.0, 2.0)
        assert abs(got) <= 1e-6

    @pytest.mark.parametrize("f,df,x", [
        (math.exp, math.exp, 1.3),
        (lambda x: x ** 3 - 2.0 * x, lambda x: 3.0 * x ** 2 - 2.0, 0.7),
        (math.exp, math.exp, -2.0),
    ])
    def test_matches_analytic(self, f, df, x):
        assert derivative(f, x) == pytest.approx(df(x), rel=1e-5)

    def test_nonfinite_names_offset_point(self):
        with pytest.raises(NonFiniteEvaluation, match="x="):
            derivative(lambda x: math.sqrt(x), 0.0)


class TestRootScanConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            RootScanConfig(scan_points=1)
        with pytest.raises(ValueError):
            RootScanConfig(abs_tol=0.0)

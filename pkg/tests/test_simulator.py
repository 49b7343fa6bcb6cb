import math

import numpy as np
import pytest

import sizepop as sp
from conftest import make_model


def trapz_total(density, h):
    w = np.full(density.size, h)
    w[0] = w[-1] = 0.5 * h
    return float(w @ density)


class TestStep:
    def test_equilibrium_is_near_fixed_point(self, model):
        grid = sp.SizeGrid(1024)
        h = grid.spacing(model.m)
        profile = sp.equilibrium_profile(model, 2.0, grid)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=1.0, grid=grid)
        state = sp.SimulationState(t=0.0, density=profile,
                                   P=trapz_total(profile, h))
        advanced = sp.step(state, config)
        l1 = float(np.abs(advanced.density - profile).sum()) * h
        assert l1 <= 1e-3 * h

    def test_pure_decay_shrinks_population(self):
        model = make_model(mu=lambda s, P: np.full_like(np.asarray(s, float), 8.0))
        grid = sp.SizeGrid(128)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=1.0, grid=grid)
        state = sp.SimulationState(t=0.0, density=np.exp(-s),
                                   P=trapz_total(np.exp(-s), grid.spacing(model.m)))
        for _ in range(20):
            advanced = sp.step(state, config)
            assert advanced.P < state.P
            state = advanced

    def test_transport_only_mass_leaves_at_m(self):
        # no births, deaths, or inflow: the change in total mass is the
        # outflux at the right boundary up to O(h)
        model = make_model()
        grid = sp.SizeGrid(512)
        s = grid.nodes(model.m)
        h = grid.spacing(model.m)
        density = s * (6.0 - s)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=1.0, grid=grid)
        state = sp.SimulationState(t=0.0, density=density,
                                   P=trapz_total(density, h))
        advanced = sp.step(state, config)
        dt = advanced.t
        outflux = 0.5 * (density[-1] + density[-2])
        assert advanced.P - state.P == pytest.approx(-dt * outflux, abs=1e-13)
        assert advanced.P - state.P == pytest.approx(-dt * density[-1],
                                                     abs=1.5 * dt * h * 7.0)

    def test_timestep_tracks_population_dependent_speed(self):
        model = make_model(gamma=lambda s, P: np.full_like(
            np.asarray(s, float), 1.0 + P), mu=lambda s, P: np.ones_like(s))
        grid = sp.SizeGrid(64)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=1.0, grid=grid)
        state = sp.SimulationState(t=0.0, density=np.exp(-s),
                                   P=trapz_total(np.exp(-s), grid.spacing(model.m)))
        first = sp.step(state, config)
        second = sp.step(first, config)
        dt1 = first.t
        dt2 = second.t - first.t
        assert dt1 == pytest.approx(0.9 * grid.spacing(model.m) / (1.0 + state.P))
        assert dt2 > dt1  # population decayed, speeds dropped, dt grew

    def test_config_validation(self, model):
        with pytest.raises(ValueError):
            sp.SimulationConfig(model=model, C=0.0, T_final=1.0, cfl=0.0)
        with pytest.raises(ValueError):
            sp.SimulationConfig(model=model, C=0.0, T_final=0.0)
        with pytest.raises(ValueError):
            sp.SimulationConfig(model=model, C=-1.0, T_final=1.0)


class TestSimulate:
    def test_decay_scenario_short(self, model):
        grid = sp.SizeGrid(256)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=20.0, grid=grid)
        trajectory = sp.simulate(config, 1.9 * np.exp(-s) / (1.0 - math.exp(-6.0)))
        mask = trajectory.times >= 1.0
        assert np.all(np.diff(trajectory.totals[mask]) <= 1e-12)

    def test_upper_equilibrium_persists(self, model, equilibria_c02):
        grid = sp.SizeGrid(512)
        upper = equilibria_c02[-1].P_star
        config = sp.SimulationConfig(model=model, C=0.2, T_final=10.0, grid=grid)
        trajectory = sp.simulate(config, sp.equilibrium_profile(model, upper, grid))
        assert np.abs(trajectory.totals - upper).max() <= 1e-2

    def test_nonnegativity_preserved(self, model):
        grid = sp.SizeGrid(256)
        s = grid.nodes(model.m)
        bumpy = np.where(s < 3.0, s * (3.0 - s), 0.0)
        config = sp.SimulationConfig(model=model, C=0.1, T_final=5.0, grid=grid)
        trajectory = sp.simulate(config, bumpy)
        assert trajectory.min_density >= -1e-12

    def test_total_matches_quadrature_of_density(self, model):
        grid = sp.SizeGrid(128)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.2, T_final=2.0, grid=grid)
        trajectory = sp.simulate(config, np.exp(-s))
        recomputed = trapz_total(trajectory.terminal.density, grid.spacing(model.m))
        assert trajectory.terminal.P == pytest.approx(recomputed, rel=1e-12)

    def test_sample_times_strictly_increasing(self, model):
        grid = sp.SizeGrid(128)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=3.0, grid=grid,
                                     output_every=0.25)
        trajectory = sp.simulate(config, np.exp(-s))
        assert np.all(np.diff(trajectory.times) > 0.0)
        assert trajectory.times[-1] == pytest.approx(3.0, abs=1e-12)

    def test_balance_residual_shrinks_with_grid(self, model):
        residuals = {}
        for N in (128, 256):
            grid = sp.SizeGrid(N)
            s = grid.nodes(model.m)
            config = sp.SimulationConfig(model=model, C=0.2, T_final=10.0, grid=grid)
            trajectory = sp.simulate(config, 0.7 * np.exp(-0.4 * s)
                                     / (1.0 - math.exp(-6.0)))
            residuals[N] = trajectory.max_balance_residual(1.0)
        assert math.log2(residuals[128] / residuals[256]) >= 0.8

    def test_boundary_node_follows_birth_law_at_start(self, model):
        grid = sp.SizeGrid(128)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.2, T_final=1.0, grid=grid,
                                     record_densities=True)
        trajectory = sp.simulate(config, 0.7 * np.exp(-0.4 * s)
                                 / (1.0 - math.exp(-6.0)))
        t0, density0 = trajectory.snapshots[0]
        assert t0 == 0.0
        beta = sp.model.sample_rate(model.beta, s, trajectory.totals[0])
        w = np.full(s.size, grid.spacing(model.m))
        w[0] = w[-1] = 0.5 * grid.spacing(model.m)
        assert density0[0] == pytest.approx(0.2 + float(w @ (beta * density0)),
                                            rel=1e-9)

    def test_rejects_negative_initial(self, model):
        grid = sp.SizeGrid(64)
        s = grid.nodes(model.m)
        config = sp.SimulationConfig(model=model, C=0.0, T_final=1.0, grid=grid)
        with pytest.raises(ValueError, match="negative"):
            sp.simulate(config, s - 3.0)

    def test_rejects_wrong_shape(self, model):
        config = sp.SimulationConfig(model=model, C=0.0, T_final=1.0,
                                     grid=sp.SizeGrid(64))
        with pytest.raises(ValueError, match="shape"):
            sp.simulate(config, np.ones(10))

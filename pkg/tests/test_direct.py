import numpy as np
import pytest

from growfrag.direct import (
    advection_step,
    cfl_dt,
    check_eigen_identities,
    fragmentation_step,
    solve_steady,
)
from growfrag.errors import ConvergenceError
from growfrag.harness import golden_config
from growfrag.model import (
    GridFunction,
    ProblemConfig,
    RateSpec,
    build_grid,
    build_kernel,
    grid_function,
    quadrature,
)


def _config(speed=1.0, g_exp=0.0, division=None, cells=300, length=25.0,
            kernel="uniform", initial="step"):
    grid = build_grid(length, cells)
    return ProblemConfig(
        grid=grid,
        speed=speed,
        growth=RateSpec.power_law(g_exp),
        division=division or RateSpec.capped_quadratic(),
        kernel=build_kernel(kernel, grid),
        initial=initial,
    )


class TestCfl:
    def test_reference_value(self):
        config = golden_config("uniform-gx-gauss")
        x = config.grid.nodes
        bound = np.max(config.division(x) + 0.015 / config.grid.dx * x)
        assert cfl_dt(config, safety=1.0) == pytest.approx(1.0 / bound, rel=1e-12)
        assert cfl_dt(config, safety=1.0) == pytest.approx(0.18, abs=0.05)

    def test_pure_advection_limit(self):
        config = _config(speed=1.0, g_exp=0.0,
                         division=RateSpec.from_table(np.zeros(301)))
        assert cfl_dt(config, safety=1.0) == pytest.approx(config.grid.dx, rel=1e-12)

    def test_halving_dx_halves_dt_when_advection_dominates(self):
        coarse = golden_config("uniform-gx2-quad", cells=300)
        fine = golden_config("uniform-gx2-quad", cells=600)
        ratio = cfl_dt(fine) / cfl_dt(coarse)
        assert ratio == pytest.approx(0.5, abs=0.02)

    def test_invalid_safety(self):
        with pytest.raises(ValueError):
            cfl_dt(golden_config("uniform-gx-gauss"), safety=0.0)


class TestAdvection:
    def test_zero_transport_is_identity(self):
        # dt = 0 carries no flux; the update must return the input exactly
        config = _config(g_exp=0.5)
        n = grid_function(config.grid, lambda x: np.exp(-x))
        out = advection_step(n, config, 0.0)
        np.testing.assert_array_equal(out.values, n.values)

    def test_unit_spike_half_step(self):
        config = _config(speed=1.0, g_exp=0.0,
                         division=RateSpec.from_table(np.zeros(301)))
        vals = np.zeros(301)
        vals[100] = 1.0
        out = advection_step(GridFunction(config.grid, vals), config,
                             config.grid.dx / 2.0)
        assert out.values[100] == pytest.approx(0.5)
        assert out.values[101] == pytest.approx(0.5)
        assert np.count_nonzero(out.values) == 2

    def test_cfl_violation_refused(self):
        config = _config(speed=1.0, g_exp=0.0,
                         division=RateSpec.from_table(np.zeros(301)))
        n = grid_function(config.grid, np.ones(301))
        with pytest.raises(ValueError, match="CFL"):
            advection_step(n, config, 2.0 * config.grid.dx)

    def test_positivity_and_mass_outflow_only(self, rng):
        config = _config(speed=1.0, g_exp=0.5,
                         division=RateSpec.from_table(np.zeros(301)))
        n = grid_function(config.grid, rng.random(301))
        dt = cfl_dt(config, 0.9)
        out = advection_step(n, config, dt)
        assert np.all(out.values >= 0.0)
        lost = quadrature(n) - quadrature(out)
        expected = config.speed * dt * config.growth(np.array([25.0]))[0] * n.values[-1]
        assert lost == pytest.approx(expected, rel=1e-10)


class TestFragmentation:
    def test_zero_division_identity(self):
        config = _config()
        n = grid_function(config.grid, lambda x: np.exp(-0.1 * x))
        zero = GridFunction(config.grid, np.zeros(301))
        out = fragmentation_step(n, zero, config.kernel, 0.1)
        np.testing.assert_array_equal(out.values, n.values)

    @pytest.mark.parametrize("kind", ["uniform", "gaussian", "mitosis"])
    def test_number_balance_exact(self, kind, rng):
        grid = build_grid(25.0, 300)
        kernel = build_kernel(kind, grid)
        division = RateSpec.capped_quadratic().sample(grid)
        n = grid_function(grid, rng.random(301))
        dt = 0.3
        out = fragmentation_step(n, division, kernel, dt)
        beff = division.values.copy()
        beff[:2] = 0.0
        gained = quadrature(out) - quadrature(n)
        expected = dt * float((beff * n.values).sum()) * grid.dx
        assert gained == pytest.approx(expected, abs=1e-13)

    def test_mass_balance_bounded_by_mean_defect(self, rng):
        grid = build_grid(25.0, 300)
        kernel = build_kernel("gaussian", grid)
        division = RateSpec.capped_quadratic().sample(grid)
        n = grid_function(grid, rng.random(301))
        dt = 0.3
        out = fragmentation_step(n, division, kernel, dt)
        drift = abs(quadrature(out, 1.0) - quadrature(n, 1.0))
        beff = division.values.copy()
        beff[:2] = 0.0
        weighted = dt * float((beff * n.values * grid.nodes).sum()) * grid.dx
        assert drift <= kernel.report.max_mean_defect * weighted + 1e-12

    def test_positivity_preserved(self, rng):
        grid = build_grid(25.0, 300)
        kernel = build_kernel("uniform", grid)
        division = RateSpec.capped_quadratic().sample(grid)
        n = grid_function(grid, rng.random(301))
        out = fragmentation_step(n, division, kernel, 1.0 / division.values.max())
        assert np.all(out.values >= 0.0)


class TestSolveSteady:
    def test_matches_manual_split_for_one_step(self, steady):
        # the fused stepping kernel must equal advection -> division -> renormalize
        config, pair = steady("uniform-gx2-quad")
        dt = cfl_dt(config, 0.9)
        n0 = config.initial_values()
        n0 = GridFunction(config.grid, n0.values / quadrature(n0))
        manual = fragmentation_step(
            advection_step(n0, config, dt), config.division_values(), config.kernel, dt)
        manual_vals = manual.values / quadrature(manual)

        captured = {}

        def capture(step, profile):
            captured.setdefault("first", profile.values)

        with pytest.raises(ConvergenceError):
            solve_steady(config, max_steps=1, snapshot_every=1, on_snapshot=capture)
        np.testing.assert_allclose(captured["first"], manual_vals, atol=1e-14)

    def test_profile_normalized_positive(self, steady):
        config, pair = steady("uniform-gx-gauss")
        assert quadrature(pair.profile) == pytest.approx(1.0, abs=1e-10)
        assert np.all(pair.profile.values >= 0.0)
        assert pair.malthus > 0.0

    def test_initial_data_independence(self, steady):
        _, from_step = steady("uniform-gx2-quad", initial="step")
        _, from_maxw = steady("uniform-gx2-quad", initial="maxwellian")
        l1 = np.abs(from_step.profile.values - from_maxw.profile.values).sum() * (25.0 / 300)
        assert l1 <= 1e-6

    def test_no_division_never_settles(self):
        grid = build_grid(25.0, 100)
        config = ProblemConfig(grid, 1.0, RateSpec.power_law(0.0),
                               RateSpec.from_table(np.zeros(101)),
                               build_kernel("uniform", grid))
        with pytest.raises(ConvergenceError) as err:
            solve_steady(config, max_steps=2000)
        assert err.value.residual > 0.0
        assert err.value.iterations == 2000

    def test_growth_rate_estimates_agree(self, steady):
        for cid, tol in (("uniform-gx-gauss", 0.02), ("gaussian-gx2-quad", 0.02)):
            config, pair = steady(cid)
            ident = check_eigen_identities(pair, config)
            assert ident.malthus_defect <= tol

    def test_refinement_improves_profile(self, steady):
        config3, pair3 = steady("uniform-gx2-quad", cells=300)
        config6, pair6 = steady("uniform-gx2-quad", cells=600)
        restricted = pair6.profile.values[::2]
        l1 = np.abs(pair3.profile.values - restricted).sum() * config3.grid.dx
        assert l1 <= 5 * config3.grid.dx  # first-order agreement on shared nodes


class TestIdentities:
    def test_total_function_on_unconverged_state(self, steady):
        # a deliberately unconverged pair still yields finite diagnostics
        config, pair = steady("uniform-gx-gauss")
        from growfrag.direct import EigenPair
        halfway = EigenPair(config.initial_values(), pair.malthus, 1, 1e-2, pair.dt)
        report = check_eigen_identities(halfway, config)
        assert np.isfinite(report.malthus_defect)
        assert np.isfinite(report.moment_defect)

    def test_homogeneity_under_profile_scaling(self, steady):
        config, pair = steady("uniform-gx-gauss")
        from growfrag.direct import EigenPair
        doubled = EigenPair(GridFunction(config.grid, 2.0 * pair.profile.values),
                            pair.malthus, pair.iterations, pair.residual, pair.dt)
        base = check_eigen_identities(pair, config)
        scaled = check_eigen_identities(doubled, config)
        assert scaled.moment_defect == pytest.approx(base.moment_defect, rel=1e-9)
        # the rate identity is linear in the profile: doubling the profile
        # doubles the integral, so the defect |lam - 2*int| / lam grows
        expected = abs(2.0 * (pair.malthus * (1 - base.malthus_defect)) - pair.malthus) / pair.malthus
        assert scaled.malthus_defect == pytest.approx(expected, rel=1e-6)

    def test_richardson_consistency_of_growth_rate(self, steady):
        # golden growth rate against extrapolation from two finer meshes
        _, p300 = steady("uniform-gx2-quad", cells=300)
        _, p600 = steady("uniform-gx2-quad", cells=600)
        _, p1200 = steady("uniform-gx2-quad", cells=1200)
        extrapolated = 2.0 * p1200.malthus - p600.malthus
        assert abs(p300.malthus - extrapolated) / extrapolated <= 0.025
        assert abs(p600.malthus - extrapolated) / extrapolated <= 0.013
        # first-order convergence: the increments halve
        ratio = (p1200.malthus - p600.malthus) / (p600.malthus - p300.malthus)
        assert ratio == pytest.approx(0.5, abs=0.05)

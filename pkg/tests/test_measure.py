import numpy as np
import pytest

from growfrag.direct import EigenPair
from growfrag.measure import add_noise, mollify
from growfrag.model import GridFunction, build_grid, grid_function, quadrature


def _pair(values=None, cells=300, length=25.0, malthus=0.5):
    grid = build_grid(length, cells)
    if values is None:
        values = np.exp(-((grid.nodes - 8.0) ** 2) / 6.0)
        values /= values.sum() * grid.dx
    return EigenPair(GridFunction(grid, values), malthus, 1000, 1e-11, 0.01)


class TestNoise:
    def test_zero_noise_is_bitwise_copy(self):
        pair = _pair()
        m = add_noise(pair, 0.0, seed=7)
        assert m.profile.values is pair.profile.values
        assert m.malthus == pair.malthus

    def test_deterministic_for_seed(self):
        pair = _pair()
        a = add_noise(pair, 0.05, seed=123)
        b = add_noise(pair, 0.05, seed=123)
        np.testing.assert_array_equal(a.profile.values, b.profile.values)
        c = add_noise(pair, 0.05, seed=124)
        assert not np.array_equal(a.profile.values, c.profile.values)

    def test_relative_perturbation_magnitude(self):
        # per-node uniform shifts on [-1/2, 1/2] have standard deviation
        # 1/(2 sqrt(3)), so the relative L2 perturbation concentrates near
        # eps / (2 sqrt(3)) ~ 0.0144 at eps = 0.05
        pair = _pair()
        ratios = []
        for seed in range(200):
            m = add_noise(pair, 0.05, seed=seed)
            ratios.append(np.linalg.norm(m.profile.values - pair.profile.values)
                          / np.linalg.norm(pair.profile.values))
        expected = 0.05 / (2.0 * np.sqrt(3.0))
        assert np.mean(ratios) == pytest.approx(expected, rel=0.2)

    def test_clamp_keeps_nonnegative(self):
        grid = build_grid(25.0, 300)
        values = np.where(grid.nodes < 10.0, 1.0, 0.0)
        m = add_noise(_pair(values), 1.0, seed=3)
        assert np.all(m.profile.values >= 0.0)

    def test_malthus_untouched_by_default(self):
        pair = _pair()
        m = add_noise(pair, 0.5, seed=11)
        assert m.malthus == pair.malthus
        perturbed = add_noise(pair, 0.5, seed=11, perturb_malthus=True)
        assert perturbed.malthus != pair.malthus
        assert abs(perturbed.malthus - pair.malthus) <= 0.25 * pair.malthus
        # the profile draw must not depend on the flag
        np.testing.assert_array_equal(perturbed.profile.values, m.profile.values)

    @pytest.mark.parametrize("eps", [-0.1, 1.5])
    def test_noise_level_bounds(self, eps):
        with pytest.raises(ValueError):
            add_noise(_pair(), eps, seed=0)


class TestMollifier:
    def test_dc_gain_on_periodic_input(self):
        grid = build_grid(25.0, 300)
        f = grid_function(grid, np.full(301, 2.5))
        out = mollify(f, alpha=0.05, pad_factor=1)
        np.testing.assert_allclose(out.smoothed.values, 2.5, atol=1e-12)

    def test_single_frequency_attenuation(self):
        grid = build_grid(25.0, 300)
        xi0 = 2.0 * np.pi * 6 / (grid.npoints * grid.dx)
        f = grid_function(grid, np.sin(xi0 * grid.nodes))
        alpha = 0.05
        out = mollify(f, alpha, pad_factor=1)
        gain = 1.0 / np.sqrt(1.0 + (alpha * xi0) ** 2)
        np.testing.assert_allclose(out.smoothed.values, gain * f.values, atol=1e-6)
        # the spectral derivative picks up the same response times the frequency
        np.testing.assert_allclose(out.derivative.values,
                                   gain * xi0 * np.cos(xi0 * grid.nodes), atol=1e-6)

    def test_l1_non_expansion_on_decaying_profile(self):
        grid = build_grid(25.0, 300)
        f = grid_function(grid, np.exp(-((grid.nodes - 10.0) ** 2) / 4.0))
        for alpha in (0.01, 0.1, 0.5):
            sm = mollify(f, alpha).smoothed
            ratio = quadrature(GridFunction(grid, np.abs(sm.values))) / quadrature(f)
            assert ratio <= 1.0 + 1e-3

    def test_derivative_norm_bound(self, rng):
        grid = build_grid(25.0, 300)
        for alpha in (0.02, 0.1):
            f = grid_function(grid, rng.random(301))
            out = mollify(f, alpha)
            assert (np.linalg.norm(out.derivative.values)
                    <= 2.0 / alpha * np.linalg.norm(f.values))

    def test_smoothing_error_linear_in_alpha(self):
        # || f*rho - f || <= C alpha ||f||_H1 on a smooth bump, C modest
        grid = build_grid(25.0, 600)
        f = grid_function(grid, np.exp(-((grid.nodes - 12.0) ** 2) / 2.0))
        fprime = np.gradient(f.values, grid.dx)
        h1 = np.sqrt(np.sum((f.values ** 2 + fprime ** 2)) * grid.dx)
        prev = None
        for alpha in (0.2, 0.1, 0.05, 0.025):
            err = np.sqrt(np.sum((mollify(f, alpha).smoothed.values - f.values) ** 2)
                          * grid.dx)
            assert err <= 1.0 * alpha * h1
            if prev is not None:
                assert err < prev
            prev = err

    def test_derivative_matches_centered_differences(self):
        # band-limited periodic input: spectral derivative vs second-order FD
        devs = []
        for cells in (300, 600):
            grid = build_grid(25.0, cells)
            xi0 = 2.0 * np.pi * 4 / (grid.npoints * grid.dx)
            f = grid_function(grid, np.sin(xi0 * grid.nodes))
            out = mollify(f, alpha=0.05, pad_factor=1)
            sm = out.smoothed.values
            fd = (np.roll(sm, -1) - np.roll(sm, 1)) / (2.0 * grid.dx)
            devs.append(np.abs(out.derivative.values - fd).max())
        assert devs[0] <= 0.01
        assert devs[1] <= 0.3 * devs[0]  # second-order shrink

    def test_smoothed_converges_to_input_over_alpha_ladder(self):
        grid = build_grid(25.0, 300)
        f = grid_function(grid, np.exp(-((grid.nodes - 10.0) ** 2) / 3.0))
        errs = [np.linalg.norm(mollify(f, a).smoothed.values - f.values)
                for a in (0.4, 0.2, 0.1, 0.05, 0.025)]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] <= 0.02 * np.linalg.norm(f.values)

    def test_invalid_arguments(self):
        grid = build_grid(25.0, 300)
        f = grid_function(grid, np.ones(301))
        with pytest.raises(ValueError):
            mollify(f, 0.0)
        with pytest.raises(ValueError):
            mollify(f, 0.1, pad_factor=0)

"""Tests for interpolation between exact samples."""
import numpy as np
import pytest

from src.exceptions import ArgumentError
from src.levy.estimators import linear_interpolate, mmse_interpolate
from src.levy.sampler import add_noise, simulate_path
from src.schemas import GridSpec

pytestmark = pytest.mark.unit


class TestLinearInterpolation:
    """Test piecewise-linear interpolation anchored at the origin."""

    def test_values(self, make_observations):
        obs = make_observations([4.0, -4.0], noise_variance=0.0, stride=4)
        estimate = linear_interpolate(obs).estimate
        np.testing.assert_allclose(estimate, [0.0, 1.0, 2.0, 3.0, 4.0, 2.0, 0.0, -2.0, -4.0])

    def test_noisy_input_rejected(self, make_observations):
        with pytest.raises(ArgumentError):
            linear_interpolate(make_observations([1.0], noise_variance=0.1, stride=2))


class TestMmseInterpolation:
    """Test posterior-mean interpolation by message passing."""

    def test_keeps_observed_values(self, laplace_spec):
        obs = add_noise(simulate_path(laplace_spec, 0.25, 24, 51), 0.0, 4, 52)
        estimate = mmse_interpolate(obs, laplace_spec, 0.25).estimate
        np.testing.assert_array_equal(estimate[obs.observed_nodes()], obs.noisy[1:])
        assert estimate[0] == 0.0

    def test_brownian_bridge_is_linear(self, gaussian_spec):
        """Between exact samples of a Brownian motion the posterior mean is the chord."""
        obs = add_noise(simulate_path(gaussian_spec, 0.25, 32, 53), 0.0, 8, 54)
        expected = linear_interpolate(obs).estimate
        np.testing.assert_allclose(mmse_interpolate(obs, gaussian_spec, 0.25).estimate, expected, atol=1e-2)

    def test_marginals(self, gaussian_spec):
        obs = add_noise(simulate_path(gaussian_spec, 0.5, 8, 55), 0.0, 4, 56)
        result = mmse_interpolate(obs, gaussian_spec, 0.5, keep_marginals=True)
        assert len(result.posterior_marginals) == 9
        assert result.posterior_marginals[2].total_mass() == pytest.approx(1.0)

    def test_noisy_input_rejected(self, gaussian_spec):
        obs = add_noise(simulate_path(gaussian_spec, 1.0, 8, 57), 0.5, 2, 58)
        with pytest.raises(ArgumentError):
            mmse_interpolate(obs, gaussian_spec)

    @pytest.mark.parametrize("stride", [2, 4])
    @pytest.mark.parametrize("name", ["gaussian_spec", "poisson_spec", "cauchy_spec", "laplace_spec", "stable_spec"])
    def test_equal_steps_independent_of_law(self, name, stride, request, make_observations):
        """Observing 0 and n_T exactly n_T steps apart puts node k at k for every law."""
        spec = request.getfixturevalue(name)
        obs = make_observations([float(stride)], noise_variance=0.0, stride=stride)
        grid = GridSpec(half_width=16.0, num_points=4096)
        estimate = mmse_interpolate(obs, spec, 1.0, grid).estimate
        assert estimate[1] == pytest.approx(1.0, abs=2.0 * grid.step)
        np.testing.assert_allclose(estimate, linear_interpolate(obs).estimate, atol=2.0 * grid.step)

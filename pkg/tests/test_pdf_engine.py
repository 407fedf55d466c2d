"""Tests for increment densities, their two computation routes and the MAP penalty."""
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import integrate, special

from src.exceptions import (
    ArgumentError,
    DegeneratePenaltyError,
    ResolutionError,
    UnsupportedClosedFormError,
    UnsupportedModelError,
)
from src.levy.pdf_engine import (
    atom_weight,
    default_grid,
    increment_pdf,
    increment_pdf_char_inversion,
    increment_pdf_closed_form,
    lattice_masses,
    log_density,
    psi,
)
from src.schemas import GridSpec, InnovationKind, InnovationSpec

pytestmark = pytest.mark.unit


def value_at_zero(pdf):
    return float(pdf.values[pdf.center_index])


class TestGridSpec:
    """Test the uniform grid layout."""

    def test_zero_is_a_grid_point(self):
        grid = GridSpec(half_width=3.0, num_points=256)
        points = grid.points()
        assert points[128] == 0.0
        assert points[0] == -3.0
        assert grid.step == pytest.approx(6.0 / 256)

    def test_power_of_two(self):
        with pytest.raises(ValidationError):
            GridSpec(half_width=1.0, num_points=1000)


class TestClosedForm:
    """Test closed-form densities against known values."""

    def test_gaussian_at_zero(self, gaussian_spec):
        pdf = increment_pdf_closed_form(gaussian_spec, 1.0, default_grid(gaussian_spec, 1.0))
        assert value_at_zero(pdf) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))
        assert math.exp(log_density(gaussian_spec, 2.0, 0.0)) == pytest.approx(0.282095, abs=1e-6)

    def test_calibrated_cauchy_at_zero(self, cauchy_spec):
        assert math.exp(log_density(cauchy_spec, 1.0, 0.0)) == pytest.approx(0.967882, abs=1e-6)

    def test_calibrated_laplace_at_zero(self, laplace_spec):
        """Laplace with rate gamma = sqrt(2e / pi) peaks at gamma / 2."""
        expected = 0.5 * math.sqrt(2.0 * math.e / math.pi)
        assert math.exp(log_density(laplace_spec, 1.0, 0.0)) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.657745, abs=1e-6)

    def test_laplace_shape(self, laplace_spec):
        """At T = 1 the variance-gamma law is Laplace with rate gamma."""
        x = np.array([-2.0, -0.3, 0.7, 4.0])
        gamma = laplace_spec.gamma
        np.testing.assert_allclose(log_density(laplace_spec, 1.0, x), math.log(gamma / 2.0) - gamma * np.abs(x))

    def test_variance_gamma_at_zero(self):
        spec = InnovationSpec(kind=InnovationKind.VARIANCE_GAMMA, gamma=1.0)
        assert math.exp(log_density(spec, 2.0, 0.0)) == pytest.approx(0.25)

    def test_variance_gamma_unbounded(self):
        """For T <= 1/2 the density diverges at 0 and the grid value is replaced."""
        spec = InnovationSpec(kind=InnovationKind.VARIANCE_GAMMA, gamma=1.0)
        assert log_density(spec, 0.5, 0.0) == math.inf
        pdf = increment_pdf_closed_form(spec, 0.5, default_grid(spec, 0.5))
        assert pdf.unbounded
        assert np.all(np.isfinite(pdf.values))
        assert pdf.total_mass() == pytest.approx(1.0, abs=1e-5)

    def test_compound_poisson_atom(self, poisson_spec):
        pdf = increment_pdf_closed_form(poisson_spec, 1.0, default_grid(poisson_spec, 1.0))
        assert pdf.atom_at_zero == pytest.approx(math.exp(-0.6))
        assert atom_weight(poisson_spec, 1.0) == pytest.approx(math.exp(-0.6))
        assert pdf.total_mass() == pytest.approx(1.0, abs=1e-8)
        assert pdf.cell_masses[pdf.center_index] < 0.05
        assert pdf.mean() == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("name", ["gaussian_spec", "cauchy_spec", "laplace_spec"])
    def test_normalization(self, name, request):
        spec = request.getfixturevalue(name)
        pdf = increment_pdf_closed_form(spec, 1.0, default_grid(spec, 1.0))
        tolerance = {"gaussian_spec": 1e-10, "cauchy_spec": 2e-2, "laplace_spec": 1e-6}[name]
        assert pdf.total_mass() == pytest.approx(1.0, abs=tolerance)
        assert np.all(pdf.cell_masses >= 0.0)

    @pytest.mark.parametrize(
        "name", ["gaussian_spec", "poisson_spec", "cauchy_spec", "laplace_spec", "stable_spec"]
    )
    def test_symmetry(self, name, request):
        """values[j] equals values[N - j] on the symmetric grid."""
        spec = request.getfixturevalue(name)
        pdf = increment_pdf(spec, 1.0)
        np.testing.assert_allclose(pdf.values[1:], pdf.values[1:][::-1], rtol=0.0, atol=1e-9)
        np.testing.assert_allclose(pdf.cell_masses[1:], pdf.cell_masses[1:][::-1], rtol=0.0, atol=1e-9)

    def test_no_closed_form_for_general_stable(self, stable_spec):
        with pytest.raises(UnsupportedClosedFormError):
            log_density(stable_spec, 1.0, 0.0)
        with pytest.raises(UnsupportedClosedFormError):
            increment_pdf_closed_form(stable_spec, 1.0, default_grid(stable_spec, 1.0))

    def test_zero_process_has_no_density(self):
        spec = InnovationSpec(kind=InnovationKind.GAUSSIAN, sigma=0.0)
        with pytest.raises(UnsupportedModelError):
            log_density(spec, 1.0, 0.0)
        with pytest.raises(UnsupportedModelError):
            default_grid(spec, 1.0)
        with pytest.raises(UnsupportedModelError):
            lattice_masses(spec, 1.0, 0.1, np.arange(-3, 4))

    def test_period_must_be_positive(self, gaussian_spec):
        with pytest.raises(ArgumentError):
            log_density(gaussian_spec, 0.0, 1.0)


class TestCharacteristicInversion:
    """Test the FFT inversion route against the closed forms."""

    @pytest.mark.parametrize("T", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("name", ["gaussian_spec", "cauchy_spec"])
    def test_matches_closed_form(self, name, T, request):
        spec = request.getfixturevalue(name)
        grid = default_grid(spec, T)
        closed = increment_pdf_closed_form(spec, T, grid)
        inverted = increment_pdf_char_inversion(spec, T, grid)
        assert np.max(np.abs(closed.values - inverted.values)) < 1e-5
        assert not inverted.spectrum_truncated

    @pytest.mark.parametrize("T", [0.5, 1.0, 2.0])
    def test_variance_gamma_matches_closed_form(self, T):
        """Sup-norm agreement on the central 80% of the grid, away from the pole when T <= 1/2."""
        spec = InnovationSpec(kind=InnovationKind.VARIANCE_GAMMA, gamma=1.0)
        grid = default_grid(spec, T)
        closed = increment_pdf_closed_form(spec, T, grid)
        inverted = increment_pdf_char_inversion(spec, T, grid)
        x = np.abs(grid.points())
        central = x <= 0.8 * grid.half_width
        if T <= 0.5:
            central &= x >= 0.5
        assert np.max(np.abs(closed.values - inverted.values)[central]) < 1e-5

    @pytest.mark.parametrize("name", ["gaussian_spec", "cauchy_spec", "stable_spec"])
    def test_semigroup(self, name, request):
        """The density at T = 2 is the self-convolution of the density at T = 1."""
        spec = request.getfixturevalue(name)
        grid = default_grid(spec, 2.0)
        single = increment_pdf_char_inversion(spec, 1.0, grid)
        double = increment_pdf_char_inversion(spec, 2.0, grid)
        size = grid.num_points
        convolved = np.convolve(single.values, single.values)[size // 2:size // 2 + size] * grid.step
        assert np.max(np.abs(convolved - double.values)) < 1e-5

    def test_compound_poisson_continuous_part(self, poisson_spec):
        grid = default_grid(poisson_spec, 1.0)
        closed = increment_pdf_closed_form(poisson_spec, 1.0, grid)
        inverted = increment_pdf_char_inversion(poisson_spec, 1.0, grid, continuous_part=True)
        assert inverted.atom_at_zero == pytest.approx(math.exp(-0.6))
        assert np.max(np.abs(closed.values - inverted.values)) < 1e-5

    def test_compound_poisson_atom_not_resolvable(self, poisson_spec):
        """Without separating the atom the spectrum never decays."""
        with pytest.raises(ResolutionError) as excinfo:
            increment_pdf_char_inversion(poisson_spec, 1.0, default_grid(poisson_spec, 1.0))
        assert excinfo.value.suggested_points > 4096

    def test_laplace_kink_flags_truncation(self, laplace_spec):
        """The slowly decaying Laplace spectrum reaches the inversion size limit."""
        grid = default_grid(laplace_spec, 1.0)
        inverted = increment_pdf_char_inversion(laplace_spec, 1.0, grid)
        closed = increment_pdf_closed_form(laplace_spec, 1.0, grid)
        assert inverted.spectrum_truncated
        assert np.max(np.abs(closed.values - inverted.values)) < 1e-5

    def test_stable_density(self, stable_spec):
        """p(0) = Gamma(1 + 1/alpha) / (pi c^(1/alpha)) for the exponent -c|w|^alpha."""
        pdf = increment_pdf(stable_spec, 1.0)
        expected = special.gamma(1.0 + 1.0 / 1.5) / math.pi
        assert value_at_zero(pdf) == pytest.approx(expected, abs=1e-5)
        assert np.all(pdf.values >= 0.0)
        np.testing.assert_allclose(pdf.values[1:], pdf.values[1:][::-1], atol=1e-12)
        assert 0.99 < pdf.total_mass() <= 1.0 + 1e-9


class TestLatticeMasses:
    """Test cell probabilities used as transition weights."""

    def test_gaussian_masses_sum_to_one(self, gaussian_spec):
        lags = np.arange(-2000, 2001)
        masses = lattice_masses(gaussian_spec, 1.0, 0.01, lags)
        assert masses.sum() == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(masses, masses[::-1], rtol=1e-9, atol=1e-300)

    def test_atom_on_lag_zero(self, poisson_spec):
        masses = lattice_masses(poisson_spec, 1.0, 0.05, np.array([-1, 0, 1]))
        assert masses[1] > math.exp(-0.6)
        assert masses[0] == pytest.approx(masses[2])

    def test_atom_can_be_left_out(self, poisson_spec):
        lags = np.arange(-400, 401)
        with_atom = lattice_masses(poisson_spec, 1.0, 0.05, lags)
        continuous = lattice_masses(poisson_spec, 1.0, 0.05, lags, include_atom=False)
        assert with_atom.sum() == pytest.approx(1.0, abs=1e-8)
        assert continuous.sum() == pytest.approx(1.0 - math.exp(-0.6), abs=1e-8)
        np.testing.assert_allclose(with_atom - continuous, np.where(lags == 0, math.exp(-0.6), 0.0), atol=1e-15)

    @pytest.mark.parametrize("T", [0.25, 0.5, 1.5, 2.0])
    def test_variance_gamma_masses_match_quadrature(self, T):
        """Cell masses agree with adaptive integration of the Bessel-K density."""
        spec = InnovationSpec(kind=InnovationKind.VARIANCE_GAMMA, gamma=1.0)
        step = 0.5
        lags = np.arange(-4, 5)
        masses = lattice_masses(spec, T, step, lags)

        def density(x):
            return math.exp(log_density(spec, T, x))

        for lag, mass in zip(lags, masses):
            lower, upper = (abs(lag) - 0.5) * step, (abs(lag) + 0.5) * step
            if lag == 0:
                reference = 2.0 * integrate.quad(density, 0.0, upper, limit=200)[0]
            else:
                reference = integrate.quad(density, lower, upper, limit=200)[0]
            assert mass == pytest.approx(reference, abs=1e-8)

    def test_variance_gamma_central_mass(self):
        """F(1) - F(-1) for gamma = 1, T = 1/2, where the density is K_0(|x|) / pi."""
        spec = InnovationSpec(kind=InnovationKind.VARIANCE_GAMMA, gamma=1.0)
        reference = 2.0 * integrate.quad(lambda x: special.k0(x) / math.pi, 0.0, 1.0)[0]
        assert lattice_masses(spec, 0.5, 2.0, np.array([0]))[0] == pytest.approx(reference, abs=1e-10)
        assert reference == pytest.approx(0.7910064, abs=1e-6)

    def test_shape_follows_lags(self, laplace_spec):
        lags = np.arange(-3, 3)[:, None] - np.arange(4)[None, :]
        assert lattice_masses(laplace_spec, 1.0, 0.1, lags).shape == (6, 4)

    def test_stable_masses(self, stable_spec):
        masses = lattice_masses(stable_spec, 1.0, 0.05, np.arange(-20, 21))
        assert np.all(masses > 0.0)
        assert masses[20] == pytest.approx(0.05 * special.gamma(1.0 + 1.0 / 1.5) / math.pi, rel=1e-3)


class TestPenalty:
    """Test the MAP penalty Psi_T."""

    def test_gaussian_is_quadratic(self, gaussian_spec):
        x = np.array([-2.0, 0.0, 0.5, 3.0])
        np.testing.assert_allclose(psi(gaussian_spec, 1.0, x), 0.5 * x**2, atol=1e-12)

    def test_cauchy_is_logarithmic(self, cauchy_spec):
        s = cauchy_spec.stable_scale
        assert psi(cauchy_spec, 1.0, 1.0) == pytest.approx(math.log1p(1.0 / s**2))

    def test_laplace_is_absolute_value(self, laplace_spec):
        assert psi(laplace_spec, 1.0, -2.0) == pytest.approx(2.0 * laplace_spec.gamma)

    def test_zero_at_origin(self, stable_spec, cauchy_spec):
        assert psi(stable_spec, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)
        assert psi(cauchy_spec, 1.0, 0.0) == 0.0

    def test_stable_penalty_is_even_and_increasing(self, stable_spec):
        x = np.array([0.5, 1.0, 5.0, 20.0, 1000.0])
        values = psi(stable_spec, 1.0, x)
        assert np.all(np.diff(values) > 0.0)
        np.testing.assert_allclose(psi(stable_spec, 1.0, -x), values)
        assert np.isfinite(values[-1])

    def test_degenerate_penalties(self, poisson_spec):
        with pytest.raises(DegeneratePenaltyError):
            psi(poisson_spec, 1.0, 1.0)
        spec = InnovationSpec(kind=InnovationKind.VARIANCE_GAMMA, gamma=1.0)
        with pytest.raises(DegeneratePenaltyError):
            psi(spec, 0.5, 1.0)

    @pytest.mark.parametrize("name", ["gaussian_spec", "laplace_spec"])
    def test_convex_penalty(self, name, request):
        spec = request.getfixturevalue(name)
        values = psi(spec, 1.0, np.linspace(-5.0, 5.0, 201))
        assert np.all(np.diff(values, 2) >= -1e-12)

    def test_cauchy_penalty_is_not_convex(self, cauchy_spec):
        values = psi(cauchy_spec, 1.0, np.linspace(-5.0, 5.0, 201))
        second = np.diff(values, 2)
        assert second.min() < -1e-4
        assert second.max() > 0.0

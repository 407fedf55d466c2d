"""Increment densities p_u of Lévy processes and the MAP penalty Psi_T.

Densities come from two routes: closed forms (Gaussian, Cauchy, variance
gamma, compound Poisson) and numerical inversion of the characteristic
function exp(T f(w)) with the convention

    P(w) = int p(x) exp(-j w x) dx,      p(x) = (1/2pi) int P(w) exp(j w x) dw.

Besides point values every GridPdf carries exact cell probabilities, which are
the transition weights used by message passing.
"""
import logging
import math
from functools import lru_cache

import numpy as np
from scipy import fft, integrate, special, stats

from src.config import Settings, get_settings
from src.exceptions import (
    ArgumentError,
    DegeneratePenaltyError,
    ResolutionError,
    UnsupportedClosedFormError,
    UnsupportedModelError,
)
from src.levy.innovations import characteristic_function
from src.schemas import GridPdf, GridSpec, InnovationKind, InnovationSpec

logger = logging.getLogger(__name__)

POISSON_TAIL = 1e-12
# absolute accuracy of the variance-gamma CDF
VG_CDF_TOLERANCE = 1e-12
STABLE_DOMAIN_EXTENSION = 16


def increment_scale(spec: InnovationSpec, T: float) -> float:
    """Standard-deviation equivalent of the increment over a period T."""
    if spec.kind is InnovationKind.GAUSSIAN:
        return spec.sigma * math.sqrt(T)
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        return spec.amplitude_sigma * math.sqrt(spec.poisson_rate * T)
    if spec.kind is InnovationKind.VARIANCE_GAMMA:
        return math.sqrt(2.0 * T) / spec.gamma
    return (spec.stable_scale * T) ** (1.0 / spec.alpha)


def default_grid(spec: InnovationSpec, T: float, num_points: int | None = None) -> GridSpec:
    """
    Choose the default grid of an increment density.

    Gaussian, variance-gamma and compound-Poisson laws span 12 standard
    deviations (at least 12 amplitude deviations for compound Poisson); stable
    laws span 64 scale units.
    """
    _require_density(spec)
    num_points = num_points or get_settings().grid_points
    if spec.kind is InnovationKind.ALPHA_STABLE:
        half_width = 64.0 * increment_scale(spec, T)
    elif spec.kind is InnovationKind.COMPOUND_POISSON:
        half_width = 12.0 * spec.amplitude_sigma * math.sqrt(1.0 + spec.poisson_rate * T)
    else:
        half_width = 12.0 * increment_scale(spec, T)
    return GridSpec(half_width=half_width, num_points=num_points)


def has_closed_form(spec: InnovationSpec) -> bool:
    return spec.kind is not InnovationKind.ALPHA_STABLE or spec.is_cauchy


def is_unbounded_at_zero(spec: InnovationSpec, T: float) -> bool:
    """Variance-gamma increments with T <= 1/2 have a density singular at 0."""
    return spec.kind is InnovationKind.VARIANCE_GAMMA and T <= 0.5


def _check_period(T: float) -> None:
    if not T > 0 or not math.isfinite(T):
        raise ArgumentError("the sampling period T must be positive and finite")


def _require_density(spec: InnovationSpec) -> None:
    if spec.is_degenerate:
        raise UnsupportedModelError("the Gaussian law with sigma = 0 is a point mass at zero and has no density")


def _poisson_components(spec: InnovationSpec, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Jump counts i >= 1 and Poisson weights, truncated at cumulative weight 1 - 1e-12."""
    mean = spec.poisson_rate * T
    last = max(1, int(stats.poisson.ppf(1.0 - POISSON_TAIL, mean)))
    counts = np.arange(1, last + 1)
    return counts, stats.poisson.pmf(counts, mean)


def log_density(spec: InnovationSpec, T: float, x):
    """
    Closed-form log-density of the increment over a period T.

    For compound-Poisson laws this is the log-density of the continuous part
    (the atom e^(-lambda T) at zero is excluded).

    Raises:
        UnsupportedClosedFormError: For alpha-stable laws with alpha != 1
    """
    _check_period(T)
    _require_density(spec)
    x = np.asarray(x, dtype=float)
    kind = spec.kind

    if kind is InnovationKind.GAUSSIAN:
        result = stats.norm.logpdf(x, scale=spec.sigma * math.sqrt(T))
    elif kind is InnovationKind.ALPHA_STABLE:
        if not spec.is_cauchy:
            raise UnsupportedClosedFormError(f"no closed-form density for alpha={spec.alpha}")
        result = stats.cauchy.logpdf(x, scale=spec.stable_scale * T)
    elif kind is InnovationKind.COMPOUND_POISSON:
        counts, weights = _poisson_components(spec, T)
        scales = spec.amplitude_sigma * np.sqrt(counts)
        terms = np.log(weights) + stats.norm.logpdf(x[..., None], scale=scales)
        result = special.logsumexp(terms, axis=-1)
    else:
        result = _variance_gamma_log_density(spec.gamma, T, x)

    return float(result) if result.ndim == 0 else result


def _variance_gamma_log_density(gamma: float, T: float, x: np.ndarray) -> np.ndarray:
    """log of gamma |gx|^nu K_nu(|gx|) / (sqrt(pi) 2^nu Gamma(T)), nu = T - 1/2."""
    nu = T - 0.5
    z = np.abs(gamma * x)
    const = math.log(gamma) - 0.5 * math.log(math.pi) - nu * math.log(2.0) - special.gammaln(T)
    with np.errstate(divide="ignore", invalid="ignore"):
        result = const + nu * np.log(z) + np.log(special.kve(nu, z)) - z
    if T > 0.5:
        # K_nu(z) ~ Gamma(nu) 2^(nu-1) z^(-nu) as z -> 0
        at_zero = math.log(gamma) + special.gammaln(nu) - math.log(2.0 * math.sqrt(math.pi)) - special.gammaln(T)
    else:
        at_zero = np.inf
    return np.where(z == 0.0, at_zero, result)


def _interval_probability(dist, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """P(lower <= X < upper), using the survival function on the positive side."""
    return np.where(
        lower >= 0.0,
        dist.sf(lower) - dist.sf(upper),
        dist.cdf(upper) - dist.cdf(lower),
    )


def _variance_gamma_centered_cdf(gamma: float, T: float, x) -> np.ndarray:
    """
    F(x) - 1/2 for the symmetric variance-gamma law.

    The increment is (G1 - G2)/gamma with G1, G2 ~ Gamma(T, 1), so for x >= 0
    F(x) - 1/2 = E[Q(T, G2) - Q(T, gamma x + G2)], Q the regularized upper
    incomplete gamma function. The expectation is integrated adaptively over
    G2; for T < 1 the substitution G2 = s^(1/T) removes the singularity of the
    gamma density at zero.
    """
    x = np.asarray(x, dtype=float)
    if T == 1.0:
        return stats.laplace.cdf(x, scale=1.0 / gamma) - 0.5
    y = gamma * np.abs(x)

    def gap(u: float) -> np.ndarray:
        return special.gammaincc(T, u) - special.gammaincc(T, u + y)

    if T < 1.0:
        scale = 1.0 / special.gamma(T + 1.0)

        def integrand(s: float) -> np.ndarray:
            u = s ** (1.0 / T)
            return scale * math.exp(-u) * gap(u)

    else:
        log_norm = special.gammaln(T)

        def integrand(u: float) -> np.ndarray:
            if u == 0.0:
                return np.zeros_like(y)
            return math.exp((T - 1.0) * math.log(u) - u - log_norm) * gap(u)

    value, _ = integrate.quad_vec(integrand, 0.0, np.inf, epsabs=VG_CDF_TOLERANCE, epsrel=0.0, norm="max")
    return np.sign(x) * value


@lru_cache(maxsize=32)
def _variance_gamma_edge_cdf(gamma: float, T: float, step: float, max_lag: int) -> np.ndarray:
    """F((j + 1/2) step) - 1/2 for j = 0..max_lag."""
    return _variance_gamma_centered_cdf(gamma, T, (np.arange(max_lag + 1) + 0.5) * step)


def _variance_gamma_lattice_masses(gamma: float, T: float, step: float, lags: np.ndarray) -> np.ndarray:
    table = _variance_gamma_edge_cdf(gamma, T, float(step), int(np.max(np.abs(lags))))

    def upper_edge(k: np.ndarray) -> np.ndarray:
        # F((k + 1/2) step) - 1/2 is odd about k = -1/2
        return np.where(k >= 0, table[np.where(k >= 0, k, 0)], -table[np.where(k < 0, -k - 1, 0)])

    return upper_edge(lags) - upper_edge(lags - 1)


def _continuous_interval_probability(spec: InnovationSpec, T: float, lower, upper) -> np.ndarray:
    """Probability of [lower, upper) under the continuous part of the increment law."""
    kind = spec.kind
    if kind is InnovationKind.GAUSSIAN:
        return _interval_probability(stats.norm(scale=spec.sigma * math.sqrt(T)), lower, upper)
    if kind is InnovationKind.ALPHA_STABLE:
        if not spec.is_cauchy:
            raise UnsupportedClosedFormError(f"no closed-form distribution for alpha={spec.alpha}")
        return _interval_probability(stats.cauchy(scale=spec.stable_scale * T), lower, upper)
    if kind is InnovationKind.COMPOUND_POISSON:
        counts, weights = _poisson_components(spec, T)
        total = np.zeros(np.broadcast(lower, upper).shape)
        for count, weight in zip(counts, weights):
            component = stats.norm(scale=spec.amplitude_sigma * math.sqrt(count))
            total += weight * _interval_probability(component, lower, upper)
        return total
    centered = _variance_gamma_centered_cdf
    return centered(spec.gamma, T, upper) - centered(spec.gamma, T, lower)


def atom_weight(spec: InnovationSpec, T: float) -> float:
    """Probability e^(-lambda T) that a compound-Poisson increment is exactly zero."""
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        return math.exp(-spec.poisson_rate * T)
    return 0.0


def lattice_masses(spec: InnovationSpec, T: float, step: float, lags, include_atom: bool = True) -> np.ndarray:
    """
    Probability that the increment falls in the lattice cell of each lag.

    Cell k is [(k - 1/2) step, (k + 1/2) step); the atom of a compound-Poisson
    law is added to lag 0 unless ``include_atom`` is false.

    Laws without a closed form take the masses of a characteristic-function
    inversion on a lattice wide enough for every lag.

    Args:
        spec: Innovation law
        T: Sampling period
        step: Lattice spacing
        lags: Integer lags, any shape
        include_atom: Add the compound-Poisson atom to lag 0

    Returns:
        Masses with the shape of ``lags``
    """
    _check_period(T)
    _require_density(spec)
    lags = np.asarray(lags)
    if not has_closed_form(spec):
        span = 2 * (int(np.max(np.abs(lags))) + 1)
        num_points = max(256, 1 << (span - 1).bit_length())
        pdf = increment_pdf_char_inversion(
            spec, T, GridSpec(half_width=0.5 * num_points * step, num_points=num_points)
        )
        return pdf.cell_masses[pdf.center_index + lags]
    if spec.kind is InnovationKind.VARIANCE_GAMMA and T != 1.0:
        masses = _variance_gamma_lattice_masses(spec.gamma, T, step, lags)
    else:
        centers = lags * step
        masses = _continuous_interval_probability(spec, T, centers - 0.5 * step, centers + 0.5 * step)
    masses = np.maximum(masses, 0.0)
    atom = atom_weight(spec, T) if include_atom else 0.0
    if atom:
        masses = masses + np.where(lags == 0, atom, 0.0)
    return masses


def increment_pdf_closed_form(spec: InnovationSpec, T: float, grid: GridSpec) -> GridPdf:
    """
    Sample the closed-form increment density on a grid.

    Args:
        spec: Innovation law
        T: Sampling period
        grid: Target grid

    Returns:
        GridPdf with exact cell probabilities. For variance gamma with T <= 1/2
        the density at x = 0 is replaced by its grid neighbor and the pdf is
        flagged unbounded.

    Raises:
        UnsupportedClosedFormError: For alpha-stable laws with alpha != 1
    """
    if not has_closed_form(spec):
        raise UnsupportedClosedFormError(f"no closed-form density for alpha={spec.alpha}")
    x = grid.points()
    center = grid.num_points // 2
    log_values = np.array(log_density(spec, T, x), dtype=float)
    unbounded = is_unbounded_at_zero(spec, T)
    if unbounded:
        log_values[center] = log_values[center + 1]
    lags = np.arange(grid.num_points) - center
    return GridPdf(
        x_min=grid.x_min,
        step=grid.step,
        values=np.exp(log_values),
        log_values=log_values,
        cell_masses=lattice_masses(spec, T, grid.step, lags, include_atom=False),
        atom_at_zero=atom_weight(spec, T),
        unbounded=unbounded,
    )


def _inversion_layout(spec: InnovationSpec, T: float, grid: GridSpec, settings: Settings, atom: float):
    """Pick the refinement and extension factors of the internal inversion grid."""
    extend = STABLE_DOMAIN_EXTENSION if spec.kind is InnovationKind.ALPHA_STABLE else 1
    while extend > 1 and grid.num_points * extend > settings.inversion_max_points:
        extend //= 2

    def nyquist_level(refine: int) -> float:
        omega = math.pi * refine / grid.step
        return abs(characteristic_function(spec, T, omega) - atom)

    def residual(refine: int) -> float:
        # spectrum level at the Nyquist frequency and a bound on the mass beyond it
        level = nyquist_level(refine)
        return max(level, refine * level / grid.step)

    refine = 1
    while (
        residual(refine) > settings.nyquist_tol
        and grid.num_points * extend * refine * 2 <= settings.inversion_max_points
    ):
        refine *= 2
    # ratio of the spectrum at the Nyquist frequency to its value one octave below
    half_level = abs(characteristic_function(spec, T, math.pi * refine / (2.0 * grid.step)) - atom)
    return refine, extend, residual(refine), nyquist_level(refine) / max(half_level, 1e-300)


def increment_pdf_char_inversion(
    spec: InnovationSpec,
    T: float,
    grid: GridSpec,
    continuous_part: bool = False,
    settings: Settings | None = None,
) -> GridPdf:
    """
    Invert the characteristic function exp(T f(w)) on a grid.

    The spectrum is evaluated on an internal grid that is finer than ``grid``
    until its level at the Nyquist frequency, and the mass beyond it, drop
    below the tolerance (and wider for algebraic tails). It is inverted with an
    FFT, clamped to nonnegative values, renormalized and sampled back on
    ``grid``.

    Args:
        spec: Innovation law
        T: Sampling period
        grid: Target grid
        continuous_part: Invert exp(T f(w)) - e^(-lambda T) and report the
            compound-Poisson atom separately
        settings: Numerical settings, defaults to the process settings

    Returns:
        GridPdf sampled on ``grid``

    Raises:
        ResolutionError: If the spectrum does not decay below the tolerance
    """
    _check_period(T)
    _require_density(spec)
    settings = settings or get_settings()
    atom = atom_weight(spec, T) if continuous_part else 0.0

    refine, extend, level, decay_ratio = _inversion_layout(spec, T, grid, settings, atom)
    spectrum_truncated = False
    if level > settings.nyquist_tol:
        if decay_ratio > 0.99:
            suggested = grid.num_points * extend * refine * 2
            raise ResolutionError(
                f"characteristic function of {spec.to_text()} does not decay below "
                f"{settings.nyquist_tol:g} (level {level:.3g}); an atom must be handled "
                f"separately or a grid of {suggested} points is needed",
                suggested_points=suggested,
            )
        spectrum_truncated = True
        logger.warning(
            "spectrum of %s at T=%g still at %.3g at the internal Nyquist frequency",
            spec.to_text(), T, level,
        )

    size = grid.num_points * extend * refine
    fine_step = grid.step / refine
    omega = (np.arange(size) - size // 2) * (2.0 * math.pi / (size * fine_step))
    spectrum = characteristic_function(spec, T, omega) - atom
    density = fft.fftshift(fft.ifft(fft.ifftshift(spectrum))).real / fine_step
    density = np.maximum(density, 0.0)
    density *= (1.0 - atom) / (density.sum() * fine_step)

    # coarse point i sits at internal index size/2 + (i - N/2) * refine
    center = size // 2
    offsets = (np.arange(grid.num_points) - grid.num_points // 2) * refine
    values = density[center + offsets]
    if refine == 1:
        cell_masses = values * grid.step
    else:
        # trapezoid over the refine + 1 internal points spanning each cell
        window = np.arange(-(refine // 2), refine // 2 + 1)
        weights = np.ones(window.size)
        weights[[0, -1]] = 0.5
        cells = np.take(density, center + offsets[:, None] + window[None, :], mode="wrap")
        cell_masses = cells @ weights * fine_step

    unbounded = is_unbounded_at_zero(spec, T)
    with np.errstate(divide="ignore"):
        log_values = np.log(values)
    return GridPdf(
        x_min=grid.x_min,
        step=grid.step,
        values=values,
        log_values=log_values,
        cell_masses=cell_masses,
        atom_at_zero=atom,
        unbounded=unbounded,
        spectrum_truncated=spectrum_truncated,
    )


@lru_cache(maxsize=64)
def increment_pdf(spec: InnovationSpec, T: float, grid: GridSpec | None = None) -> GridPdf:
    """Cached increment density: closed form when available, inversion otherwise."""
    grid = grid or default_grid(spec, T)
    if has_closed_form(spec):
        return increment_pdf_closed_form(spec, T, grid)
    return increment_pdf_char_inversion(spec, T, grid, continuous_part=True)


@lru_cache(maxsize=64)
def _psi_table(spec: InnovationSpec, T: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Tabulated Psi_T on x >= 0 from the inversion grid, plus the log-log tail slope."""
    pdf = increment_pdf(spec, T)
    center = pdf.center_index
    log_values = pdf.log_values[center:]
    finite = np.isfinite(log_values)
    stop = int(np.argmin(finite)) if not finite.all() else log_values.size
    x = pdf.x[center:center + stop]
    table = log_values[0] - log_values[:stop]
    # Psi grows like s * log|x| beyond the table for algebraic tails
    slope = (table[-1] - table[-2]) / math.log(x[-1] / x[-2])
    return x, table, slope


def psi(spec: InnovationSpec, T: float, x):
    """
    MAP penalty Psi_T(x) = -log p_u(x) + log p_u(0), so that Psi_T(0) = 0.

    Uses the closed-form density when available, else the cached inversion
    grid with linear interpolation (and a logarithmic tail beyond it).

    Raises:
        DegeneratePenaltyError: For compound-Poisson laws (atom at zero) and
            for densities unbounded at zero
    """
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        raise DegeneratePenaltyError("the compound-Poisson MAP penalty is degenerate: the MAP estimate is all-zero")
    if is_unbounded_at_zero(spec, T):
        raise DegeneratePenaltyError(f"p_u(0) is unbounded for variance gamma at T={T}")
    x_arr = np.asarray(x, dtype=float)

    if has_closed_form(spec):
        result = log_density(spec, T, 0.0) - np.asarray(log_density(spec, T, x_arr))
    else:
        table_x, table, slope = _psi_table(spec, T)
        ax = np.abs(x_arr)
        inside = np.interp(ax, table_x, table)
        with np.errstate(divide="ignore"):
            beyond = table[-1] + slope * np.log(np.maximum(ax, table_x[-1]) / table_x[-1])
        result = np.where(ax <= table_x[-1], inside, beyond)

    return float(result) if np.ndim(x) == 0 else result

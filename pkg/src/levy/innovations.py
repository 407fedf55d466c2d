"""Lévy exponents of the supported symmetric innovation laws.

Every law is described by f(w), the exponent of its characteristic form,
normalized so that f(0) = 0 and f(w) = f(-w) <= 0.
"""
import logging
import math

import numpy as np
from scipy import integrate, special, stats

from src.exceptions import ArgumentError, UnsupportedModelError
from src.schemas import InnovationKind, InnovationSpec, KIND_ALIASES

logger = logging.getLogger(__name__)

# Parameters equating the differential entropy of the unit-period increment
# to log(2*pi*e)/2 for the three laws compared in the benchmarks.
CALIBRATED_VARIANCE_GAMMA_RATE = math.sqrt(2.0 * math.e / math.pi)
CALIBRATED_CAUCHY_SCALE = math.sqrt(math.e / (8.0 * math.pi))


def levy_exponent(spec: InnovationSpec, omega):
    """
    Evaluate the Lévy exponent f(w) of an innovation law.

    Args:
        spec: Innovation law
        omega: Frequency, scalar or array

    Returns:
        f(w) with the shape of ``omega`` (a float for scalar input)

    Raises:
        ArgumentError: If ``omega`` contains a non-finite value
    """
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ArgumentError("levy_exponent needs finite frequencies")

    if spec.kind is InnovationKind.GAUSSIAN:
        value = -0.5 * spec.sigma**2 * w**2
    elif spec.kind is InnovationKind.COMPOUND_POISSON:
        # lambda * (p_a^(w) - 1) with a zero-mean Gaussian amplitude law
        value = spec.poisson_rate * np.expm1(-0.5 * spec.amplitude_sigma**2 * w**2)
    elif spec.kind is InnovationKind.ALPHA_STABLE:
        value = -spec.stable_scale * np.abs(w) ** spec.alpha
    else:
        value = -np.log1p((w / spec.gamma) ** 2)

    return float(value) if np.ndim(omega) == 0 else value


def characteristic_function(spec: InnovationSpec, T: float, omega):
    """Characteristic function exp(T f(w)) of the increment over a period T."""
    return np.exp(T * levy_exponent(spec, omega))


def levy_density(spec: InnovationSpec, a):
    """
    Evaluate the Lévy density v(a) of the jump part.

    The Gaussian law has no jumps and returns zeros. For the alpha-stable law
    the density is C/|a|^(1+alpha) with C chosen so that its exponent is
    -stable_scale * |w|^alpha.
    """
    a = np.asarray(a, dtype=float)
    if spec.kind is InnovationKind.GAUSSIAN:
        return np.zeros_like(a)
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        return spec.poisson_rate * stats.norm.pdf(a, scale=spec.amplitude_sigma)
    if spec.kind is InnovationKind.ALPHA_STABLE:
        with np.errstate(divide="ignore"):
            return _stable_levy_constant(spec) / np.abs(a) ** (1.0 + spec.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.exp(-spec.gamma * np.abs(a)) / np.abs(a)


def _stable_levy_constant(spec: InnovationSpec) -> float:
    alpha = spec.alpha
    if alpha == 1.0:
        return spec.stable_scale / math.pi
    # int (cos(w a) - 1) |a|^(-1-alpha) da = -|w|^alpha * 2 Gamma(1-alpha) cos(pi alpha/2) / alpha
    factor = 2.0 * special.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2.0) / alpha
    return spec.stable_scale / factor


def admissibility_integral(spec: InnovationSpec) -> float:
    """
    Closed-form value of the Lévy-Khintchine integral of min(1, a^2) v(a).

    A finite value certifies that the Lévy density is admissible.
    """
    if spec.kind is InnovationKind.GAUSSIAN:
        return 0.0
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        s = spec.amplitude_sigma
        # E[A^2; |A| < 1] + P(|A| >= 1) for A ~ N(0, s^2)
        inner = s**2 * (2.0 * stats.norm.cdf(1.0 / s) - 1.0) - 2.0 * s * stats.norm.pdf(1.0 / s)
        return spec.poisson_rate * (inner + 2.0 * stats.norm.sf(1.0 / s))
    if spec.kind is InnovationKind.ALPHA_STABLE:
        alpha = spec.alpha
        return _stable_levy_constant(spec) * (2.0 / (2.0 - alpha) + 2.0 / alpha)
    g = spec.gamma
    return 2.0 * ((1.0 - math.exp(-g) * (1.0 + g)) / g**2 + special.exp1(g))


def calibrated_spec(kind) -> InnovationSpec:
    """
    Return the entropy-matched parameters of a benchmark innovation law.

    Args:
        kind: ``gaussian``, ``cauchy`` (or ``alpha_stable``) or ``variance_gamma``

    Returns:
        Gaussian sigma=1, Cauchy stable_scale=sqrt(e/(8 pi)), or variance gamma
        gamma=sqrt(2e/pi)

    Raises:
        UnsupportedModelError: For compound-Poisson and unknown kinds
    """
    name = kind.value if isinstance(kind, InnovationKind) else str(kind).lower()
    resolved = KIND_ALIASES.get(name)
    if resolved is InnovationKind.GAUSSIAN:
        return InnovationSpec(kind=resolved, sigma=1.0)
    if resolved is InnovationKind.ALPHA_STABLE:
        return InnovationSpec(kind=resolved, alpha=1.0, stable_scale=CALIBRATED_CAUCHY_SCALE)
    if resolved is InnovationKind.VARIANCE_GAMMA:
        return InnovationSpec(kind=resolved, gamma=CALIBRATED_VARIANCE_GAMMA_RATE)
    raise UnsupportedModelError(f"no calibrated parameters for innovation kind '{name}'")


def differential_entropy_T1(spec: InnovationSpec) -> float:
    """
    Differential entropy -int p_u log p_u of the unit-period increment law.

    Integrates the closed-form log-density of the pdf engine over the real
    line with adaptive quadrature, split at the origin where the Laplace
    density has a kink.

    Raises:
        UnsupportedModelError: For compound-Poisson laws, whose increment has an atom
    """
    from src.levy.pdf_engine import log_density

    if spec.kind is InnovationKind.COMPOUND_POISSON:
        raise UnsupportedModelError("the compound-Poisson increment law has an atom; entropy is undefined")

    def integrand(x: float) -> float:
        log_p = float(log_density(spec, 1.0, x))
        return 0.0 if log_p == -np.inf else -math.exp(log_p) * log_p

    left, _ = integrate.quad(integrand, -np.inf, 0.0, limit=400)
    right, _ = integrate.quad(integrand, 0.0, np.inf, limit=400)
    entropy = left + right
    logger.debug("entropy of %s at T=1: %.8f", spec.to_text(), entropy)
    return entropy

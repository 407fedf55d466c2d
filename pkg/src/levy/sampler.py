"""Seeded realizations of Lévy-process samples, their increments and noisy observations."""
import logging
import math
from typing import Union

import numpy as np

from src.exceptions import ArgumentError
from src.schemas import InnovationKind, InnovationSpec, Observations, SamplePath

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator]


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """
    Counter-based generator for the sub-stream ``key`` of ``seed``.

    Sub-streams such as (realization, cell) are independent of each other and
    of the order in which they are created.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def _generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_stream(int(seed))


def _symmetric_stable(rng: np.random.Generator, alpha: float, count: int) -> np.ndarray:
    """Standard symmetric alpha-stable draws (exponent -|w|^alpha), Chambers-Mallows-Stuck."""
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, count)
    if alpha == 1.0:
        return np.tan(v)
    w = rng.standard_exponential(count)
    return (
        np.sin(alpha * v)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha)
    )


def sample_increments(spec: InnovationSpec, T: float, count: int, seed: SeedLike) -> np.ndarray:
    """
    Draw i.i.d. increments whose characteristic function is exp(T f(w)).

    Args:
        spec: Innovation law
        T: Sampling period
        count: Number of draws
        seed: Integer seed or an existing generator

    Returns:
        Array of ``count`` increments

    Raises:
        ArgumentError: If count < 1 or T is not positive
    """
    if count < 1:
        raise ArgumentError("sample_increments needs count >= 1")
    if not T > 0:
        raise ArgumentError("the sampling period must be positive")
    rng = _generator(seed)

    if spec.kind is InnovationKind.GAUSSIAN:
        return rng.normal(0.0, spec.sigma * math.sqrt(T), count)
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        # a sum of N Gaussian amplitudes is Gaussian with N times the variance
        jumps = rng.poisson(spec.poisson_rate * T, count)
        return spec.amplitude_sigma * np.sqrt(jumps) * rng.standard_normal(count)
    if spec.kind is InnovationKind.ALPHA_STABLE:
        if spec.is_cauchy:
            u = rng.uniform(0.0, 1.0, count)
            return spec.stable_scale * T * np.tan(math.pi * (u - 0.5))
        scale = (spec.stable_scale * T) ** (1.0 / spec.alpha)
        return scale * _symmetric_stable(rng, spec.alpha, count)
    # Gaussian variance mixture subordinated by Gamma(T, 1)
    g = rng.standard_gamma(T, count)
    return np.sqrt(2.0 * g) / spec.gamma * rng.standard_normal(count)


def integrate_increments(increments, period: float = 1.0, spec=None, seed=None) -> SamplePath:
    """Cumulative sum with s[0] = 0, the inverse of the first difference."""
    increments = np.asarray(increments, dtype=float)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return SamplePath(values=values, period=period, spec=spec, seed=seed)


def simulate_path(spec: InnovationSpec, T: float, num_increments: int, seed: SeedLike) -> SamplePath:
    """Sample s_T[0..n] of a Lévy process started at zero."""
    increments = sample_increments(spec, T, num_increments, seed)
    recorded = seed if isinstance(seed, int) else None
    path = integrate_increments(increments, period=T, spec=spec, seed=recorded)
    logger.debug("simulated %d increments of %s at T=%g", num_increments, spec.to_text(), T)
    return path


def add_noise(path: SamplePath, sigma_n: float, stride: int, seed: SeedLike) -> Observations:
    """
    Observe every ``stride``-th node of a path through additive white Gaussian noise.

    Args:
        path: Noiseless samples s_T[0..K]
        sigma_n: Noise standard deviation (0 gives exact samples)
        stride: Fine-grid nodes n_T between observations
        seed: Integer seed or an existing generator

    Returns:
        Observations s~[i] = s_T[i n_T] + n[i], i = 0..K/n_T

    Raises:
        ArgumentError: If the stride does not divide K or sigma_n < 0
    """
    if sigma_n < 0 or not math.isfinite(sigma_n):
        raise ArgumentError("sigma_n must be a nonnegative finite number")
    if stride < 1 or path.num_increments % stride:
        raise ArgumentError(f"stride {stride} does not divide the {path.num_increments} path increments")

    clean = path.values[::stride]
    if sigma_n == 0:
        noisy = clean.copy()
    else:
        noisy = clean + sigma_n * _generator(seed).standard_normal(clean.size)
    return Observations(
        noisy=noisy,
        noise_variance=sigma_n**2,
        stride=stride,
        fine_grid_length=path.values.size,
        clean=clean,
        period=path.period,
        spec=path.spec,
        seed=seed if isinstance(seed, int) else None,
    )

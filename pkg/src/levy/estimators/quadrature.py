"""Brute-force posterior by tensor quadrature for chains with at most three nodes.

Used as a reference for message passing and to check the identity
s^_MMSE = s~ + sigma_n^2 grad log p_s~(s~).
"""
import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import stats

from src.estimator_schemas import DenoiseResult
from src.exceptions import ArgumentError, UnsupportedModelError
from src.levy.pdf_engine import lattice_masses
from src.schemas import InnovationSpec, Observations

logger = logging.getLogger(__name__)

MAX_NODES = 3
POINTS_PER_AXIS = {1: 2001, 2: 401, 3: 161}
WINDOW_STDS = 8.0
TWEEDIE_STEP = 1e-3


class QuadraturePosterior(NamedTuple):
    """Evidence log p_s~(s~) and posterior means s^[0..m] (s^[0] = 0)."""

    log_evidence: float
    mean: np.ndarray


class _Lattice:
    """Per-node windows s~[i] +/- 8 sigma_n on the lattice hZ, with the prior weight tensor."""

    def __init__(self, obs: Observations, spec: InnovationSpec, T: float, points: int | None):
        m = obs.num_observations
        self.sigma = obs.noise_std
        points = points or POINTS_PER_AXIS[m]
        self.step = 2.0 * WINDOW_STDS * self.sigma / (points - 1)
        self.indices = [
            np.arange(
                math.floor((y - WINDOW_STDS * self.sigma) / self.step),
                math.ceil((y + WINDOW_STDS * self.sigma) / self.step) + 1,
            )
            for y in obs.noisy[1:]
        ]
        self.points = [j * self.step for j in self.indices]

        prior = lattice_masses(spec, T, self.step, self.indices[0])
        for previous, current in zip(self.indices, self.indices[1:]):
            transition = lattice_masses(spec, T, self.step, current[None, :] - previous[:, None])
            prior = prior[..., None] * transition
        self.prior = prior

    def weights(self, samples: np.ndarray) -> np.ndarray:
        """Prior times the pointwise Gaussian likelihood of ``samples``."""
        likelihood = stats.norm.pdf(samples[0] - self.points[0], scale=self.sigma)
        for y, x in zip(samples[1:], self.points[1:]):
            likelihood = np.multiply.outer(likelihood, stats.norm.pdf(y - x, scale=self.sigma))
        return self.prior * likelihood

    def log_evidence(self, samples: np.ndarray) -> float:
        return math.log(self.weights(samples).sum())


def _check_obs(obs: Observations) -> None:
    if obs.num_observations > MAX_NODES or obs.num_observations < 1:
        raise UnsupportedModelError(f"tensor quadrature handles 1 to {MAX_NODES} nodes, got {obs.num_observations}")
    if obs.stride != 1:
        raise ArgumentError("tensor quadrature needs one observation per node (stride 1)")


def quadrature_posterior(
    obs: Observations,
    spec: InnovationSpec,
    T: float | None = None,
    points: int | None = None,
) -> QuadraturePosterior:
    """
    Posterior mean and evidence by summation over a product lattice.

    Args:
        obs: Noisy observations of at most three nodes (stride 1)
        spec: Innovation law of the prior
        T: Sampling period, defaults to ``obs.period``
        points: Lattice points per axis (default 2001, 401, 161 for m = 1, 2, 3)

    Raises:
        UnsupportedModelError: If m > 3
        ArgumentError: If the observations are noiseless or the stride is not 1
    """
    _check_obs(obs)
    if obs.noise_variance <= 0:
        raise ArgumentError("tensor quadrature needs noisy observations")
    lattice = _Lattice(obs, spec, T or obs.period, points)
    weights = lattice.weights(obs.noisy[1:])
    total = weights.sum()

    mean = np.zeros(obs.num_observations + 1)
    axes = tuple(range(weights.ndim))
    for i, x in enumerate(lattice.points):
        marginal = weights.sum(axis=tuple(a for a in axes if a != i))
        mean[i + 1] = marginal @ x / total
    return QuadraturePosterior(log_evidence=math.log(total), mean=mean)


def tweedie_identity_check(
    obs: Observations,
    spec: InnovationSpec,
    T: float | None,
    result: DenoiseResult,
    points: int | None = None,
) -> float:
    """
    Sup-norm gap between an estimate and s~ + sigma_n^2 grad log p_s~(s~).

    The gradient is a central difference of the quadrature evidence with
    step 1e-3 sigma_n, the lattice windows held fixed. Noiseless observations
    reduce the right-hand side to s~.

    Raises:
        UnsupportedModelError: If m > 3
    """
    _check_obs(obs)
    samples = obs.noisy[1:]
    estimate = result.estimate[1:]
    if obs.noise_variance == 0:
        return float(np.max(np.abs(estimate - samples)))

    lattice = _Lattice(obs, spec, T or obs.period, points)
    step = TWEEDIE_STEP * obs.noise_std
    gradient = np.empty(samples.size)
    for i in range(samples.size):
        shift = np.zeros(samples.size)
        shift[i] = step
        gradient[i] = (lattice.log_evidence(samples + shift) - lattice.log_evidence(samples - shift)) / (2.0 * step)
    rhs = samples + obs.noise_variance * gradient
    gap = float(np.max(np.abs(estimate - rhs)))
    logger.debug("Tweedie gap %.3g over %d nodes", gap, samples.size)
    return gap

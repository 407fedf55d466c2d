"""Interpolation of exact samples onto a finer grid."""
import numpy as np

from src.estimator_schemas import DenoiseResult
from src.exceptions import ArgumentError
from src.levy.estimators.message_passing import mmse_denoise
from src.schemas import GridSpec, InnovationSpec, Observations


def _require_noiseless(obs: Observations, name: str) -> None:
    if obs.noise_variance != 0:
        raise ArgumentError(f"{name} needs noiseless observations (noise_variance = 0)")


def linear_interpolate(obs: Observations) -> DenoiseResult:
    """
    Piecewise-linear interpolation between the samples, anchored at s[0] = 0.

    A node theta in [l n_T, (l+1) n_T] receives
    (1 - t) s[l n_T] + t s[(l+1) n_T] with t = (theta - l n_T) / n_T.
    """
    _require_noiseless(obs, "linear_interpolate")
    knots = np.arange(obs.num_observations + 1) * obs.stride
    values = np.concatenate(([0.0], obs.noisy[1:]))
    estimate = np.interp(np.arange(obs.fine_grid_length), knots, values)
    return DenoiseResult(estimate=estimate)


def mmse_interpolate(
    obs: Observations,
    spec: InnovationSpec,
    T: float | None = None,
    grid: GridSpec | None = None,
    keep_marginals: bool = False,
) -> DenoiseResult:
    """
    Posterior mean between exact samples by message passing.

    Exact observations enter as one-bin indicator likelihoods; the observed
    nodes are returned as the observed values.

    Raises:
        ArgumentError: If the observations are noisy
    """
    _require_noiseless(obs, "mmse_interpolate")
    result = mmse_denoise(obs, spec, T, grid, keep_marginals)
    estimate = result.estimate.copy()
    estimate[obs.observed_nodes()] = obs.noisy[1:]
    return DenoiseResult(
        estimate=estimate,
        iterations=result.iterations,
        converged=result.converged,
        posterior_marginals=result.posterior_marginals,
    )

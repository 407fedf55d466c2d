"""Estimators of Lévy-process samples from noisy or sparse observations."""
from src.estimator_schemas import DenoiseResult, EstimatorConfig, EstimatorMethod
from src.exceptions import ArgumentError
from src.levy.estimators.interpolation import linear_interpolate, mmse_interpolate
from src.levy.estimators.message_passing import bp_grid, mmse_denoise
from src.levy.estimators.quadrature import quadrature_posterior, tweedie_identity_check
from src.levy.estimators.variational import (
    lmmse_denoise,
    log_denoise,
    map_denoise,
    tv_denoise,
)
from src.schemas import InnovationSpec, Observations


def denoise(
    obs: Observations,
    config: EstimatorConfig,
    spec: InnovationSpec | None = None,
    keep_marginals: bool = False,
) -> DenoiseResult:
    """
    Run the estimator named by ``config.method``.

    Args:
        obs: Observations
        config: Method and its parameters
        spec: Innovation law, required by ``map`` and ``mmse``
        keep_marginals: Keep the posterior marginals (``mmse`` only)

    Returns:
        DenoiseResult on the fine grid

    Raises:
        ArgumentError: If ``map`` or ``mmse`` is requested without a spec
    """
    method = config.method
    if method is EstimatorMethod.LMMSE:
        return lmmse_denoise(obs, config.reg_weight)
    elif method is EstimatorMethod.TV:
        return tv_denoise(obs, config.reg_weight)
    elif method is EstimatorMethod.LOG:
        return log_denoise(obs, config.reg_weight, config.epsilon, config.max_iter, config.tol)

    if spec is None:
        raise ArgumentError(f"method '{method.value}' needs the innovation law of the prior")
    if method is EstimatorMethod.MAP:
        return map_denoise(obs, spec, obs.period, config.max_iter, config.tol)
    grid = config.grid
    if grid is None:
        grid = bp_grid(obs, spec, obs.period)
    return mmse_denoise(obs, spec, obs.period, grid, keep_marginals)


__all__ = [
    "bp_grid",
    "denoise",
    "linear_interpolate",
    "lmmse_denoise",
    "log_denoise",
    "map_denoise",
    "mmse_denoise",
    "mmse_interpolate",
    "quadrature_posterior",
    "tv_denoise",
    "tweedie_identity_check",
]

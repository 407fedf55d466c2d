"""Benchmark harness: oracle regularization weights, SNR improvement and noise sweeps.

Random streams are keyed by (seed, stream, realization[, purpose]) so every
cell is reproducible, independent of the worker count, and all methods of a
cell see the same signals and noise.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError
from scipy.optimize import minimize_scalar

from src.config import Settings, get_settings
from src.estimator_schemas import (
    BenchmarkCell,
    BenchmarkReport,
    DenoiseResult,
    EstimatorMethod,
    ExperimentConfig,
    LambdaCalibration,
)
from src.exceptions import ArgumentError, ConfigError, LevyError
from src.levy.estimators import (
    bp_grid,
    lmmse_denoise,
    log_denoise,
    map_denoise,
    mmse_denoise,
    tv_denoise,
)
from src.levy.innovations import calibrated_spec
from src.levy.sampler import add_noise, rng_stream, simulate_path
from src.schemas import InnovationSpec, Observations

logger = logging.getLogger(__name__)

EVALUATION_STREAM = 0
CALIBRATION_STREAM = 1
SEARCH_HALF_WIDTH = 6.0
WIDENED_HALF_WIDTH = 12.0
# optimum closer than this (in log lambda) to a bound counts as a boundary hit
BOUNDARY_TOLERANCE = 1e-2
# objective value of a weight at which the estimator fails
FAILED_OBJECTIVE = 1e6

SPEC_KEYS = ("kind", "sigma", "poisson_rate", "amplitude_sigma", "alpha", "stable_scale", "gamma")
LIST_KEYS = ("noise_variances", "methods")
CONFIG_KEYS = SPEC_KEYS + LIST_KEYS + (
    "calibrated",
    "period",
    "signal_length",
    "realizations",
    "calibration_realizations",
    "seed",
    "grid_points",
    "epsilon",
    "workers",
)


def snr_improvement(s_true, s_noisy, s_hat) -> float:
    """
    SNR improvement 10 log10(||s~ - s||^2 / ||s^ - s||^2) in dB over indices 1..m.

    Returns:
        The improvement, or +inf when the estimate is exact

    Raises:
        ArgumentError: If the lengths differ or s~ equals s on 1..m
    """
    s_true, s_noisy, s_hat = (np.asarray(v, dtype=float)[1:] for v in (s_true, s_noisy, s_hat))
    if not s_true.shape == s_noisy.shape == s_hat.shape:
        raise ArgumentError("snr_improvement needs sequences of equal length")
    noise_energy = float(np.sum((s_noisy - s_true) ** 2))
    if noise_energy == 0:
        raise ArgumentError("the noisy signal equals the true signal; the improvement is undefined")
    error_energy = float(np.sum((s_hat - s_true) ** 2))
    if error_energy == 0:
        return math.inf
    return 10.0 * math.log10(noise_energy / error_energy)


def _realization(config: ExperimentConfig, stream: int, index: int, cell: int, noise_variance: float) -> Observations:
    path = simulate_path(config.spec, config.period, config.signal_length, rng_stream(config.seed, stream, index, 0))
    noise = rng_stream(config.seed, stream, index, cell + 1)
    return add_noise(path, math.sqrt(noise_variance), 1, noise)


def run_method(
    method: EstimatorMethod,
    obs: Observations,
    config: ExperimentConfig,
    reg_weight: float | None = None,
) -> DenoiseResult:
    """Apply one benchmark method to a realization."""
    if method is EstimatorMethod.LMMSE:
        return lmmse_denoise(obs, reg_weight)
    elif method is EstimatorMethod.TV:
        return tv_denoise(obs, reg_weight)
    elif method is EstimatorMethod.LOG:
        return log_denoise(obs, reg_weight, config.epsilon)
    elif method is EstimatorMethod.MAP:
        return map_denoise(obs, config.spec, config.period)
    grid = bp_grid(obs, config.spec, config.period, config.grid_points)
    return mmse_denoise(obs, config.spec, config.period, grid)


def _search(objective, center: float, half_width: float, iterations: int) -> tuple[float, bool]:
    lower, upper = center - half_width, center + half_width
    result = minimize_scalar(objective, bounds=(lower, upper), method="bounded", options={"maxiter": iterations})
    at_boundary = min(result.x - lower, upper - result.x) < BOUNDARY_TOLERANCE
    return float(result.x), at_boundary


def oracle_lambda(
    method: EstimatorMethod | str,
    spec: InnovationSpec,
    noise_variance: float,
    config: ExperimentConfig,
    cell: int = 0,
    settings: Settings | None = None,
) -> LambdaCalibration:
    """
    SNR-optimal regularization weight averaged over calibration realizations.

    For each realization log lambda is searched in log(2 sigma_n^2) +/- 6 by
    bounded Brent search; a boundary optimum widens the range to +/- 12
    once, and a second boundary hit sets ``at_boundary``. The per-realization
    optima are combined by their geometric mean.

    Raises:
        ArgumentError: If the method has no regularization weight
    """
    method = EstimatorMethod(method)
    if not method.is_variational:
        raise ArgumentError(f"method '{method.value}' has no regularization weight to calibrate")
    settings = settings or get_settings()
    config = config if config.spec == spec else config.model_copy(update={"spec": spec})
    center = math.log(2.0 * noise_variance)
    optima = []
    at_boundary = False

    for index in range(config.calibration_realizations):
        obs = _realization(config, CALIBRATION_STREAM, index, cell, noise_variance)

        def objective(log_weight: float) -> float:
            try:
                result = run_method(method, obs, config, math.exp(log_weight))
                return -snr_improvement(obs.clean, obs.noisy, result.estimate)
            except LevyError:
                return FAILED_OBJECTIVE

        log_weight, hit = _search(objective, center, SEARCH_HALF_WIDTH, settings.golden_iterations)
        if hit:
            log_weight, hit = _search(objective, center, WIDENED_HALF_WIDTH, settings.golden_iterations)
        if hit:
            at_boundary = True
            logger.warning(
                "oracle lambda for %s at noise variance %g stays on the search boundary (%g)",
                method.value, noise_variance, math.exp(log_weight),
            )
        optima.append(math.exp(log_weight))

    reg_weight = math.exp(float(np.mean(np.log(optima))))
    return LambdaCalibration(reg_weight=reg_weight, per_realization=optima, at_boundary=at_boundary)


def _evaluate_realization(config, index, cell, noise_variance, weights):
    """SNR improvement and runtime of every method on one shared realization."""
    obs = _realization(config, EVALUATION_STREAM, index, cell, noise_variance)
    outcomes = {}
    for method in config.methods:
        started = time.perf_counter()
        try:
            result = run_method(method, obs, config, weights.get(method))
            snri = snr_improvement(obs.clean, obs.noisy, result.estimate)
        except LevyError as exc:
            logger.warning("%s failed on realization %d (noise variance %g): %s", method.value, index, noise_variance, exc)
            snri = None
        outcomes[method] = (snri, 1000.0 * (time.perf_counter() - started))
    return outcomes


def run_experiment(config: ExperimentConfig, settings: Settings | None = None) -> BenchmarkReport:
    """
    Sweep the noise variances of ``config`` and evaluate every method.

    Each cell calibrates the variational methods on separate realizations,
    then evaluates all methods on R shared realizations. Estimator failures
    are counted per cell and the run continues.
    """
    settings = settings or get_settings()
    workers = max(config.workers, 1)
    cells = []

    for cell_index, noise_variance in enumerate(config.noise_variances):
        calibrations = {
            method: oracle_lambda(method, config.spec, noise_variance, config, cell_index, settings)
            for method in config.methods
            if method.is_variational
        }
        weights = {method: calibration.reg_weight for method, calibration in calibrations.items()}

        def evaluate(index: int):
            return _evaluate_realization(config, index, cell_index, noise_variance, weights)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(evaluate, range(config.realizations)))

        for method in config.methods:
            values = [o[method][0] for o in outcomes if o[method][0] is not None]
            runtime = sum(o[method][1] for o in outcomes)
            calibration = calibrations.get(method)
            cells.append(
                BenchmarkCell(
                    method=method,
                    noise_variance=noise_variance,
                    snri_db=values,
                    mean_snri_db=float(np.mean(values)) if values else math.nan,
                    std_snri_db=float(np.std(values, ddof=1)) if len(values) > 1 else 0.0,
                    reg_weight=calibration.reg_weight if calibration else None,
                    lambda_at_boundary=calibration.at_boundary if calibration else False,
                    failures=config.realizations - len(values),
                    runtime_ms=runtime,
                )
            )
        logger.info("noise variance %g done (%d/%d)", noise_variance, cell_index + 1, len(config.noise_variances))

    metadata = {
        "lambda_averaging": "geometric mean of per-realization SNR-optimal weights",
        "streams": {"evaluation": EVALUATION_STREAM, "calibration": CALIBRATION_STREAM},
        "note": "signal length, realization counts and noise grid are harness choices",
    }
    return BenchmarkReport(config=config, cells=cells, metadata=metadata)


def _split(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _config_error(exc: ValidationError, prefix: str = "") -> ConfigError:
    error = exc.errors()[0]
    key = str(error["loc"][0]) if error["loc"] else "kind"
    return ConfigError(f"invalid value for '{prefix}{key}': {error['msg']}", key=key)


def load_experiment_config(path) -> ExperimentConfig:
    """
    Parse a flat ``key=value`` benchmark file into an ExperimentConfig.

    Raises:
        ConfigError: Naming the offending key for unknown keys, missing values
            or values that fail validation
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {path} does not exist")
    values = dotenv_values(path)
    for key, value in values.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key '{key}'", key=key)
        if value is None or value == "":
            raise ConfigError(f"configuration key '{key}' has no value", key=key)
    if "kind" not in values:
        raise ConfigError("configuration key 'kind' is required", key="kind")

    for key in SPEC_KEYS[1:]:
        if key in values:
            try:
                float(values[key])
            except ValueError as exc:
                raise ConfigError(f"configuration key '{key}' must be a number", key=key) from exc

    calibrated = values.get("calibrated", "false").lower() in ("1", "true", "yes")
    spec_fields = {k: values[k] for k in SPEC_KEYS if k in values}
    try:
        spec = calibrated_spec(spec_fields["kind"]) if calibrated else InnovationSpec.from_mapping(spec_fields)
    except ValidationError as exc:
        raise _config_error(exc) from exc
    except (LevyError, ValueError) as exc:
        raise ConfigError(str(exc), key="kind") from exc

    fields: dict[str, object] = {"spec": spec}
    for key, value in values.items():
        if key in SPEC_KEYS or key == "calibrated":
            continue
        fields[key] = _split(value) if key in LIST_KEYS else value
    try:
        return ExperimentConfig(**fields)
    except ValidationError as exc:
        raise _config_error(exc) from exc

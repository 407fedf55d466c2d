"""Variational denoisers: quadratic (LMMSE), total variation, Log and MAP.

Every cost has the form

    sum_{i=1..m} (s[i n_T] - s~[i])^2 + lambda * sum_{k=1..K} Phi(s[k] - s[k-1])

over the fine grid s[0..K] with s[0] = 0 pinned, so the first difference is
s[1] - 0. The observation s~[0] is ignored.
"""
import logging
import math
from collections import deque
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import solveh_banded

from src.estimator_schemas import DenoiseResult
from src.exceptions import ArgumentError, DegeneratePenaltyError, NumericalError
from src.levy.pdf_engine import psi
from src.schemas import InnovationKind, InnovationSpec, Observations

logger = logging.getLogger(__name__)

# Relative cost increase tolerated as rounding in the MM iterations.
COST_SLACK = 1e-9
MAX_HALVINGS = 30


class Penalty(NamedTuple):
    """Symmetric potential Phi of the increments and Phi'(t) / (2t)."""

    value: Callable[[np.ndarray], np.ndarray]
    half_slope: Callable[[np.ndarray], np.ndarray]


def _check_weight(reg_weight: float) -> None:
    if not reg_weight > 0 or not math.isfinite(reg_weight):
        raise ArgumentError("the regularization weight lambda must be positive and finite")


def _require_unit_stride(obs: Observations, name: str) -> None:
    if obs.stride != 1:
        raise ArgumentError(f"{name} needs one observation per fine-grid node (stride 1)")


def _with_origin(unknowns: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], unknowns))


def data_misfit(obs: Observations, estimate) -> float:
    """Squared error between the estimate at the observed nodes and s~[1..m]."""
    estimate = np.asarray(estimate, dtype=float)
    residual = estimate[obs.observed_nodes()] - obs.noisy[1:]
    return float(residual @ residual)


def variational_cost(obs: Observations, estimate, reg_weight: float, penalty: Callable) -> float:
    """Data misfit plus lambda times the penalty summed over all fine-grid differences."""
    estimate = np.asarray(estimate, dtype=float)
    return data_misfit(obs, estimate) + reg_weight * float(np.sum(penalty(np.diff(estimate))))


def solve_weighted_quadratic(obs: Observations, weights) -> np.ndarray:
    """
    Minimize the data misfit plus sum_k w_k (s[k] - s[k-1])^2 with s[0] = 0.

    The normal equations are symmetric tridiagonal in s[1..K] and solved in
    banded form.

    Args:
        obs: Observations on the fine grid
        weights: Positive weights w_1..w_K of the differences

    Returns:
        Estimate s[0..K] with s[0] = 0
    """
    size = obs.fine_grid_length - 1
    if size == 0:
        return np.zeros(1)
    weights = np.asarray(weights, dtype=float)
    observed = np.zeros(size)
    rhs = np.zeros(size)
    nodes = obs.observed_nodes() - 1
    observed[nodes] = 1.0
    rhs[nodes] = obs.noisy[1:]

    upper = np.zeros((2, size))
    upper[1] = observed + weights
    upper[1, :-1] += weights[1:]
    upper[0, 1:] = -weights[1:]
    return _with_origin(solveh_banded(upper, rhs, lower=False, check_finite=False))


def lmmse_denoise(obs: Observations, reg_weight: float) -> DenoiseResult:
    """
    Smoothing-spline estimate: exact minimizer of the quadratic cost.

    Args:
        obs: Observations (any stride; unobserved nodes carry no data term)
        reg_weight: Weight lambda of sum (s[k] - s[k-1])^2

    Returns:
        DenoiseResult from one tridiagonal solve

    Raises:
        ArgumentError: If lambda <= 0
    """
    _check_weight(reg_weight)
    weights = np.full(obs.fine_grid_length - 1, reg_weight)
    estimate = solve_weighted_quadratic(obs, weights)
    cost = variational_cost(obs, estimate, reg_weight, np.square)
    return DenoiseResult(estimate=estimate, iterations=1, converged=True, cost_history=[cost])


def _scan_from_left(knots: deque, tail: tuple[float, float], level: float) -> tuple[float, float, float]:
    """
    Leftmost x where the piecewise-linear derivative reaches ``level``.

    Knots left of x are consumed. Returns x and the coefficients (a, b) of
    a + b x on the segment just right of it.
    """
    a, b = tail
    crossed = None
    while knots:
        x_knot, da, db = knots[0]
        if b > 0:
            candidate = (level - a) / b
            if candidate < x_knot:
                return candidate, a, b
        a += da
        b += db
        knots.popleft()
        crossed = x_knot
        if a + b * x_knot >= level:
            return x_knot, a, b
    if b > 0:
        return (level - a) / b, a, b
    return crossed, a, b


def _scan_from_right(knots: deque, tail: tuple[float, float], level: float) -> tuple[float, float, float]:
    """Mirror of :func:`_scan_from_left`: the rightmost x where the derivative reaches ``level``."""
    a, b = tail
    crossed = None
    while knots:
        x_knot, da, db = knots[-1]
        if b > 0:
            candidate = (level - a) / b
            if candidate > x_knot:
                return candidate, a, b
        a -= da
        b -= db
        knots.pop()
        crossed = x_knot
        if a + b * x_knot <= level:
            return x_knot, a, b
    if b > 0:
        return (level - a) / b, a, b
    return crossed, a, b


def tv_denoise(obs: Observations, reg_weight: float) -> DenoiseResult:
    """
    Exact total-variation estimate by dynamic programming.

    The derivative of the partial cost G_k(x) = min over s[1..k-1] of the
    cost up to node k with s[k] = x is piecewise linear and nondecreasing.
    It is stored as a deque of knots (x, jump in a, jump in b) plus the two
    tail segments a + b x. Each step clips it to [-mu, mu] (mu = lambda/2)
    and adds the next data term, and the optimum is recovered by clipping
    backwards through the recorded [x_lo, x_hi] intervals.

    Raises:
        ArgumentError: If lambda <= 0 or the stride is not 1
    """
    _check_weight(reg_weight)
    _require_unit_stride(obs, "tv_denoise")
    y = obs.noisy[1:]
    size = y.size
    if size == 0:
        return DenoiseResult(estimate=np.zeros(1), iterations=0)

    mu = 0.5 * reg_weight
    # mu |x - 0| from the pinned origin: slope jumps from -mu to mu at 0
    knots = deque([(0.0, 2.0 * mu, 0.0)])
    left, right = (-mu, 0.0), (mu, 0.0)
    lower = np.empty(size)
    upper = np.empty(size)

    for k in range(size):
        left = (left[0] - y[k], left[1] + 1.0)
        right = (right[0] - y[k], right[1] + 1.0)
        if k == size - 1:
            last, _, _ = _scan_from_left(knots, left, 0.0)
            break
        x_lo, a, b = _scan_from_left(knots, left, -mu)
        knots.appendleft((x_lo, a + mu, b))
        left = (-mu, 0.0)
        x_hi, a, b = _scan_from_right(knots, right, mu)
        knots.append((x_hi, mu - a, -b))
        right = (mu, 0.0)
        lower[k], upper[k] = x_lo, x_hi

    unknowns = np.empty(size)
    unknowns[-1] = last
    for k in range(size - 2, -1, -1):
        unknowns[k] = min(max(unknowns[k + 1], lower[k]), upper[k])

    estimate = _with_origin(unknowns)
    cost = variational_cost(obs, estimate, reg_weight, np.abs)
    return DenoiseResult(estimate=estimate, iterations=size, converged=True, cost_history=[cost])


def _majorize_minimize(
    obs: Observations,
    penalty: Penalty,
    reg_weight: float,
    initial: np.ndarray,
    max_iter: int,
    tol: float,
    floor: float = 0.0,
) -> DenoiseResult:
    """
    Majorize-minimize loop for potentials concave in t^2.

    Each potential is bounded above at the current difference t0 by a
    quadratic with weight Phi'(t0)/(2 t0); the surrogate is one weighted
    tridiagonal solve. A step that would raise the cost is halved toward the
    current point, and the recorded cost history never increases.
    """
    estimate = initial
    cost = variational_cost(obs, estimate, reg_weight, penalty.value)
    history = [cost]
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        diffs = np.diff(estimate)
        magnitude = np.maximum(np.abs(diffs), floor) if floor else diffs
        weights = reg_weight * penalty.half_slope(magnitude)
        proposal = solve_weighted_quadratic(obs, weights)
        new_cost = variational_cost(obs, proposal, reg_weight, penalty.value)

        halvings = 0
        while new_cost > cost and halvings < MAX_HALVINGS:
            proposal = 0.5 * (estimate + proposal)
            new_cost = variational_cost(obs, proposal, reg_weight, penalty.value)
            halvings += 1
        if new_cost > cost:
            if new_cost > cost + COST_SLACK * abs(cost):
                raise NumericalError(f"MM cost increased from {cost!r} to {new_cost!r}")
            converged = True
            break

        change = cost - new_cost
        estimate, cost = proposal, new_cost
        history.append(cost)
        if change <= tol * max(abs(cost), np.finfo(float).tiny):
            converged = True
            break

    if not converged:
        logger.warning("MM stopped after %d iterations without reaching tol=%g", max_iter, tol)
    return DenoiseResult(estimate=estimate, iterations=iterations, converged=converged, cost_history=history)


def log_penalty(epsilon: float) -> Penalty:
    """Phi(t) = log(1 + t^2 / eps^2), with Phi'(t)/(2t) = 1 / (eps^2 + t^2)."""
    eps2 = epsilon**2
    return Penalty(
        value=lambda t: np.log1p(np.square(t) / eps2),
        half_slope=lambda t: 1.0 / (eps2 + np.square(t)),
    )


def log_denoise(
    obs: Observations,
    reg_weight: float,
    epsilon: float = 1.0,
    max_iter: int = 500,
    tol: float = 1e-9,
) -> DenoiseResult:
    """
    Stationary point of the Log-penalized cost by majorize-minimize.

    Starts from the quadratic estimate with weight lambda / eps^2, the small-t
    limit of the penalty. A result with ``converged=False`` is returned when
    ``max_iter`` is exhausted.

    Raises:
        ArgumentError: If lambda or epsilon is not positive
        NumericalError: If an iteration raises the cost
    """
    _check_weight(reg_weight)
    if not epsilon > 0:
        raise ArgumentError("epsilon must be positive")
    initial = lmmse_denoise(obs, reg_weight / epsilon**2).estimate
    return _majorize_minimize(obs, log_penalty(epsilon), reg_weight, initial, max_iter, tol)


def psi_penalty(spec: InnovationSpec, T: float, scale: float) -> Penalty:
    """Potential Psi_T of the increment law, with a numerical half slope."""

    def value(t):
        return psi(spec, T, t)

    def half_slope(t):
        step = 1e-6 * (scale + np.abs(t))
        slope = (psi(spec, T, t + step) - psi(spec, T, t - step)) / (2.0 * step)
        return np.maximum(slope / (2.0 * t), 0.0)

    return Penalty(value=value, half_slope=half_slope)


def map_denoise(
    obs: Observations,
    spec: InnovationSpec,
    T: float | None = None,
    max_iter: int = 500,
    tol: float = 1e-9,
) -> DenoiseResult:
    """
    MAP estimate for the prior of ``spec``: lambda = 2 sigma_n^2 and Phi = Psi_T.

    Closed-form potentials reduce to the dedicated solvers: Gaussian to the
    quadratic cost, Laplace (variance gamma at T = 1) to total variation,
    Cauchy to the Log cost with eps = stable_scale * T. Compound Poisson and
    the zero process (sigma = 0) give the all-zero signal. Other laws use majorize-minimize on Psi_T.

    Raises:
        ArgumentError: If the observations are noiseless
        DegeneratePenaltyError: If Psi_T is unbounded at zero
    """
    T = T or obs.period
    if spec.kind is InnovationKind.COMPOUND_POISSON or spec.is_degenerate:
        return DenoiseResult(estimate=np.zeros(obs.fine_grid_length), iterations=0)
    if obs.noise_variance <= 0:
        raise ArgumentError("map_denoise needs noisy observations (noise_variance > 0)")
    reg_weight = 2.0 * obs.noise_variance

    if spec.kind is InnovationKind.GAUSSIAN:
        return lmmse_denoise(obs, obs.noise_variance / (spec.sigma**2 * T))
    if spec.kind is InnovationKind.VARIANCE_GAMMA and T == 1.0 and obs.stride == 1:
        return tv_denoise(obs, reg_weight * spec.gamma)
    if spec.is_cauchy:
        return log_denoise(obs, reg_weight, spec.stable_scale * T, max_iter=max_iter, tol=tol)
    if spec.kind is InnovationKind.VARIANCE_GAMMA and T <= 0.5:
        raise DegeneratePenaltyError(f"Psi_T is unbounded at zero for variance gamma at T={T}")

    scale = max(float(np.std(obs.noisy)), obs.noise_std, 1e-12)
    penalty = psi_penalty(spec, T, scale)
    initial = lmmse_denoise(obs, reg_weight).estimate
    return _majorize_minimize(obs, penalty, reg_weight, initial, max_iter, tol, floor=1e-9 * scale)

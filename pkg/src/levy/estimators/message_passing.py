"""MMSE estimation by forward-backward message passing on the chain of increments.

The posterior of s[0..K] factorizes into transition factors p_u(s[k] - s[k-1])
and Gaussian likelihood factors at the observed nodes. On a shared grid the
transition is a discrete convolution with the lattice cell masses of p_u, so
sum-product messages are exact up to the grid resolution.
"""
import logging
import math

import numpy as np
from scipy import fft, stats

from src.config import get_settings
from src.estimator_schemas import DenoiseResult
from src.exceptions import NumericalError, ResolutionError
from src.levy.pdf_engine import increment_scale, lattice_masses
from src.schemas import GridPdf, GridSpec, InnovationKind, InnovationSpec, Observations

logger = logging.getLogger(__name__)

# A posterior marginal may keep at most this much mass in each outer 1/64 of the grid.
EDGE_MASS_LIMIT = 1e-3
EDGE_FRACTION = 64


def bp_grid(obs: Observations, spec: InnovationSpec, T: float, num_points: int | None = None) -> GridSpec:
    """
    Shared message grid sized from the data.

    Half-width max(8 std(s~), 1.5 max|s~|, 8 (sigma_n + increment scale)).
    """
    num_points = num_points or get_settings().grid_points
    spread = increment_scale(spec, T)
    if spec.kind is InnovationKind.COMPOUND_POISSON:
        spread = spec.amplitude_sigma * math.sqrt(max(1.0, spec.poisson_rate * T))
    noisy = obs.noisy[1:] if obs.noisy.size > 1 else obs.noisy
    half_width = max(
        8.0 * float(np.std(noisy)),
        1.5 * float(np.max(np.abs(noisy))),
        8.0 * (obs.noise_std + spread),
    )
    return GridSpec(half_width=half_width, num_points=num_points)


class ChainConvolution:
    """Linear convolution of length-N messages with the (2N-1)-tap transition kernel."""

    def __init__(self, kernel: np.ndarray):
        self.size = (kernel.size + 1) // 2
        self.length = fft.next_fast_len(3 * self.size - 2, real=True)
        self.kernel_spectrum = fft.rfft(kernel, self.length)

    def __call__(self, message: np.ndarray) -> np.ndarray:
        full = fft.irfft(fft.rfft(message, self.length) * self.kernel_spectrum, self.length)
        return np.maximum(full[self.size - 1 : 2 * self.size - 1], 0.0)


def _normalize(message: np.ndarray, node: int) -> np.ndarray:
    total = message.sum()
    if not total > 0 or not math.isfinite(total):
        raise NumericalError(f"message at node {node} vanished on the grid")
    return message / total


def _likelihoods(obs: Observations, grid: GridSpec) -> np.ndarray:
    """Likelihood factor per observation i = 1..m on the grid (rows)."""
    x = grid.points()
    samples = obs.noisy[1:, None]
    if obs.noise_variance > 0:
        noise = stats.norm(scale=obs.noise_std)
        lower = x[None, :] - 0.5 * grid.step - samples
        upper = lower + grid.step
        # cell-integrated Gaussian, evaluated on the side with better relative accuracy
        return np.where(lower >= 0.0, noise.sf(lower) - noise.sf(upper), noise.cdf(upper) - noise.cdf(lower))

    indices = np.rint((obs.noisy[1:] - grid.x_min) / grid.step).astype(int)
    if np.any(indices < 0) or np.any(indices >= grid.num_points):
        raise ResolutionError(
            "an observation falls outside the message grid", suggested_points=2 * grid.num_points
        )
    factors = np.zeros((obs.num_observations, grid.num_points))
    factors[np.arange(obs.num_observations), indices] = 1.0
    return factors


def _check_edges(marginal: np.ndarray, node: int, grid: GridSpec) -> None:
    edge = max(1, grid.num_points // EDGE_FRACTION)
    if marginal[:edge].sum() > EDGE_MASS_LIMIT or marginal[-edge:].sum() > EDGE_MASS_LIMIT:
        raise ResolutionError(
            f"posterior marginal at node {node} reaches the edge of the grid "
            f"(half-width {grid.half_width:g})",
            suggested_points=2 * grid.num_points,
        )


def mmse_denoise(
    obs: Observations,
    spec: InnovationSpec,
    T: float | None = None,
    grid: GridSpec | None = None,
    keep_marginals: bool = False,
) -> DenoiseResult:
    """
    Posterior-mean estimate of every fine-grid node by sum-product message passing.

    Args:
        obs: Observations; nodes between observations carry no likelihood
        spec: Innovation law of the prior
        T: Fine-grid period, defaults to ``obs.period``
        grid: Message grid, sized from the data when omitted
        keep_marginals: Return the posterior marginal of every node

    Returns:
        DenoiseResult with s^[0] = 0 and the posterior means

    Raises:
        ResolutionError: If a marginal reaches the grid edges or an exact
            observation falls outside the grid
        NumericalError: If a message vanishes
    """
    T = T or obs.period
    if spec.is_degenerate:
        return DenoiseResult(estimate=np.zeros(obs.fine_grid_length))
    grid = grid or bp_grid(obs, spec, T)
    size = grid.num_points
    nodes = obs.fine_grid_length - 1
    x = grid.points()
    center = size // 2

    convolve = ChainConvolution(lattice_masses(spec, T, grid.step, np.arange(-(size - 1), size)))
    likelihood = np.ones((nodes + 1, size))
    likelihood[obs.observed_nodes()] = _likelihoods(obs, grid)

    forward = np.empty((nodes + 1, size))
    forward[0] = 0.0
    forward[0, center] = 1.0
    for k in range(1, nodes + 1):
        forward[k] = _normalize(convolve(forward[k - 1] * likelihood[k - 1]), k)

    backward = np.full(size, 1.0 / size)
    estimate = np.zeros(nodes + 1)
    marginals = [None] * (nodes + 1) if keep_marginals else None
    for k in range(nodes, 0, -1):
        marginal = _normalize(forward[k] * backward * likelihood[k], k)
        _check_edges(marginal, k, grid)
        estimate[k] = x @ marginal
        if keep_marginals:
            marginals[k] = _marginal_pdf(marginal, grid)
        if k > 1:
            backward = _normalize(convolve(backward * likelihood[k]), k - 1)

    if keep_marginals:
        pinned = np.zeros(size)
        pinned[center] = 1.0
        marginals[0] = _marginal_pdf(pinned, grid)
    logger.debug("message passing over %d nodes on %d points (step %.3g)", nodes, size, grid.step)
    return DenoiseResult(estimate=estimate, iterations=1, converged=True, posterior_marginals=marginals)


def _marginal_pdf(masses: np.ndarray, grid: GridSpec) -> GridPdf:
    with np.errstate(divide="ignore"):
        log_values = np.log(masses / grid.step)
    return GridPdf(
        x_min=grid.x_min,
        step=grid.step,
        values=masses / grid.step,
        log_values=log_values,
        cell_masses=masses,
    )

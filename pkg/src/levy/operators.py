"""Discretization of whitening operators: FIR taps, finite differences, L-splines."""
import numpy as np

from src.exceptions import ArgumentError
from src.schemas import FirTaps, PoleSet

# Conjugate-pair products leave rounding-level imaginary parts.
IMAGINARY_RESIDUE = 1e-12


def discretize(poles: PoleSet, T: float) -> FirTaps:
    """
    Compute the taps d_T of the discrete counterpart of a whitening operator.

    The filter is scale * conv_i (1, -exp(r_i T)), one factor per pole.

    Args:
        poles: Pole set of the operator
        T: Sampling period

    Returns:
        Real FIR taps of length n + 1

    Raises:
        ArgumentError: If the pole list is empty or T is not positive
    """
    if T <= 0:
        raise ArgumentError("the sampling period must be positive")
    if not poles.poles:
        raise ArgumentError("discretize needs at least one pole")

    taps = np.array([poles.scale], dtype=complex)
    for pole in poles.poles:
        taps = np.convolve(taps, np.array([1.0, -np.exp(pole * T)]))
    if np.max(np.abs(taps.imag)) > IMAGINARY_RESIDUE * max(1.0, np.max(np.abs(taps.real))):
        raise ArgumentError("poles do not produce real taps")
    return FirTaps(taps=taps.real, period=T)


def first_difference_taps(T: float = 1.0) -> FirTaps:
    """Taps (1, -1) of the derivative operator, i.e. the single pole r = 0."""
    return discretize(PoleSet(poles=[0j], scale=1.0), T)


def finite_differences(signal, taps: FirTaps) -> np.ndarray:
    """
    Apply the generalized finite differences u[k] = sum_i d_T[i] signal[k - i].

    Args:
        signal: Samples of the signal
        taps: FIR taps of the discretized operator

    Returns:
        Array of length len(signal) - n, one value per k = n..end

    Raises:
        ArgumentError: If the signal is shorter than the filter
    """
    signal = np.asarray(signal, dtype=float)
    if signal.size < taps.taps.size:
        raise ArgumentError("signal is shorter than the FIR filter")
    return np.convolve(signal, taps.taps, mode="valid")


def lspline_first_order(T: float, x):
    """First-order L-spline: the indicator of [0, T)."""
    if T <= 0:
        raise ArgumentError("the sampling period must be positive")
    x = np.asarray(x, dtype=float)
    value = ((x >= 0.0) & (x < T)).astype(float)
    return float(value) if value.ndim == 0 else value

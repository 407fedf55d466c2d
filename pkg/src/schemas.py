"""Pydantic schemas for innovation laws, grids, densities and sample paths."""
import math
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator


def _frozen_array(value) -> np.ndarray:
    """Convert a sequence to a read-only float64 array."""
    array = np.array(value, dtype=float)
    array.flags.writeable = False
    return array


FloatArray = Annotated[np.ndarray, BeforeValidator(_frozen_array)]


class InnovationKind(str, Enum):
    """Innovation laws driving a Lévy process."""

    GAUSSIAN = "gaussian"
    COMPOUND_POISSON = "compound_poisson"
    ALPHA_STABLE = "alpha_stable"
    VARIANCE_GAMMA = "variance_gamma"


KIND_ALIASES = {
    "gaussian": InnovationKind.GAUSSIAN,
    "compound_poisson": InnovationKind.COMPOUND_POISSON,
    "compound-poisson": InnovationKind.COMPOUND_POISSON,
    "poisson": InnovationKind.COMPOUND_POISSON,
    "alpha_stable": InnovationKind.ALPHA_STABLE,
    "alpha-stable": InnovationKind.ALPHA_STABLE,
    "cauchy": InnovationKind.ALPHA_STABLE,
    "variance_gamma": InnovationKind.VARIANCE_GAMMA,
    "variance-gamma": InnovationKind.VARIANCE_GAMMA,
    "laplace": InnovationKind.VARIANCE_GAMMA,
}

_REQUIRED_FIELDS = {
    InnovationKind.GAUSSIAN: {"sigma"},
    InnovationKind.COMPOUND_POISSON: {"poisson_rate", "amplitude_sigma"},
    InnovationKind.ALPHA_STABLE: {"alpha", "stable_scale"},
    InnovationKind.VARIANCE_GAMMA: {"gamma"},
}
_PARAMETER_FIELDS = ("sigma", "poisson_rate", "amplitude_sigma", "alpha", "stable_scale", "gamma")


class InnovationSpec(BaseModel):
    """Symmetric innovation law described by its Lévy triplet parameters.

    Only the fields relevant to ``kind`` may be set. The drift is always zero
    and the Lévy density is symmetric.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: InnovationKind
    sigma: Optional[float] = Field(None, ge=0, description="Gaussian part of the triplet (0 gives the zero process)")
    poisson_rate: Optional[float] = Field(None, gt=0, description="Jump rate of a compound-Poisson law")
    amplitude_sigma: Optional[float] = Field(None, gt=0, description="Std. dev. of the Gaussian jump amplitudes")
    alpha: Optional[float] = Field(None, gt=0, lt=2, description="Stability index")
    stable_scale: Optional[float] = Field(None, gt=0, description="Coefficient of -|w|^alpha")
    gamma: Optional[float] = Field(None, gt=0, description="Decay of the variance-gamma Lévy density")

    @model_validator(mode="after")
    def check_fields_match_kind(self):
        """Reject missing parameters and parameters that belong to another kind."""
        required = _REQUIRED_FIELDS[self.kind]
        for name in _PARAMETER_FIELDS:
            value = getattr(self, name)
            if name in required and value is None:
                raise ValueError(f"{self.kind.value} innovation requires '{name}'")
            if name not in required and value is not None:
                raise ValueError(f"'{name}' is not a parameter of the {self.kind.value} innovation")
        for name in required:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"'{name}' must be finite")
        return self

    @property
    def is_degenerate(self) -> bool:
        """True for the Gaussian law with sigma = 0, a point mass at zero."""
        return self.kind is InnovationKind.GAUSSIAN and self.sigma == 0.0

    @property
    def is_cauchy(self) -> bool:
        """True for the symmetric alpha-stable law with alpha = 1."""
        return self.kind is InnovationKind.ALPHA_STABLE and self.alpha == 1.0

    def to_text(self) -> str:
        """Serialize to the flat ``key=value`` form, e.g. ``kind=cauchy stable_scale=0.5``."""
        if self.is_cauchy:
            parts = ["kind=cauchy", f"stable_scale={self.stable_scale!r}"]
        else:
            parts = [f"kind={self.kind.value}"]
            parts += [
                f"{name}={getattr(self, name)!r}"
                for name in _PARAMETER_FIELDS
                if getattr(self, name) is not None
            ]
        return " ".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "InnovationSpec":
        """Parse the flat ``key=value`` form produced by :meth:`to_text`.

        Raises:
            ValueError: If a token is not ``key=value`` or the kind is unknown
        """
        fields: dict[str, str] = {}
        for token in text.replace(",", " ").split():
            key, sep, value = token.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got '{token}'")
            fields[key.strip()] = value.strip()
        return cls.from_mapping(fields)

    @classmethod
    def from_mapping(cls, fields: dict[str, str]) -> "InnovationSpec":
        """Build a spec from string values keyed by field name, resolving kind aliases."""
        fields = dict(fields)
        kind_name = fields.pop("kind", "").lower()
        if kind_name not in KIND_ALIASES:
            raise ValueError(f"unknown innovation kind '{kind_name}'")
        values: dict[str, object] = {"kind": KIND_ALIASES[kind_name]}
        if kind_name == "cauchy":
            values["alpha"] = 1.0
        for key, value in fields.items():
            values[key] = float(value)
        return cls(**values)


class GridSpec(BaseModel):
    """Uniform grid spanning [-W, W) with N points and x = 0 on the grid."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    half_width: float = Field(..., gt=0, description="Half-width W of the grid")
    num_points: int = Field(4096, ge=256, description="Number of points N (a power of two)")

    @field_validator("num_points")
    @classmethod
    def check_power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("num_points must be a power of two")
        return value

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / self.num_points

    @property
    def x_min(self) -> float:
        return -self.half_width

    def points(self) -> np.ndarray:
        """Grid abscissae x_j = (j - N/2) * step."""
        return (np.arange(self.num_points) - self.num_points // 2) * self.step


class GridPdf(BaseModel):
    """Discretized one-dimensional density with an optional atom at zero."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x_min: float
    step: float = Field(..., gt=0)
    values: FloatArray = Field(..., description="Density at the grid points")
    log_values: FloatArray = Field(..., description="Log-density at the grid points (-inf allowed)")
    cell_masses: FloatArray = Field(..., description="Probability of each cell [x - step/2, x + step/2)")
    atom_at_zero: float = Field(0.0, ge=0, le=1)
    unbounded: bool = Field(False, description="The density is unbounded at x = 0")
    spectrum_truncated: bool = Field(False, description="Inversion stopped before the Nyquist tolerance")

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.step * np.arange(self.values.size)

    @property
    def center_index(self) -> int:
        return int(round(-self.x_min / self.step))

    def total_mass(self) -> float:
        """Atom plus the probability of every grid cell."""
        return float(self.atom_at_zero + self.cell_masses.sum())

    def mean(self) -> float:
        return float(np.dot(self.x, self.cell_masses) / self.total_mass())


class PoleSet(BaseModel):
    """Poles of a whitening operator and its scale factor."""

    model_config = ConfigDict(frozen=True)

    poles: list[complex] = Field(default_factory=list)
    scale: float = Field(1.0, description="Nonzero scale lambda_n")

    @field_validator("scale")
    @classmethod
    def check_scale(cls, value: float) -> float:
        if value == 0:
            raise ValueError("scale must be nonzero")
        return value

    @model_validator(mode="after")
    def check_poles(self):
        """Poles must lie in the closed left half-plane and come in conjugate pairs."""
        poles = np.array(self.poles, dtype=complex)
        if np.any(poles.real > 0):
            raise ValueError("poles must satisfy Re r <= 0")
        if poles.size and not np.allclose(np.sort_complex(poles), np.sort_complex(poles.conj()), atol=1e-12):
            raise ValueError("complex poles must appear in conjugate pairs")
        return self


class FirTaps(BaseModel):
    """FIR filter d_T[0..n] of the discretized whitening operator."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    taps: FloatArray
    period: float = Field(1.0, gt=0)

    @field_validator("taps")
    @classmethod
    def check_leading_tap(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1 or value.size == 0 or value[0] == 0:
            raise ValueError("taps must be a nonempty vector with d_T[0] != 0")
        return value

    @property
    def order(self) -> int:
        return self.taps.size - 1


class SamplePath(BaseModel):
    """Noiseless samples s_T[0..K] of a Lévy process with s_T[0] = 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: FloatArray
    period: float = Field(1.0, gt=0)
    spec: Optional[InnovationSpec] = None
    seed: Optional[int] = Field(None, ge=0, lt=2**64)

    @field_validator("values")
    @classmethod
    def check_boundary(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1 or value.size == 0 or value[0] != 0.0:
            raise ValueError("a sample path starts at s_T[0] = 0")
        return value

    @property
    def num_increments(self) -> int:
        return self.values.size - 1


class Observations(BaseModel):
    """Noisy samples s~[0..m] taken every ``stride`` nodes of the fine grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    noisy: FloatArray
    noise_variance: float = Field(..., ge=0)
    stride: int = Field(1, ge=1, description="Fine-grid nodes between observations (n_T)")
    fine_grid_length: int = Field(..., ge=1)
    clean: Optional[FloatArray] = Field(None, description="Noiseless samples at the observed nodes, when known")
    period: float = Field(1.0, gt=0)
    spec: Optional[InnovationSpec] = None
    seed: Optional[int] = Field(None, ge=0, lt=2**64)

    @model_validator(mode="after")
    def check_layout(self):
        """The stride must divide the fine grid: length = m * n_T + 1."""
        m = self.noisy.size - 1
        if self.noisy.ndim != 1 or m < 0:
            raise ValueError("noisy samples must be a nonempty vector")
        if self.fine_grid_length != m * self.stride + 1:
            raise ValueError("fine_grid_length must equal m * stride + 1")
        if self.clean is not None and self.clean.shape != self.noisy.shape:
            raise ValueError("clean and noisy samples must have the same length")
        return self

    @property
    def num_observations(self) -> int:
        """Number m of observations after the pinned node 0."""
        return self.noisy.size - 1

    @property
    def noise_std(self) -> float:
        return math.sqrt(self.noise_variance)

    def observed_nodes(self) -> np.ndarray:
        """Fine-grid indices i * n_T of the observations i = 1..m."""
        return np.arange(1, self.noisy.size) * self.stride


class CliInvocation(BaseModel):
    """One parsed command line: the subcommand, its options and the files it touches."""

    model_config = ConfigDict(frozen=True)

    subcommand: Literal["simulate", "pdf", "denoise", "interpolate", "benchmark"]
    flags: dict[str, Any] = Field(default_factory=dict)
    inputs: list[Path] = Field(default_factory=list)
    outputs: list[Path] = Field(default_factory=list)

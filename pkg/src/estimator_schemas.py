"""Pydantic schemas for estimator settings, results and benchmark reports."""
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.schemas import FloatArray, GridPdf, GridSpec, InnovationSpec


class EstimatorMethod(str, Enum):
    """Estimation procedures available to ``denoise`` and the benchmarks."""

    LMMSE = "lmmse"
    TV = "tv"
    LOG = "log"
    MAP = "map"
    MMSE = "mmse"

    @property
    def is_variational(self) -> bool:
        """Methods whose regularization weight is tuned by the oracle search."""
        return self in (EstimatorMethod.LMMSE, EstimatorMethod.TV, EstimatorMethod.LOG)


class EstimatorConfig(BaseModel):
    """Settings of one estimator invocation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: EstimatorMethod
    reg_weight: Optional[float] = Field(None, gt=0, description="Regularization weight lambda")
    epsilon: float = Field(1.0, gt=0, description="Scale of the Log penalty, kept fixed")
    grid: Optional[GridSpec] = Field(None, description="Message-passing grid (mmse only)")
    max_iter: int = Field(500, ge=1)
    tol: float = Field(1e-9, gt=0, description="Relative cost change that stops the MM iterations")

    @model_validator(mode="after")
    def check_weight(self):
        if self.method.is_variational and self.reg_weight is None:
            raise ValueError(f"method '{self.method.value}' requires reg_weight")
        return self


class DenoiseResult(BaseModel):
    """Estimate s^_T[0..K] on the fine grid, with solver diagnostics."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    estimate: FloatArray
    iterations: int = Field(0, ge=0)
    converged: bool = True
    posterior_marginals: Optional[list[GridPdf]] = None
    cost_history: list[float] = Field(default_factory=list)

    @field_validator("estimate")
    @classmethod
    def check_pinned(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1 or value.size == 0 or value[0] != 0.0:
            raise ValueError("an estimate starts at s^_T[0] = 0")
        return value


class LambdaCalibration(BaseModel):
    """Outcome of the oracle regularization-weight search."""

    reg_weight: float = Field(..., gt=0, description="Geometric mean of the per-realization optima")
    per_realization: list[float]
    at_boundary: bool = Field(False, description="An optimum stayed on the widened search boundary")


class ExperimentConfig(BaseModel):
    """One benchmark scenario: an innovation law swept over noise variances."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    spec: InnovationSpec
    period: float = Field(1.0, gt=0)
    signal_length: int = Field(256, ge=16, description="Number m of observations")
    realizations: int = Field(20, ge=2, description="Evaluation realizations R per cell")
    calibration_realizations: int = Field(10, ge=1, description="Realizations used by the oracle lambda search")
    noise_variances: list[float] = Field(..., min_length=1)
    methods: list[EstimatorMethod] = Field(..., min_length=1)
    seed: int = Field(20130101, ge=0, lt=2**64)
    grid_points: int = Field(4096, ge=256, description="Message-passing grid size")
    epsilon: float = Field(1.0, gt=0)
    workers: int = Field(1, ge=1)

    @field_validator("noise_variances")
    @classmethod
    def check_variances(cls, value: list[float]) -> list[float]:
        if any(v <= 0 for v in value):
            raise ValueError("noise variances must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("noise variances must be sorted ascending without repeats")
        return value

    @field_validator("grid_points")
    @classmethod
    def check_power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError("grid_points must be a power of two")
        return value


class BenchmarkCell(BaseModel):
    """Statistics of one (method, noise variance) cell over R realizations."""

    method: EstimatorMethod
    noise_variance: float
    snri_db: list[float] = Field(..., description="Per-realization SNR improvement, failures excluded")
    mean_snri_db: float
    std_snri_db: float
    reg_weight: Optional[float] = None
    lambda_at_boundary: bool = False
    failures: int = Field(0, ge=0)
    runtime_ms: float = Field(0.0, ge=0)


class BenchmarkReport(BaseModel):
    """All cells of an experiment plus the metadata echoed into the JSON sidecar."""

    config: ExperimentConfig
    cells: list[BenchmarkCell]
    metadata: dict = Field(default_factory=dict)

    def cell(self, method: EstimatorMethod | str, noise_variance: float) -> BenchmarkCell:
        method = EstimatorMethod(method)
        for cell in self.cells:
            if cell.method is method and cell.noise_variance == noise_variance:
                return cell
        raise KeyError((method.value, noise_variance))

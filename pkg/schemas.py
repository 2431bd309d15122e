"""Pydantic schemas for design inputs, trial data, analyses and simulation results."""
import math
from typing import Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config
from special_functions import normal_cdf

SweepField = Literal[
    "assurance", "correlation", "lower_bound", "alloc_ratio", "sd_ratio", "ci_level", "data_correlation"
]
OutputFormat = Literal["table", "records"]
CorrelationInput = Union[float, List[List[float]]]


def as_correlation_matrix(value: CorrelationInput, k: int) -> np.ndarray:
    """
    Build a K x K correlation matrix from an exchangeable rho or a full matrix.

    Args:
        value: Single correlation broadcast to all pairs, or a nested K x K list
        k: Number of endpoints

    Returns:
        Symmetric matrix with unit diagonal

    Raises:
        ValueError: If the shape, symmetry, diagonal or range is invalid
    """
    if isinstance(value, (int, float)):
        rho = float(value)
        if not -1.0 <= rho <= 1.0:
            raise ValueError(f"correlation must lie in [-1, 1], got {rho}")
        matrix = np.full((k, k), rho)
        np.fill_diagonal(matrix, 1.0)
        return matrix

    matrix = np.asarray(value, dtype=float)
    if matrix.shape != (k, k):
        raise ValueError(f"correlation matrix must be {k}x{k}, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("correlation matrix entries must be finite")
    if not np.allclose(matrix, matrix.T, atol=1e-12):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(matrix), 1.0, atol=1e-12):
        raise ValueError("correlation matrix must have a unit diagonal")
    if np.any(np.abs(matrix) > 1.0 + 1e-12):
        raise ValueError("correlation entries must lie in [-1, 1]")
    return matrix


class EndpointAssumption(BaseModel):
    """Planned win probability and SD ratio for one endpoint."""
    model_config = ConfigDict(extra="forbid")

    winp: float = Field(..., gt=0.0, lt=1.0, description="Planned endpoint win probability")
    sd_ratio: float = Field(1.0, gt=0.0, description="Control SD divided by treated SD")
    name: Optional[str] = Field(None, description="Endpoint label")

    @model_validator(mode="before")
    @classmethod
    def _from_normal_means(cls, data):
        # Accept {mean_diff, sd_treated, sd_control} in place of {winp, sd_ratio}
        if isinstance(data, dict) and "mean_diff" in data and "winp" not in data:
            data = dict(data)
            sd_treated = float(data.pop("sd_treated", 1.0))
            sd_control = float(data.pop("sd_control", 1.0))
            mean_diff = float(data.pop("mean_diff"))
            if sd_treated <= 0 or sd_control <= 0:
                raise ValueError("sd_treated and sd_control must be positive")
            data["winp"] = normal_cdf(mean_diff / math.hypot(sd_treated, sd_control))
            data.setdefault("sd_ratio", sd_control / sd_treated)
        return data


class DesignSpec(BaseModel):
    """Complete planning inputs for the global WinP sample size formula."""
    model_config = ConfigDict(extra="forbid")

    endpoints: List[EndpointAssumption] = Field(..., min_length=1, description="Per-endpoint assumptions")
    correlation: CorrelationInput = Field(0.0, description="Exchangeable rho or full K x K between-WinP correlation")
    lower_bound: float = Field(..., gt=0.0, lt=1.0, description="Lower bound theta0 for the lower confidence limit")
    assurance: float = Field(config.DEFAULT_ASSURANCE, gt=0.0, lt=1.0, description="Assurance probability 1 - beta")
    ci_level: float = Field(config.DEFAULT_CI_LEVEL, gt=0.0, lt=1.0, description="Two-sided confidence level 1 - alpha")
    alloc_ratio: float = Field(config.DEFAULT_ALLOC_RATIO, gt=0.0, description="Control size divided by treated size")

    @model_validator(mode="after")
    def _check_correlation(self):
        as_correlation_matrix(self.correlation, len(self.endpoints))
        return self

    @property
    def k(self) -> int:
        return len(self.endpoints)

    @property
    def global_winp(self) -> float:
        """Planned global WinP: exact mean of the endpoint WinPs."""
        return float(np.mean([e.winp for e in self.endpoints]))

    def correlation_matrix(self) -> np.ndarray:
        return as_correlation_matrix(self.correlation, self.k)


class DesignResult(BaseModel):
    """Sample size computed for a DesignSpec."""
    raw_n: float = Field(..., gt=0.0, description="Continuous total sample size")
    n_treated: int = Field(..., gt=0, description="Treated arm size")
    n_control: int = Field(..., gt=0, description="Control arm size")
    n_total: int = Field(..., gt=0, description="Total sample size")
    f_value: float = Field(..., gt=0.0, description="Aggregated variance function f(theta)")
    global_winp: float = Field(..., gt=0.0, lt=1.0, description="Planned global WinP")
    endpoint_f: List[float] = Field(default_factory=list, description="Per-endpoint variance function values")

    @model_validator(mode="after")
    def _check_allocation(self):
        if self.n_treated + self.n_control != self.n_total:
            raise ValueError("n_total must equal n_treated + n_control")
        return self


class PlanRow(BaseModel):
    """One evaluated design of a planning sweep."""
    overrides: Dict[str, float] = Field(default_factory=dict, description="Sweep values applied to the base design")
    design: DesignSpec
    status: Literal["success", "error"] = "success"
    message: Optional[str] = None
    result: Optional[DesignResult] = None


class TrialData(BaseModel):
    """Two-arm subject-level outcomes: rows are subjects, columns are endpoints."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    treated: np.ndarray = Field(..., description="m x K treated outcomes (higher is better)")
    control: np.ndarray = Field(..., description="n x K control outcomes (higher is better)")
    endpoint_names: Optional[List[str]] = None

    @field_validator("treated", "control", mode="before")
    @classmethod
    def _as_matrix(cls, value):
        matrix = np.asarray(value, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix.reshape(-1, 1)
        if matrix.ndim != 2:
            raise ValueError("outcomes must be a 2-D subjects x endpoints matrix")
        if matrix.shape[0] < 2:
            raise ValueError(f"each arm needs at least 2 subjects, got {matrix.shape[0]}")
        if matrix.shape[1] < 1:
            raise ValueError("at least one endpoint is required")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("outcomes must be finite (missing data is not supported)")
        return matrix

    @model_validator(mode="after")
    def _check_endpoints(self):
        if self.treated.shape[1] != self.control.shape[1]:
            raise ValueError(
                f"arms disagree on endpoint count: {self.treated.shape[1]} vs {self.control.shape[1]}"
            )
        if self.endpoint_names is not None and len(self.endpoint_names) != self.k:
            raise ValueError("endpoint_names length must match the endpoint count")
        return self

    @property
    def k(self) -> int:
        return int(self.treated.shape[1])

    @property
    def m(self) -> int:
        return int(self.treated.shape[0])

    @property
    def n(self) -> int:
        return int(self.control.shape[0])

    def names(self) -> List[str]:
        return self.endpoint_names or [f"endpoint_{i + 1}" for i in range(self.k)]


class WinPAnalysis(BaseModel):
    """Endpoint and global WinP estimates with DeLong covariance and logit CI."""
    endpoint_names: List[str]
    n_treated: int
    n_control: int
    per_endpoint: List[float] = Field(..., description="Endpoint WinP estimates")
    standard_errors: List[float] = Field(..., description="Endpoint DeLong standard errors")
    endpoint_ci_lower: List[Optional[float]] = Field(..., description="Endpoint logit CI lower limits")
    endpoint_ci_upper: List[Optional[float]] = Field(..., description="Endpoint logit CI upper limits")
    covariance: List[List[float]] = Field(..., description="DeLong variance-covariance matrix")
    correlation: Optional[List[List[float]]] = Field(None, description="Between-WinP correlation matrix")
    global_estimate: float = Field(..., ge=0.0, le=1.0)
    global_variance: float = Field(..., ge=0.0)
    ci_level: float = Field(..., gt=0.0, lt=1.0)
    ci_lower: float = Field(..., ge=0.0, le=1.0)
    ci_upper: float = Field(..., ge=0.0, le=1.0)


class ScenarioConfig(BaseModel):
    """One simulation scenario as written in a config file (before seeding)."""
    model_config = ConfigDict(extra="forbid")

    label: Optional[str] = None
    endpoints: List[EndpointAssumption] = Field(..., min_length=1)
    data_correlation: float = Field(..., gt=-1.0, lt=1.0, description="Exchangeable raw-data correlation")
    lower_bound: float = Field(..., gt=0.0, lt=1.0)
    assurance: float = Field(config.DEFAULT_ASSURANCE, gt=0.0, lt=1.0)
    ci_level: float = Field(config.DEFAULT_CI_LEVEL, gt=0.0, lt=1.0)
    alloc_ratio: float = Field(config.DEFAULT_ALLOC_RATIO, gt=0.0)


class Scenario(BaseModel):
    """A fully resolved simulation scenario."""
    label: Optional[str] = None
    design: DesignSpec
    data_correlation: float = Field(..., gt=-1.0, lt=1.0)
    replicates: int = Field(..., gt=0)
    seed: int = Field(..., ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_positive_definite(self):
        k = self.design.k
        if k > 1 and self.data_correlation <= -1.0 / (k - 1):
            raise ValueError(
                f"exchangeable correlation {self.data_correlation} is not positive definite for "
                f"{k} endpoints (must exceed {-1.0 / (k - 1):.6g})"
            )
        return self


class ScenarioResult(BaseModel):
    """Empirical coverage and assurance for one scenario (or an error row)."""
    label: Optional[str] = None
    status: Literal["success", "error"] = "success"
    message: Optional[str] = None
    seed: Optional[int] = None
    n_total_used: Optional[int] = None
    n_treated: Optional[int] = None
    n_control: Optional[int] = None
    replicates: Optional[int] = None
    replicates_used: Optional[int] = None
    degenerate_count: Optional[int] = None
    true_global_winp: Optional[float] = None
    empirical_coverage: Optional[float] = Field(None, ge=0.0, le=100.0)
    empirical_assurance: Optional[float] = Field(None, ge=0.0, le=100.0)
    coverage_mcse: Optional[float] = None
    assurance_mcse: Optional[float] = None
    mean_ci_lower: Optional[float] = None
    mean_global_estimate: Optional[float] = None


class PlanConfig(DesignSpec):
    """Plan command configuration: a DesignSpec plus sweep and output options."""
    sweep: Dict[SweepField, List[float]] = Field(default_factory=dict, description="Cartesian sweep axes")
    format: OutputFormat = "table"
    out: Optional[str] = None

    def design(self) -> DesignSpec:
        return DesignSpec.model_validate(self.model_dump(include=set(DesignSpec.model_fields)))


class SimConfig(BaseModel):
    """Simulate command configuration: scenario grid, seed and replicate count."""
    model_config = ConfigDict(extra="forbid")

    scenarios: List[ScenarioConfig] = Field(..., min_length=1)
    sweep: Dict[SweepField, List[float]] = Field(default_factory=dict)
    replicates: int = Field(config.DEFAULT_REPLICATES, gt=0)
    master_seed: int = Field(config.DEFAULT_SEED, ge=0, lt=2**64)
    threads: int = Field(config.DEFAULT_THREADS, gt=0)
    format: OutputFormat = "table"
    out: Optional[str] = None


class EstimateInput(BaseModel):
    """Estimate command input: a delimited data file and CI level."""
    model_config = ConfigDict(extra="forbid")

    data: str
    arm_column: str = config.DEFAULT_ARM_COLUMN
    level: float = Field(config.DEFAULT_CI_LEVEL, gt=0.0, lt=1.0)
    delimiter: Optional[str] = None
    format: OutputFormat = "table"
    out: Optional[str] = None

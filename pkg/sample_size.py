"""Closed-form sample size planning for the global win probability with assurance."""
import itertools
import logging
import math
from typing import Dict, List, Mapping, Sequence

import numpy as np

from exceptions import DomainError, InfeasibleDesignError
from schemas import (
    CorrelationInput,
    DesignResult,
    DesignSpec,
    EndpointAssumption,
    PlanRow,
    as_correlation_matrix,
)
from special_functions import logit, normal_cdf, normal_pdf, normal_quantile

logger = logging.getLogger(__name__)

# Reciprocal of the asymptotic relative efficiency of the nonparametric analysis
NONPARAMETRIC_INFLATION = math.pi / 3.0


def f_endpoint(assumption: EndpointAssumption, alloc_ratio: float) -> float:
    """
    Variance function of one endpoint WinP estimate under normal outcomes.

    Args:
        assumption: Planned WinP and control/treated SD ratio B
        alloc_ratio: Control/treated allocation ratio r

    Returns:
        Positive variance function value f^(k)
    """
    if not alloc_ratio > 0:
        raise DomainError(f"alloc_ratio must be positive, got {alloc_ratio}")
    r = alloc_ratio
    b2 = assumption.sd_ratio ** 2
    z = normal_quantile(assumption.winp)

    bracket = (
        z * z / (1.0 + b2) ** 2 * (r + 1.0 + (r + 1.0) * b2 * b2 / r)
        + 2.0 * (r + 1.0) / (1.0 + b2)
        + 2.0 * (r + 1.0) * b2 / (r * (1.0 + b2))
    )
    return 0.5 * normal_pdf(z) ** 2 * bracket


def endpoint_f_values(spec: DesignSpec) -> np.ndarray:
    return np.array([f_endpoint(e, spec.alloc_ratio) for e in spec.endpoints])


def f_global(spec: DesignSpec) -> float:
    """
    Aggregate endpoint variance functions into f(theta) = s' R s / K^2,
    where s holds the square roots of the endpoint values and R is the
    between-WinP correlation matrix.
    """
    s = np.sqrt(endpoint_f_values(spec))
    return float(s @ spec.correlation_matrix() @ s) / spec.k ** 2


def required_sample_size(spec: DesignSpec) -> DesignResult:
    """
    Total and per-arm sample sizes so that the lower confidence limit of the
    global WinP reaches the lower bound with the requested assurance.

    Arm sizes are ceil(n / (r + 1)) treated and ceil(r n / (r + 1)) control,
    applied to the continuous n; the total is their sum.

    Args:
        spec: Design inputs

    Returns:
        DesignResult with continuous and integer sizes

    Raises:
        InfeasibleDesignError: If the planned global WinP does not exceed the bound
    """
    theta = spec.global_winp
    theta0 = spec.lower_bound
    if theta <= theta0:
        raise InfeasibleDesignError(theta, theta0)

    f_value = f_global(spec)

    z_beta = normal_quantile(spec.assurance)
    z_alpha = normal_quantile(1.0 - (1.0 - spec.ci_level) / 2.0)
    effect = logit(theta) - logit(theta0)
    raw_n = ((z_beta + z_alpha) / effect) ** 2 * f_value / (theta * (1.0 - theta)) ** 2 * NONPARAMETRIC_INFLATION

    r = spec.alloc_ratio
    n_treated = math.ceil(raw_n / (r + 1.0))
    n_control = math.ceil(r * raw_n / (r + 1.0))
    logger.debug("Design theta=%.6f theta0=%.6f f=%.6g -> raw n %.4f", theta, theta0, f_value, raw_n)

    return DesignResult(
        raw_n=raw_n,
        n_treated=n_treated,
        n_control=n_control,
        n_total=n_treated + n_control,
        f_value=f_value,
        global_winp=theta,
        endpoint_f=endpoint_f_values(spec).tolist(),
    )


def _check_sds(sd_treated: float, sd_control: float) -> None:
    if not (sd_treated > 0 and sd_control > 0 and math.isfinite(sd_treated) and math.isfinite(sd_control)):
        raise DomainError(f"standard deviations must be positive and finite, got {sd_treated}, {sd_control}")


def winp_from_normal_means(mean_diff: float, sd_treated: float, sd_control: float) -> float:
    """
    WinP implied by normal outcomes: Phi(mean_diff / sqrt(sd_treated^2 + sd_control^2)).

    Args:
        mean_diff: Treated mean minus control mean
        sd_treated: Treated-arm standard deviation
        sd_control: Control-arm standard deviation

    Returns:
        Win probability
    """
    _check_sds(sd_treated, sd_control)
    return normal_cdf(mean_diff / math.hypot(sd_treated, sd_control))


def mean_diff_from_winp(winp: float, sd_treated: float, sd_control: float) -> float:
    """Treated-minus-control mean difference that yields the given WinP under normality."""
    _check_sds(sd_treated, sd_control)
    return normal_quantile(winp) * math.hypot(sd_treated, sd_control)


def resolve_correlation(rho: CorrelationInput, k: int) -> np.ndarray:
    """Broadcast an exchangeable rho (or validate a full matrix) to K x K."""
    try:
        return as_correlation_matrix(rho, k)
    except ValueError as e:
        raise DomainError(str(e)) from e


def expand_sweep(axes: Mapping[str, Sequence[float]]) -> List[Dict[str, float]]:
    """
    Cartesian product of sweep axes, first axis varying slowest.

    Args:
        axes: Field name to list of values, in the order to iterate

    Returns:
        List of override dictionaries (a single empty one for no axes)
    """
    names = list(axes)
    return [dict(zip(names, values)) for values in itertools.product(*(axes[name] for name in names))]


def apply_overrides(spec: DesignSpec, overrides: Mapping[str, float]) -> DesignSpec:
    """Return a validated copy of a design with sweep values applied."""
    data = spec.model_dump(include=set(DesignSpec.model_fields))
    for field, value in overrides.items():
        if field == "sd_ratio":
            for endpoint in data["endpoints"]:
                endpoint["sd_ratio"] = value
        elif field in ("correlation", "data_correlation"):
            data["correlation"] = value
        else:
            data[field] = value
    return DesignSpec.model_validate(data)


def sweep_designs(base: DesignSpec, axes: Mapping[str, Sequence[float]]) -> List[PlanRow]:
    """
    Evaluate required_sample_size over a grid of designs.

    Infeasible designs become error rows; the sweep continues.

    Args:
        base: Design the sweep values are applied to
        axes: Sweep axes (see expand_sweep)

    Returns:
        One PlanRow per grid point, in grid order
    """
    rows = []
    for overrides in expand_sweep(axes):
        design = apply_overrides(base, overrides)
        try:
            rows.append(PlanRow(overrides=overrides, design=design, result=required_sample_size(design)))
        except InfeasibleDesignError as e:
            logger.warning("Sweep point %s: %s", overrides, e)
            rows.append(PlanRow(overrides=overrides, design=design, status="error", message=str(e)))
    return rows

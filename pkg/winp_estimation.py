"""Endpoint and global win probability estimation with DeLong covariances."""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from exceptions import DegenerateEstimateError, DegenerateVarianceError, DomainError
from schemas import TrialData, WinPAnalysis
from special_functions import expit, logit, normal_quantile

logger = logging.getLogger(__name__)

# extreme limits of the open unit interval in double precision
_OPEN_LOW = float(np.nextafter(0.0, 1.0))
_OPEN_HIGH = float(np.nextafter(1.0, 0.0))


def _as_column(values: Sequence[float], arm: str) -> np.ndarray:
    column = np.asarray(values, dtype=float).ravel()
    if column.size == 0:
        raise DomainError(f"{arm} arm is empty")
    if not np.all(np.isfinite(column)):
        raise DomainError(f"{arm} arm contains non-finite outcomes")
    return column


def _score_matrix(treated: np.ndarray, control: np.ndarray) -> np.ndarray:
    """Pairwise win scores: 1 for a treated win, 0.5 for a tie, 0 otherwise (m x n)."""
    t = treated[:, None]
    c = control[None, :]
    return np.where(t > c, 1.0, np.where(t == c, 0.5, 0.0))


def winp_point(treated_col: Sequence[float], control_col: Sequence[float]) -> float:
    """
    Win probability of one endpoint: share of treated/control pairs won by the
    treated subject, ties scored one half.

    Args:
        treated_col: Treated-arm outcomes for the endpoint
        control_col: Control-arm outcomes for the endpoint

    Returns:
        WinP estimate in [0, 1]
    """
    treated = _as_column(treated_col, "treated")
    control = _as_column(control_col, "control")
    return float(_score_matrix(treated, control).sum() / (treated.size * control.size))


def delong_analysis(data: TrialData) -> Tuple[np.ndarray, np.ndarray]:
    """
    Endpoint WinP estimates and their DeLong variance-covariance matrix.

    For each endpoint the treated-side structural component of subject i is the
    mean win score of i against all control subjects; the control-side
    component of subject j is the mean score of all treated subjects against j.
    The covariance is S10 / m + S01 / n with S the sample covariance matrices
    (divisors m - 1 and n - 1) of the components across endpoints.

    Args:
        data: Two-arm trial data with at least two subjects per arm

    Returns:
        Tuple of (per-endpoint estimates of length K, K x K covariance matrix)
    """
    m, n, k = data.m, data.n, data.k
    if m < 2 or n < 2:
        raise DomainError(f"DeLong variance needs at least 2 subjects per arm (got m={m}, n={n})")

    estimates = np.empty(k)
    v10 = np.empty((m, k))
    v01 = np.empty((n, k))
    for j in range(k):
        scores = _score_matrix(data.treated[:, j], data.control[:, j])
        estimates[j] = scores.sum() / (m * n)
        v10[:, j] = scores.mean(axis=1)
        v01[:, j] = scores.mean(axis=0)

    s10 = np.atleast_2d(np.cov(v10, rowvar=False, ddof=1))
    s01 = np.atleast_2d(np.cov(v01, rowvar=False, ddof=1))
    covariance = s10 / m + s01 / n
    covariance = 0.5 * (covariance + covariance.T)
    return estimates, covariance


def global_winp(per_endpoint: Sequence[float], covariance: np.ndarray) -> Tuple[float, float]:
    """
    Global WinP (mean of endpoint WinPs) and its variance.

    Args:
        per_endpoint: Endpoint WinP estimates
        covariance: K x K covariance of the endpoint estimates

    Returns:
        Tuple of (global estimate, global variance = sum of all entries / K^2)
    """
    estimates = np.asarray(per_endpoint, dtype=float)
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    k = estimates.size
    if cov.shape != (k, k):
        raise DomainError(f"covariance must be {k}x{k}, got {cov.shape}")
    return float(estimates.mean()), float(cov.sum() / k**2)


def logit_ci(global_estimate: float, global_variance: float, level: float) -> Tuple[float, float]:
    """
    Two-sided confidence interval for a win probability on the logit scale.

    Args:
        global_estimate: Point estimate strictly inside (0, 1)
        global_variance: Estimated variance of the point estimate
        level: Confidence level, e.g. 0.95

    Returns:
        Tuple of (lower, upper) limits, held strictly inside (0, 1) when
        expit would round an extreme limit to 0 or 1

    Raises:
        DegenerateEstimateError: If the estimate is exactly 0 or 1
    """
    if global_estimate in (0.0, 1.0):
        raise DegenerateEstimateError(global_estimate)
    if not 0.0 < global_estimate < 1.0:
        raise DomainError(f"estimate must lie in (0, 1), got {global_estimate}")
    if not (global_variance >= 0.0 and math.isfinite(global_variance)):
        raise DomainError(f"variance must be finite and non-negative, got {global_variance}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")

    if global_variance == 0.0:
        return global_estimate, global_estimate

    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    centre = logit(global_estimate)
    half_width = z * math.sqrt(global_variance) / (global_estimate * (1.0 - global_estimate))
    lower = max(expit(centre - half_width), _OPEN_LOW)
    upper = min(expit(centre + half_width), _OPEN_HIGH)
    return lower, upper


def winp_correlations(covariance: np.ndarray) -> np.ndarray:
    """
    Convert a WinP covariance matrix to the between-WinP correlation matrix.

    Raises:
        DegenerateVarianceError: If a diagonal entry is not strictly positive
    """
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    variances = np.diag(cov)
    if np.any(variances <= 0.0):
        raise DegenerateVarianceError(
            f"correlation undefined: zero variance for endpoint(s) {list(np.flatnonzero(variances <= 0.0) + 1)}"
        )
    scale = np.sqrt(variances)
    corr = np.clip(cov / np.outer(scale, scale), -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def brute_force_winp(treated_col: Sequence[float], control_col: Sequence[float]) -> float:
    """Pair-by-pair enumeration of the win probability (reference implementation)."""
    treated = _as_column(treated_col, "treated")
    control = _as_column(control_col, "control")
    total = 0.0
    for x in treated:
        for y in control:
            if x > y:
                total += 1.0
            elif x == y:
                total += 0.5
    return total / (treated.size * control.size)


def brute_force_covariance(data: TrialData) -> np.ndarray:
    """Structural-component covariance computed entry by entry from its definition."""
    m, n, k = data.m, data.n, data.k
    v10 = [[brute_force_winp([data.treated[i, j]], data.control[:, j]) for j in range(k)] for i in range(m)]
    v01 = [[brute_force_winp(data.treated[:, j], [data.control[i, j]]) for j in range(k)] for i in range(n)]

    def sample_cov(rows: List[List[float]], a: int, b: int) -> float:
        size = len(rows)
        mean_a = sum(r[a] for r in rows) / size
        mean_b = sum(r[b] for r in rows) / size
        return sum((r[a] - mean_a) * (r[b] - mean_b) for r in rows) / (size - 1)

    return np.array(
        [[sample_cov(v10, a, b) / m + sample_cov(v01, a, b) / n for b in range(k)] for a in range(k)]
    )


def _endpoint_ci(estimate: float, variance: float, level: float) -> Tuple[Optional[float], Optional[float]]:
    try:
        return logit_ci(estimate, variance, level)
    except DegenerateEstimateError:
        return None, None


def analyze_trial(data: TrialData, level: float) -> WinPAnalysis:
    """
    Full estimation pipeline: DeLong estimates, global WinP and logit CIs.

    Args:
        data: Two-arm trial data
        level: Confidence level for all intervals

    Returns:
        WinPAnalysis with endpoint and global results
    """
    estimates, covariance = delong_analysis(data)
    estimate, variance = global_winp(estimates, covariance)
    lower, upper = logit_ci(estimate, variance, level)

    variances = np.diag(covariance)
    endpoint_cis = [_endpoint_ci(float(e), float(v), level) for e, v in zip(estimates, variances)]

    try:
        correlation = winp_correlations(covariance).tolist()
    except DegenerateVarianceError as e:
        logger.warning("Skipping between-WinP correlations: %s", e)
        correlation = None

    logger.debug("Analyzed %d endpoints (m=%d, n=%d): global WinP %.6f", data.k, data.m, data.n, estimate)
    return WinPAnalysis(
        endpoint_names=data.names(),
        n_treated=data.m,
        n_control=data.n,
        per_endpoint=estimates.tolist(),
        standard_errors=np.sqrt(np.maximum(variances, 0.0)).tolist(),
        endpoint_ci_lower=[ci[0] for ci in endpoint_cis],
        endpoint_ci_upper=[ci[1] for ci in endpoint_cis],
        covariance=covariance.tolist(),
        correlation=correlation,
        global_estimate=estimate,
        global_variance=variance,
        ci_level=level,
        ci_lower=lower,
        ci_upper=upper,
    )

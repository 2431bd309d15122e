"""Monte Carlo validation of the planning formula: empirical coverage and assurance."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from tqdm import tqdm

import config
from exceptions import DegenerateEstimateError, DomainError, WinPlanError
from sample_size import apply_overrides, expand_sweep, mean_diff_from_winp, required_sample_size
from schemas import DesignSpec, EndpointAssumption, Scenario, ScenarioResult, SimConfig, TrialData
from special_functions import normal_quantile
from winp_estimation import delong_analysis, global_winp, logit_ci

logger = logging.getLogger(__name__)

_UNIFORM_BITS = 52


class ReplicateOutcome(NamedTuple):
    """Per-replicate record reduced into a ScenarioResult."""
    degenerate: bool
    covered: bool = False
    assured: bool = False
    ci_lower: float = math.nan
    estimate: float = math.nan


def exchangeable_correlation(k: int, rho: float) -> np.ndarray:
    """K x K matrix with unit diagonal and rho everywhere else."""
    matrix = np.full((k, k), float(rho))
    np.fill_diagonal(matrix, 1.0)
    return matrix


def cholesky_factor(matrix: np.ndarray) -> np.ndarray:
    """
    Lower-triangular L with L L' = matrix.

    Raises:
        DomainError: If the matrix is not positive definite
    """
    try:
        return np.linalg.cholesky(np.asarray(matrix, dtype=float))
    except np.linalg.LinAlgError as e:
        raise DomainError(f"correlation matrix is not positive definite: {e}") from e


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 64-bit seed derived from a master seed and integer keys."""
    sequence = np.random.SeedSequence([int(master_seed), *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def replicate_rng(scenario_seed: int, replicate_index: int) -> np.random.Generator:
    """Independent counter-based stream for one replicate of a scenario."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(scenario_seed), int(replicate_index)])))


def standard_normals(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Standard normal deviates by inverse-CDF transform of open-interval uniforms."""
    ticks = rng.integers(0, 1 << _UNIFORM_BITS, size=shape, dtype=np.int64)
    uniforms = (ticks + 0.5) / float(1 << _UNIFORM_BITS)
    return normal_quantile(uniforms)


def endpoint_parameters(endpoints: Sequence[EndpointAssumption]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Treated-arm means and SDs for a N(0, 1) control arm.

    Endpoint k gets SD 1 / B_k and the mean shift that gives WinP theta_k.

    Returns:
        Tuple of (means, sds) arrays of length K
    """
    sds = np.array([1.0 / e.sd_ratio for e in endpoints])
    means = np.array([mean_diff_from_winp(e.winp, sd, 1.0) for e, sd in zip(endpoints, sds)])
    return means, sds


def generate_trial(
    n_treated: int,
    n_control: int,
    means: np.ndarray,
    sds: np.ndarray,
    data_correlation: float,
    rng: np.random.Generator,
    factor: Optional[np.ndarray] = None,
) -> TrialData:
    """
    Simulate correlated multi-endpoint normal outcomes for both arms.

    The exchangeable correlation is imposed on the standardized scale in both
    arms; treated columns are then scaled by their SDs and shifted by their means.

    Args:
        n_treated: Treated arm size
        n_control: Control arm size
        means: Treated-arm means (control means are 0)
        sds: Treated-arm SDs (control SDs are 1)
        data_correlation: Exchangeable between-endpoint correlation
        rng: Random generator for this trial
        factor: Precomputed Cholesky factor of the correlation matrix

    Returns:
        TrialData with n_treated and n_control rows
    """
    k = len(means)
    if factor is None:
        factor = cholesky_factor(exchangeable_correlation(k, data_correlation))

    control = standard_normals(rng, (n_control, k)) @ factor.T
    treated = means + sds * (standard_normals(rng, (n_treated, k)) @ factor.T)
    return TrialData(treated=treated, control=control)


def _run_replicate(
    scenario: Scenario,
    index: int,
    sizes: Tuple[int, int],
    params: Tuple[np.ndarray, np.ndarray],
    factor: np.ndarray,
) -> ReplicateOutcome:
    rng = replicate_rng(scenario.seed, index)
    data = generate_trial(sizes[0], sizes[1], params[0], params[1], scenario.data_correlation, rng, factor)
    estimates, covariance = delong_analysis(data)
    estimate, variance = global_winp(estimates, covariance)
    try:
        lower, upper = logit_ci(estimate, variance, scenario.design.ci_level)
    except DegenerateEstimateError:
        return ReplicateOutcome(degenerate=True)

    theta = scenario.design.global_winp
    return ReplicateOutcome(
        degenerate=False,
        covered=lower <= theta <= upper,
        assured=lower >= scenario.design.lower_bound,
        ci_lower=lower,
        estimate=estimate,
    )


def _percent_with_mcse(hits: int, total: int) -> Tuple[float, float]:
    share = hits / total
    return 100.0 * share, 100.0 * math.sqrt(share * (1.0 - share) / total)


def run_scenario(scenario: Scenario, threads: int = 1, show_progress: bool = False) -> ScenarioResult:
    """
    Plan the sample size for a scenario and estimate its empirical coverage and assurance.

    The raw-data correlation stands in for the between-WinP correlation when
    planning. Replicates may run on several threads; each draws from its own
    stream and results are reduced in replicate order, so the outcome does
    not depend on the thread count.

    Args:
        scenario: Fully resolved scenario
        threads: Worker threads for replicates
        show_progress: Show a progress bar on stderr

    Returns:
        ScenarioResult with percentages in [0, 100]
    """
    design = apply_overrides(scenario.design, {"correlation": scenario.data_correlation})
    planned = required_sample_size(design)
    sizes = (planned.n_treated, planned.n_control)
    params = endpoint_parameters(design.endpoints)
    factor = cholesky_factor(exchangeable_correlation(design.k, scenario.data_correlation))
    logger.info("Scenario %s: n=%d (%d treated, %d control), %d replicates",
                scenario.label, planned.n_total, sizes[0], sizes[1], scenario.replicates)

    def replicate(index: int) -> ReplicateOutcome:
        return _run_replicate(scenario, index, sizes, params, factor)

    indices = range(scenario.replicates)
    bar_options = dict(total=scenario.replicates, desc=scenario.label or "scenario", leave=False,
                       disable=not show_progress, colour="green" if config.USE_COLOR else None)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            outcomes = list(tqdm(executor.map(replicate, indices), **bar_options))
    else:
        outcomes = list(tqdm(map(replicate, indices), **bar_options))

    valid = [o for o in outcomes if not o.degenerate]
    degenerate = len(outcomes) - len(valid)
    if degenerate:
        logger.warning("Scenario %s: %d degenerate replicate(s) excluded", scenario.label, degenerate)

    metrics = {}
    if valid:
        coverage, coverage_mcse = _percent_with_mcse(sum(o.covered for o in valid), len(valid))
        assurance, assurance_mcse = _percent_with_mcse(sum(o.assured for o in valid), len(valid))
        metrics = dict(
            empirical_coverage=coverage,
            coverage_mcse=coverage_mcse,
            empirical_assurance=assurance,
            assurance_mcse=assurance_mcse,
            mean_ci_lower=float(np.mean([o.ci_lower for o in valid])),
            mean_global_estimate=float(np.mean([o.estimate for o in valid])),
        )

    return ScenarioResult(
        label=scenario.label,
        seed=scenario.seed,
        n_total_used=planned.n_total,
        n_treated=planned.n_treated,
        n_control=planned.n_control,
        replicates=scenario.replicates,
        replicates_used=len(valid),
        degenerate_count=degenerate,
        true_global_winp=design.global_winp,
        **metrics,
    )


def _error_result(label: Optional[str], error: Exception, seed: Optional[int] = None) -> ScenarioResult:
    return ScenarioResult(label=label, status="error", message=str(error), seed=seed)


def _run_guarded(scenario: Scenario, threads: int, show_progress: bool) -> ScenarioResult:
    try:
        return run_scenario(scenario, threads=threads, show_progress=show_progress)
    except (WinPlanError, ValueError) as e:
        logger.warning("Scenario %s failed: %s", scenario.label, e)
        return _error_result(scenario.label, e, scenario.seed)


def run_grid(scenarios: Sequence[Scenario], threads: int = 1, show_progress: bool = False) -> List[ScenarioResult]:
    """
    Run scenarios and return their results in input order.

    A failing scenario yields an error row and the grid continues. With more
    than one scenario the threads are spread over scenarios; a single scenario
    spreads them over its replicates.

    Args:
        scenarios: Scenarios carrying their own seeds
        threads: Worker threads
        show_progress: Show progress bars on stderr

    Returns:
        One ScenarioResult per scenario
    """
    if not scenarios:
        return []
    if len(scenarios) == 1:
        return [_run_guarded(scenarios[0], threads, show_progress)]

    def run(scenario: Scenario) -> ScenarioResult:
        return _run_guarded(scenario, 1, show_progress and threads == 1)

    bar_options = dict(total=len(scenarios), desc="scenarios", disable=not show_progress,
                       colour="green" if config.USE_COLOR else None)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(tqdm(executor.map(run, scenarios), **bar_options))
    return list(tqdm(map(run, scenarios), **bar_options))


def _label(base: Optional[str], index: int, overrides: dict) -> str:
    parts = [base or f"scenario_{index + 1}"]
    parts += [f"{name}={value:g}" for name, value in overrides.items()]
    return " ".join(parts)


def simulate_config(sim: SimConfig, threads: Optional[int] = None, show_progress: bool = False) -> List[ScenarioResult]:
    """
    Expand a SimConfig into seeded scenarios and run them.

    Each configured scenario is crossed with the sweep axes; the scenario at
    position i of the expanded list is seeded with derive_seed(master_seed, i).
    Scenarios that fail validation become error rows in place.

    Args:
        sim: Simulation configuration
        threads: Overrides sim.threads when given
        show_progress: Show progress bars on stderr

    Returns:
        One ScenarioResult per expanded scenario, in expansion order
    """
    entries: List[Tuple[int, Optional[Scenario], Optional[ScenarioResult]]] = []
    index = 0
    for base_index, entry in enumerate(sim.scenarios):
        design_fields = entry.model_dump(exclude={"label", "data_correlation"})
        for overrides in expand_sweep(sim.sweep):
            label = _label(entry.label, base_index, overrides)
            seed = derive_seed(sim.master_seed, index)
            data_correlation = overrides.get("data_correlation", overrides.get("correlation", entry.data_correlation))
            try:
                base = apply_overrides(
                    DesignSpec.model_validate({**design_fields, "correlation": data_correlation}),
                    {k: v for k, v in overrides.items() if k not in ("correlation", "data_correlation")},
                )
                scenario = Scenario(label=label, design=base, data_correlation=data_correlation,
                                    replicates=sim.replicates, seed=seed)
                entries.append((index, scenario, None))
            except (ValidationError, WinPlanError, ValueError) as e:
                logger.warning("Scenario %s rejected: %s", label, e)
                entries.append((index, None, _error_result(label, e, seed)))
            index += 1

    runnable = [scenario for _, scenario, _ in entries if scenario is not None]
    results = iter(run_grid(runnable, threads=threads or sim.threads, show_progress=show_progress))
    return [error if scenario is None else next(results) for _, scenario, error in entries]


"""Human-readable tables and line-delimited JSON records for CLI reports.

Both renderings are produced from the same in-memory result objects.
"""
import json
from typing import Any, Dict, List, Sequence

import pandas as pd

import config
from schemas import PlanRow, ScenarioResult, WinPAnalysis


def _prob(value) -> str:
    return "" if value is None else f"{value:.{config.PROB_DECIMALS}f}"


def _pct(value) -> str:
    return "" if value is None else f"{value:.{config.PCT_DECIMALS}f}"


def _config_line(echo: Dict[str, Any]) -> str:
    return "# config: " + json.dumps(echo, sort_keys=True)


def to_records(kind: str, echo: Dict[str, Any], rows: Sequence[Dict[str, Any]]) -> str:
    """
    Line-delimited JSON: a config record followed by one record per row.

    Args:
        kind: Record type tag for the rows
        echo: Fully resolved configuration
        rows: Row dictionaries (JSON-serializable)

    Returns:
        Newline-terminated text
    """
    lines = [json.dumps({"record": "config", **echo}, sort_keys=True)]
    lines += [json.dumps({"record": kind, **row}, sort_keys=True) for row in rows]
    return "\n".join(lines) + "\n"


def plan_rows(rows: Sequence[PlanRow]) -> List[Dict[str, Any]]:
    return [row.model_dump(mode="json") for row in rows]


def plan_table(rows: Sequence[PlanRow], echo: Dict[str, Any]) -> str:
    """Aligned text table of planned sample sizes, one line per design."""
    records = []
    for row in rows:
        design = row.design
        record: Dict[str, Any] = {name: f"{value:g}" for name, value in row.overrides.items()}
        record.update({
            "theta": _prob(design.global_winp),
            "theta0": _prob(design.lower_bound),
            "assurance": _prob(design.assurance),
            "r": f"{design.alloc_ratio:g}",
        })
        if row.result is not None:
            record.update({
                "f": f"{row.result.f_value:.6f}",
                "raw_n": f"{row.result.raw_n:.2f}",
                "n_treated": row.result.n_treated,
                "n_control": row.result.n_control,
                "n_total": row.result.n_total,
            })
        else:
            record["status"] = row.message
        records.append(record)

    table = pd.DataFrame(records).fillna("")
    return _config_line(echo) + "\n" + table.to_string(index=False) + "\n"


def simulation_rows(results: Sequence[ScenarioResult]) -> List[Dict[str, Any]]:
    return [result.model_dump(mode="json") for result in results]


def simulation_table(results: Sequence[ScenarioResult], echo: Dict[str, Any]) -> str:
    """Aligned text table with n, ECP, EAP and degenerate count per scenario."""
    records = []
    for result in results:
        if result.status == "error":
            records.append({"scenario": result.label, "status": f"error: {result.message}"})
            continue
        records.append({
            "scenario": result.label,
            "n": result.n_total_used,
            "ECP": _pct(result.empirical_coverage),
            "EAP": _pct(result.empirical_assurance),
            "mcse(EAP)": _pct(result.assurance_mcse),
            "mean_lower": _prob(result.mean_ci_lower),
            "degenerate": result.degenerate_count,
        })
    table = pd.DataFrame(records).fillna("")
    return _config_line(echo) + "\n" + table.to_string(index=False) + "\n"


def analysis_record(analysis: WinPAnalysis) -> Dict[str, Any]:
    return analysis.model_dump(mode="json")


def analysis_table(analysis: WinPAnalysis, echo: Dict[str, Any]) -> str:
    """Endpoint estimates, covariance, correlations and the global WinP with its CI."""
    names = analysis.endpoint_names
    level = f"{analysis.ci_level:.0%}"
    endpoints = pd.DataFrame({
        "endpoint": names,
        "WinP": [_prob(v) for v in analysis.per_endpoint],
        "SE": [_prob(v) for v in analysis.standard_errors],
        f"{level} lower": [_prob(v) for v in analysis.endpoint_ci_lower],
        f"{level} upper": [_prob(v) for v in analysis.endpoint_ci_upper],
    })
    covariance = pd.DataFrame(analysis.covariance, index=names, columns=names)

    parts = [
        _config_line(echo),
        f"Subjects: {analysis.n_treated} treated, {analysis.n_control} control",
        "",
        endpoints.to_string(index=False),
        "",
        "Covariance:",
        covariance.to_string(float_format=lambda v: f"{v:.6g}"),
    ]
    if analysis.correlation is not None:
        correlation = pd.DataFrame(analysis.correlation, index=names, columns=names)
        parts += ["", "Between-WinP correlation:", correlation.to_string(float_format=_prob)]
    parts += [
        "",
        f"Global WinP: {_prob(analysis.global_estimate)} "
        f"({level} CI {_prob(analysis.ci_lower)} to {_prob(analysis.ci_upper)}), "
        f"variance {analysis.global_variance:.6g}",
    ]
    return "\n".join(parts) + "\n"

"""Report assembly and schema validation.

Every analysis run produces one JSON document validated against the
versioned schema shipped with the package. Arrays for the CDF and the ramp
histogram are included so plots can be reproduced outside the tool.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from typing import Optional, Sequence

import jsonschema
import numpy as np

from .errors import ValidationError
from .facility import facility_block, joules_to_kwh, total_energy
from .metrics import (
    DEFAULT_HISTOGRAM_BINS,
    IdleDefinition,
    empirical_cdf,
    exceedance_fraction,
    peak_average_ratio,
    peak_idle_ratio,
    ramp_decline_stats,
)
from .trace import PowerTrace, summary_stats
from .ups import UpsResult

SCHEMA_VERSION = 1


def _load_schema() -> dict:
    ref = importlib.resources.files("aiwatt").joinpath("schema/report_v1.schema.json")
    return json.loads(ref.read_text(encoding="utf-8"))


_SCHEMA = None


def report_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        _SCHEMA = _load_schema()
    return _SCHEMA


def validate_report(report: dict) -> None:
    """Raise ValidationError when the report does not match the schema."""
    try:
        jsonschema.validate(report, report_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"report does not match schema v{SCHEMA_VERSION}: {exc.message}") from exc
    _check_finite(report)


def _check_finite(node, path="report") -> None:
    if isinstance(node, dict):
        for key, value in node.items():
            _check_finite(value, f"{path}.{key}")
    elif isinstance(node, (list, tuple)):
        for i, value in enumerate(node):
            _check_finite(value, f"{path}[{i}]")
    elif isinstance(node, float) and not math.isfinite(node):
        raise ValidationError(f"{path} is not finite")


def build_report(
    trace: PowerTrace,
    scenario: Optional[str] = None,
    source: Optional[str] = None,
    seed: Optional[int] = None,
    idle: Optional[IdleDefinition] = None,
    thresholds_w: Sequence[float] = (),
    cdf_bins: int = DEFAULT_HISTOGRAM_BINS,
    hist_bins: int = DEFAULT_HISTOGRAM_BINS,
    facility=None,
    cooling=None,
    grid_block: Optional[dict] = None,
    ups_block: Optional[dict] = None,
) -> dict:
    """Compute the full metric suite for a trace and return the report dict.

    Ratio entries degrade to null instead of failing when undefined (for
    example a zero idle level under the percentile rule).
    """
    idle = idle or IdleDefinition.percentile()
    stats = summary_stats(trace)
    energy_j = total_energy(trace)

    try:
        pa = peak_average_ratio(trace)
    except ValidationError:
        pa = None
    idle_level = idle.resolve(trace)
    try:
        pi = peak_idle_ratio(trace, idle)
    except ValidationError:
        pi = None

    report = {
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "source": source,
        "seed": seed,
        "summary": {**stats.as_dict(), "samples": len(trace), "dt_s": trace.dt},
        "energy": {"joules": energy_j, "kwh": joules_to_kwh(energy_j)},
        "ratios": {
            "peak_average": pa,
            "peak_idle": pi,
            "idle_level_w": idle_level,
            "idle_definition": idle.as_dict(),
        },
        "ramps": ramp_decline_stats(trace, n_bins=hist_bins).as_dict() if len(trace) >= 2 else {
            "max_ramp_w_per_s": 0.0,
            "max_decline_w_per_s": 0.0,
            "histogram": {"bin_edges": [], "counts": []},
        },
        "negative_samples": int(np.count_nonzero(trace.samples < 0.0)),
        "exceedance": [
            {"threshold_w": float(th), "fraction": exceedance_fraction(trace, th)}
            for th in thresholds_w
        ],
        "cdf": [
            {"power_w": p, "cumulative_fraction": f} for p, f in empirical_cdf(trace, cdf_bins)
        ],
    }
    if facility is not None:
        report["facility"] = facility_block(facility, cooling, stats.mean_w)
    if grid_block is not None:
        report["grid"] = grid_block
    if ups_block is not None:
        report["ups"] = ups_block
    validate_report(report)
    return report


def ups_block_from_result(load: PowerTrace, result: UpsResult, config) -> dict:
    """Serialize a UPS smoothing run for the report."""
    grid_stats = summary_stats(result.grid_trace)
    steps = np.diff(result.grid_trace.samples)
    max_ramp = float(np.max(np.abs(steps)) / result.grid_trace.dt) if steps.size else 0.0
    load_e = float(np.sum(load.samples) * load.dt)
    ramp_limit = config.grid_ramp_limit_w_per_s
    return {
        "config": {
            "capacity_j": config.capacity_j,
            "max_charge_w": config.max_charge_w,
            "max_discharge_w": config.max_discharge_w,
            "round_trip_efficiency": config.round_trip_efficiency,
            "grid_ramp_limit_w_per_s": ramp_limit if math.isfinite(ramp_limit) else "inf",
            "initial_soc_fraction": config.initial_soc_fraction,
        },
        "grid_summary": grid_stats.as_dict(),
        "soc": {
            "initial_j": float(result.soc_j[0]),
            "final_j": float(result.soc_j[-1]),
            "min_j": float(result.soc_j.min()),
            "max_j": float(result.soc_j.max()),
        },
        "violations": [{"time_s": v.time_s, "reason": v.reason} for v in result.violations],
        "max_grid_ramp_w_per_s": max_ramp,
        "energy": {
            "grid_j": result.grid_energy_j,
            "load_j": load_e,
            "delivered_j": result.delivered_j,
            "absorbed_j": result.absorbed_j,
            "loss_j": result.loss_j,
            "balance_error_rel": result.energy_balance_error(load),
        },
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)

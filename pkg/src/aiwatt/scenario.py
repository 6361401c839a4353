"""Declarative scenario configs and the trace synthesis driver.

A scenario names a sampling grid, a seed, a phase mix, and one profile per
active phase; optional blocks configure the facility rollup, a UPS buffer,
and a stage-cap schedule. Configs load from TOML or JSON files with the
same key tree (see README for the schema).

Synthesis is deterministic: a scenario plus a seed always produces the
bit-identical trace. Only the inference phase consumes random numbers at
synthesis time, drawn from a fresh PCG64 generator seeded per run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ValidationError
from .facility import CoolingParams, FacilityConfig
from .trace import PowerTrace
from .ups import StageSchedule, UpsConfig, apply_stage_caps
from .workload import (
    AcceleratorSpec,
    FineTuneProfile,
    InferenceProfile,
    PhaseMix,
    QueryMix,
    RateSchedule,
    TrainingProfile,
    finetune_power_array,
    inference_power_trace,
    training_power_array,
)


@dataclass(frozen=True)
class TrainingSetup:
    profile: TrainingProfile
    accelerators: AcceleratorSpec


@dataclass(frozen=True)
class FineTuneSetup:
    profile: FineTuneProfile
    accelerators: AcceleratorSpec


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    dt_s: float
    duration_s: float
    seed: int
    mix: PhaseMix
    training: Optional[TrainingSetup] = None
    finetune: Optional[FineTuneSetup] = None
    inference: Optional[InferenceProfile] = None
    facility: Optional[FacilityConfig] = None
    cooling: Optional[CoolingParams] = None
    ups: Optional[UpsConfig] = None
    stage_caps: Optional[StageSchedule] = None
    network_file: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise ValidationError("scenario needs a name")
        if not (self.dt_s > 0) or not math.isfinite(self.dt_s):
            raise ValidationError(f"dt_s must be > 0, got {self.dt_s}")
        if not (self.duration_s > 0) or not math.isfinite(self.duration_s):
            raise ValidationError(f"duration_s must be > 0, got {self.duration_s}")
        if self.mix.w_train > 0 and self.training is None:
            raise ValidationError("mix assigns weight to training but no training profile is set")
        if self.mix.w_finetune > 0 and self.finetune is None:
            raise ValidationError("mix assigns weight to finetune but no finetune profile is set")
        if self.mix.w_inference > 0 and self.inference is None:
            raise ValidationError("mix assigns weight to inference but no inference profile is set")


def synthesize(config: ScenarioConfig, seed: Optional[int] = None) -> PowerTrace:
    """Evaluate the weighted phase models over the scenario grid.

    The trace covers ``[0, duration_s]`` with ``ceil(duration/dt) + 1``
    samples. ``seed`` overrides the scenario's own seed when given.
    """
    n_steps = int(math.ceil(config.duration_s / config.dt_s - 1e-9))
    n = n_steps + 1
    times = np.arange(n) * config.dt_s
    rng = np.random.default_rng(config.seed if seed is None else seed)

    power = np.zeros(n)
    if config.mix.w_train > 0:
        power += config.mix.w_train * training_power_array(
            times, config.training.profile, config.training.accelerators
        )
    if config.mix.w_finetune > 0:
        power += config.mix.w_finetune * finetune_power_array(
            times, config.finetune.profile, config.finetune.accelerators
        )
    if config.mix.w_inference > 0:
        power += config.mix.w_inference * inference_power_trace(
            config.inference, 0.0, config.dt_s, n, rng
        )
    return PowerTrace(start_time=0.0, dt=config.dt_s, samples=power)


def simulate_scenario(config: ScenarioConfig, seed: Optional[int] = None) -> PowerTrace:
    """Synthesize and then apply the stage-cap schedule, when present."""
    trace = synthesize(config, seed=seed)
    return apply_stage_caps(trace, config.stage_caps)


# ---------------------------------------------------------------------------
# Config-tree parsing

_MODES = ("high", "low", "off")


def _require(data: dict, key: str, context: str):
    if key not in data:
        raise ValidationError(f"{context}: missing required key {key!r}")
    return data[key]


def _accelerators_from(data: dict, context: str) -> AcceleratorSpec:
    spec = _require(data, "accelerators", context)
    return AcceleratorSpec(
        count=int(_require(spec, "count", f"{context}.accelerators")),
        peak_power_w=float(_require(spec, "peak_power_w", f"{context}.accelerators")),
        idle_power_w=float(spec.get("idle_power_w", 0.0)),
    )


def _training_from(data: dict) -> TrainingSetup:
    window = _require(data, "window_s", "training")
    if len(window) != 2:
        raise ValidationError("training.window_s must be [start, end]")
    profile = TrainingProfile(
        base_power_w=float(data.get("base_power_w", 0.0)),
        u_max=float(_require(data, "u_max", "training")),
        t_start_s=float(window[0]),
        t_end_s=float(window[1]),
    )
    return TrainingSetup(profile=profile, accelerators=_accelerators_from(data, "training"))


def _finetune_from(data: dict) -> FineTuneSetup:
    schedule = []
    for entry in _require(data, "schedule", "finetune"):
        if len(entry) != 3 or entry[2] not in _MODES:
            raise ValidationError(
                f"finetune.schedule entries must be [start_s, end_s, mode] with mode in {_MODES}"
            )
        schedule.append((float(entry[0]), float(entry[1]), str(entry[2])))
    profile = FineTuneProfile(
        base_power_w=float(data.get("base_power_w", 0.0)),
        beta=float(_require(data, "beta", "finetune")),
        schedule=tuple(schedule),
        eval_interval_s=float(data.get("eval_interval_s", 0.0)),
        eval_dip_duration_s=float(data.get("eval_dip_duration_s", 0.0)),
    )
    return FineTuneSetup(profile=profile, accelerators=_accelerators_from(data, "finetune"))


def _inference_from(data: dict) -> InferenceProfile:
    if "rate_per_s" in data:
        rate = RateSchedule.constant(float(data["rate_per_s"]))
    elif "rate_schedule" in data:
        rate = RateSchedule(tuple((float(t), float(r)) for t, r in data["rate_schedule"]))
    else:
        raise ValidationError("inference: set either rate_per_s or rate_schedule")
    q = _require(data, "queries", "inference")
    sizes = [(str(n), float(w)) for n, w in _require(q, "size_classes", "inference.queries")]
    cplx = [(str(n), float(w)) for n, w in _require(q, "complexity_classes", "inference.queries")]
    mix = QueryMix(
        size_classes=tuple(n for n, _ in sizes),
        size_weights=tuple(w for _, w in sizes),
        complexity_classes=tuple(n for n, _ in cplx),
        complexity_weights=tuple(w for _, w in cplx),
        power_w=_require(q, "power_w", "inference.queries"),
    )
    return InferenceProfile(
        base_power_w=float(data.get("base_power_w", 0.0)),
        rate=rate,
        query_duration_s=float(_require(data, "query_duration_s", "inference")),
        queries=mix,
    )


def facility_from_dict(data: dict) -> tuple:
    config = FacilityConfig(
        eta_acac=float(data.get("eta_acac", 1.0)),
        eta_acdc=float(data.get("eta_acdc", 1.0)),
        supporting_w={str(k): float(v) for k, v in data.get("supporting_w", {}).items()},
        it_w={str(k): float(v) for k, v in data.get("it_w", {}).items()},
        efficiency_applied=str(data.get("efficiency_applied", "multiply")),
    )
    cooling = CoolingParams(cop=float(data["cop"])) if "cop" in data else None
    return config, cooling


def ups_from_dict(data: dict) -> UpsConfig:
    return UpsConfig(
        capacity_j=float(_require(data, "capacity_j", "ups")),
        max_charge_w=float(_require(data, "max_charge_w", "ups")),
        max_discharge_w=float(_require(data, "max_discharge_w", "ups")),
        round_trip_efficiency=float(data.get("round_trip_efficiency", 1.0)),
        grid_ramp_limit_w_per_s=float(data.get("grid_ramp_limit_w_per_s", math.inf)),
        initial_soc_fraction=float(data.get("initial_soc_fraction", 0.5)),
    )


def stage_caps_from_list(entries) -> StageSchedule:
    intervals = []
    for entry in entries:
        if len(entry) != 4:
            raise ValidationError("stage_caps entries must be [start_s, end_s, stage, cap_w]")
        intervals.append((float(entry[0]), float(entry[1]), str(entry[2]), float(entry[3])))
    return StageSchedule(intervals=tuple(intervals))


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ValidationError("scenario config must be a key/value tree")
    mix_data = data.get("mix", {})
    mix = PhaseMix(
        w_train=float(mix_data.get("train", 0.0)),
        w_finetune=float(mix_data.get("finetune", 0.0)),
        w_inference=float(mix_data.get("inference", 0.0)),
    )
    facility = cooling = None
    if "facility" in data:
        facility, cooling = facility_from_dict(data["facility"])
    return ScenarioConfig(
        name=str(_require(data, "name", "scenario")),
        dt_s=float(_require(data, "dt_s", "scenario")),
        duration_s=float(_require(data, "duration_s", "scenario")),
        seed=int(data.get("seed", 0)),
        mix=mix,
        training=_training_from(data["training"]) if "training" in data else None,
        finetune=_finetune_from(data["finetune"]) if "finetune" in data else None,
        inference=_inference_from(data["inference"]) if "inference" in data else None,
        facility=facility,
        cooling=cooling,
        ups=ups_from_dict(data["ups"]) if "ups" in data else None,
        stage_caps=stage_caps_from_list(data["stage_caps"]) if "stage_caps" in data else None,
        network_file=str(data["network"]) if "network" in data else None,
    )


def load_scenario(path) -> ScenarioConfig:
    """Read a scenario file; TOML by default, JSON for ``.json`` paths."""
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".json":
        data = json.loads(raw.decode("utf-8"))
    else:
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{p}: not valid TOML ({exc})") from exc
    return scenario_from_dict(data)

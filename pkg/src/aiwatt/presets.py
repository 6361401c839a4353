"""Calibrated scenario presets.

Each preset reproduces the headline statistics of a measured workload
(mean/peak/std, transient sizes, burst shapes) with the phase models in
:mod:`aiwatt.workload`. Where a recorded trace alternates between a high
and a low power state, the two levels and the duty cycle are solved in
closed form from the reported mean, peak, and standard deviation:
with z = (peak - mean) / std the high-state share is p = 1 / (1 + z^2) and
the level gap is (peak - mean) / (1 - p).

The batch-size sweep presets model each table row as a constant-power
pulse lasting the measured processing time; rows that ran out of memory
refuse to synthesize and carry an ``oom`` marker instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError
from .scenario import FineTuneSetup, ScenarioConfig, TrainingSetup
from .workload import (
    AcceleratorSpec,
    FineTuneProfile,
    InferenceProfile,
    PhaseMix,
    QueryMix,
    RateSchedule,
    TrainingProfile,
)

DAY_S = 86400.0


@dataclass(frozen=True)
class Preset:
    """A named scenario factory plus the reference statistics it targets."""

    name: str
    description: str
    reference: dict
    default_seed: int
    _build: Optional[Callable[[int], ScenarioConfig]]
    oom: bool = False

    def scenario(self, seed: Optional[int] = None) -> ScenarioConfig:
        if self.oom or self._build is None:
            raise ValidationError(
                f"preset {self.name!r} is an out-of-memory row: it refuses to "
                "synthesize a trace (request the refusal report instead)"
            )
        return self._build(self.default_seed if seed is None else seed)


def _alternating_schedule(
    rng: np.random.Generator,
    t_start: float,
    t_end: float,
    lead_mode: str,
    lead_mean_s: float,
    other_mode: str,
    other_mean_s: float,
    min_dwell_s: float = 1.0,
):
    """Alternating exponential dwells covering [t_start, t_end)."""
    out = []
    t = t_start
    on_lead = True
    while t < t_end:
        mean = lead_mean_s if on_lead else other_mean_s
        dwell = max(float(rng.exponential(mean)), min_dwell_s)
        end = min(t + dwell, t_end)
        out.append((t, end, lead_mode if on_lead else other_mode))
        t = end
        on_lead = not on_lead
    return out


def _pure_finetune(name, dt_s, duration_s, seed, profile, accelerators) -> ScenarioConfig:
    return ScenarioConfig(
        name=name,
        dt_s=dt_s,
        duration_s=duration_s,
        seed=seed,
        mix=PhaseMix(0.0, 1.0, 0.0),
        finetune=FineTuneSetup(profile=profile, accelerators=accelerators),
    )


# ---------------------------------------------------------------------------
# Case-study presets


def _bert_supercloud(seed: int) -> ScenarioConfig:
    # Closed-form two-level fit of mean 17.80 kW / peak 48.70 kW / std 12.39 kW:
    # z = 2.49395, p_high = 0.138508, levels 48700 W and 12831.9 W.
    duration = 4 * DAY_S
    base_w = 700.0
    fleet = AcceleratorSpec(count=160, peak_power_w=300.0, idle_power_w=40.0)
    gap_w = fleet.count * fleet.peak_power_w  # 48 kW swing above base
    high_w = base_w + gap_w
    z = (48700.0 - 17800.0) / 12390.0
    p_high = 1.0 / (1.0 + z * z)
    low_w = high_w - (48700.0 - 17800.0) / (1.0 - p_high)
    beta = (low_w - base_w) / gap_w

    mean_high_dwell = 60.0
    mean_low_dwell = mean_high_dwell * (1.0 - p_high) / p_high
    rng = np.random.default_rng(seed)
    schedule = _alternating_schedule(rng, 0.0, duration, "low", mean_low_dwell, "high", mean_high_dwell)

    profile = FineTuneProfile(base_power_w=base_w, beta=beta, schedule=tuple(schedule))
    return _pure_finetune("bert_supercloud", 1.0, duration, seed, profile, fleet)


def _gpt2_4090_training(seed: int) -> ScenarioConfig:
    # Steady 455 W draw with periodic checkpoint/evaluation dips to 105 W.
    # Duty 7 s out of every 59 s gives mean 413.5 W and std 113.2 W; the
    # 350 W swing is the recorded worst ramp, and the decline matches within
    # the documented tolerance. Fully deterministic.
    duration = 22 * 3600.0
    fleet = AcceleratorSpec(count=1, peak_power_w=350.0, idle_power_w=20.0)
    profile = FineTuneProfile(
        base_power_w=105.0,
        beta=0.5,  # unused: the schedule never enters low mode
        schedule=((0.0, duration, "high"),),
        eval_interval_s=59.0,
        eval_dip_duration_s=7.0,
    )
    return _pure_finetune("gpt2_4090_training", 1.0, duration, seed, profile, fleet)


def _nanogpt_7900xtx_training(seed: int) -> ScenarioConfig:
    # Band 50-250 W: high 250 W, low 100 W, idling at 50 W outside the job.
    duration = 7200.0
    fleet = AcceleratorSpec(count=1, peak_power_w=200.0, idle_power_w=15.0)
    rng = np.random.default_rng(seed)
    inner = _alternating_schedule(rng, 10.0, duration - 10.0, "low", 20.0, "high", 40.0)
    profile = FineTuneProfile(base_power_w=50.0, beta=0.25, schedule=tuple(inner))
    return _pure_finetune("nanogpt_7900xtx_training", 1.0, duration, seed, profile, fleet)


def _gpt2_medium_finetune(seed: int) -> ScenarioConfig:
    # Four stages: setup spike, quiet initialization, fluctuating 250-330 W
    # main run with evaluation dips to the 20 W floor, then shutdown.
    duration = 3200.0
    fleet = AcceleratorSpec(count=1, peak_power_w=310.0, idle_power_w=10.0)
    rng = np.random.default_rng(seed)
    schedule = [(0.0, 25.0, "high"), (25.0, 350.0, "off")]
    schedule += _alternating_schedule(rng, 350.0, 3100.0, "high", 40.0, "low", 20.0)
    schedule.append((3100.0, duration, "off"))
    profile = FineTuneProfile(
        base_power_w=20.0,
        beta=(250.0 - 20.0) / 310.0,
        schedule=tuple(schedule),
        eval_interval_s=150.0,
        eval_dip_duration_s=8.0,
    )
    return _pure_finetune("gpt2_medium_finetune", 1.0, duration, seed, profile, fleet)


_QUERY_POWER_W = {
    "short": {"plain": 180.0, "heavy": 230.0},
    "long": {"plain": 240.0, "heavy": 285.0},
}


def _inference_preset(name, seed, rate_per_s, query_duration_s, peak_query_w) -> ScenarioConfig:
    power = {
        s: {c: min(w, peak_query_w) for c, w in by_c.items()}
        for s, by_c in _QUERY_POWER_W.items()
    }
    profile = InferenceProfile(
        base_power_w=15.0,
        rate=RateSchedule.constant(rate_per_s),
        query_duration_s=query_duration_s,
        queries=QueryMix(
            size_classes=("short", "long"),
            size_weights=(0.5, 0.5),
            complexity_classes=("plain", "heavy"),
            complexity_weights=(0.4, 0.6),
            power_w=power,
        ),
    )
    return ScenarioConfig(
        name=name,
        dt_s=0.1,
        duration_s=3600.0,
        seed=seed,
        mix=PhaseMix(0.0, 0.0, 1.0),
        inference=profile,
    )


def _nanogpt_inference(seed: int) -> ScenarioConfig:
    # Frequent short bursts: ~300 W peaks, 2.5 s service per query.
    return _inference_preset("nanogpt_inference", seed, 0.003, 2.5, 285.0)


def _gpt2_medium_inference(seed: int) -> ScenarioConfig:
    # Sparser but longer bursts than the nanoGPT service.
    return _inference_preset("gpt2_medium_inference", seed, 0.002, 5.0, 280.0)


# ---------------------------------------------------------------------------
# Batch-size sweep rows (constant-power pulses; OOM rows refuse)

MAMBA_PARAMS = 2_768_345_600
GPTNEO_PARAMS = 2_651_307_520
_PULSE_TDP_CAP_W = 355.0  # RX 7900 XTX board limit

_BATCH_ROWS = {
    "mamba28": {
        "model": "Mamba-2.8B",
        "parameters": MAMBA_PARAMS,
        "prompt_length": 1024,
        "rows": {
            1: (16.86, 5.0),
            2: (17.60, 6.0),
            4: (18.23, 6.0),
            8: (19.50, 7.0),
            16: (22.07, 9.0),
            32: (26.27, 12.0),
            64: (33.51, 18.0),
            128: None,
        },
    },
    "gptneo27": {
        "model": "GPT-Neo-2.7B",
        "parameters": GPTNEO_PARAMS,
        "prompt_length": 1024,
        "rows": {
            1: (44.15, 7.0),
            2: (44.43, 9.0),
            4: (52.07, 13.0),
            8: None,
            16: None,
            32: None,
            64: None,
            128: None,
        },
    },
}


def _pulse_power_w(memory_gb: float) -> float:
    # Calibration: draw grows with resident memory, capped at the board TDP.
    return min(_PULSE_TDP_CAP_W, 120.0 + 10.0 * memory_gb)


def _batch_pulse(name, duration_s, memory_gb) -> Callable[[int], ScenarioConfig]:
    def build(seed: int) -> ScenarioConfig:
        fleet = AcceleratorSpec(count=1, peak_power_w=_pulse_power_w(memory_gb), idle_power_w=0.0)
        # window end padded past the grid so the rounded-up tail sample stays on the pulse
        profile = TrainingProfile(base_power_w=0.0, u_max=1.0, t_start_s=0.0, t_end_s=duration_s + 0.1)
        return ScenarioConfig(
            name=name,
            dt_s=0.1,
            duration_s=duration_s,
            seed=seed,
            mix=PhaseMix(1.0, 0.0, 0.0),
            training=TrainingSetup(profile=profile, accelerators=fleet),
        )

    return build


def _batch_presets() -> list:
    presets = []
    for key, family in _BATCH_ROWS.items():
        for batch_size, row in family["rows"].items():
            name = f"{key}_bs{batch_size}"
            ref = {
                "model": family["model"],
                "parameters": family["parameters"],
                "prompt_length": family["prompt_length"],
                "batch_size": batch_size,
            }
            if row is None:
                ref["oom"] = True
                presets.append(
                    Preset(
                        name=name,
                        description=(
                            f"{family['model']} inference at batch size {batch_size}: "
                            "ran out of GPU memory; simulation refuses with an OOM marker."
                        ),
                        reference=ref,
                        default_seed=0,
                        _build=None,
                        oom=True,
                    )
                )
                continue
            duration_s, memory_gb = row
            ref.update(
                {
                    "oom": False,
                    "processing_time_s": duration_s,
                    "gpu_memory_gb": memory_gb,
                    "pulse_power_w": _pulse_power_w(memory_gb),
                }
            )
            presets.append(
                Preset(
                    name=name,
                    description=(
                        f"{family['model']} inference at batch size {batch_size}: "
                        f"constant {_pulse_power_w(memory_gb):.0f} W pulse for "
                        f"{duration_s} s ({memory_gb:.0f} GB resident)."
                    ),
                    reference=ref,
                    default_seed=0,
                    _build=_batch_pulse(name, duration_s, memory_gb),
                )
            )
    return presets


# ---------------------------------------------------------------------------
# Registry

_CASE_PRESETS = [
    Preset(
        name="bert_supercloud",
        description=(
            "BERT training job from the MIT Supercloud dataset, 4 days at 1 s "
            "sampling: frequent switches between high and low power states, "
            "calibrated to mean 17.80 kW, peak 48.70 kW, std 12.39 kW."
        ),
        reference={
            "mean_w": 17800.0,
            "max_w": 48700.0,
            "std_w": 12390.0,
            "duration_s": 4 * DAY_S,
            "action_threshold_w": 50000.0,
        },
        default_seed=1129,
        _build=_bert_supercloud,
    ),
    Preset(
        name="gpt2_4090_training",
        description=(
            "GPT-2 124M training on an RTX 4090 over 22 hours: stable draw "
            "around 455 W with periodic dips to 105 W, calibrated to mean "
            "414 W, max 461 W, std 113.7 W, declines near 320 W/s and ramps "
            "near 350 W/s (synthesized as symmetric 350 W steps, inside the "
            "documented tolerance of both)."
        ),
        reference={
            "mean_w": 414.0,
            "max_w": 461.0,
            "std_w": 113.7,
            "max_ramp_w_per_s": 350.0,
            "max_decline_w_per_s": 320.0,
            "duration_s": 22 * 3600.0,
        },
        default_seed=0,
        _build=_gpt2_4090_training,
    ),
    Preset(
        name="nanogpt_7900xtx_training",
        description=(
            "nanoGPT training on an RX 7900 XTX: draw fluctuating in the "
            "50-250 W band with transients around 130-150 W (synthesized as "
            "symmetric 150 W swings)."
        ),
        reference={
            "band_low_w": 50.0,
            "band_high_w": 250.0,
            "max_ramp_w_per_s": 130.0,
            "max_decline_w_per_s": 150.0,
        },
        default_seed=7,
        _build=_nanogpt_7900xtx_training,
    ),
    Preset(
        name="gpt2_medium_finetune",
        description=(
            "GPT-2 medium fine-tune on an RX 7900 XTX: setup spike then a "
            "quiet initialization until 350 s, a 250-330 W fluctuating run "
            "with evaluation dips to the 20 W floor, and shutdown at 3100 s."
        ),
        reference={
            "stage_boundaries_s": [0.0, 350.0, 1700.0, 3100.0, 3200.0],
            "band_low_w": 250.0,
            "band_high_w": 330.0,
            "eval_dip_floor_w": 20.0,
        },
        default_seed=23,
        _build=_gpt2_medium_finetune,
    ),
    Preset(
        name="nanogpt_inference",
        description=(
            "nanoGPT interactive inference: near-idle floor with sparse "
            "query bursts peaking near 300 W; frequent short bursts."
        ),
        reference={
            "burst_peak_w": 300.0,
            "burst_duration_s": [25.0, 50.0],
            "std_w": 50.0,
            "max_burst_energy_j": 1570.0,
        },
        default_seed=3,
        _build=_nanogpt_inference,
    ),
    Preset(
        name="gpt2_medium_inference",
        description=(
            "GPT-2 medium interactive inference: sparser, longer bursts than "
            "the nanoGPT service, same near-300 W peaks."
        ),
        reference={
            "burst_peak_w": 300.0,
            "burst_duration_s": [25.0, 50.0],
            "std_w": 50.0,
            "max_burst_energy_j": 1570.0,
        },
        default_seed=2,
        _build=_gpt2_medium_inference,
    ),
]

PRESETS = {p.name: p for p in _CASE_PRESETS + _batch_presets()}


def preset_names() -> list:
    return list(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}"
        ) from None


def build_scenario(name: str, seed: Optional[int] = None) -> ScenarioConfig:
    return get_preset(name).scenario(seed)

"""Bidirectional UPS buffer that rate-limits the grid-side power ramp.

The controller is a greedy tracker: each step the grid draw moves toward
the load but never faster than the configured ramp limit; whatever gap
remains is served by (or poured into) the energy buffer. Round-trip loss is
split symmetrically, sqrt(eta) applied on each direction. When the buffer
cannot cover a gap, the grid snaps to the load for that step and the event
is logged rather than raised: violations are data.

Also hosts the stage-aware power-cap policy, a pointwise clamp per
scheduled pipeline stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .trace import PowerTrace

STAGES = ("pretrain", "finetune", "inference")


@dataclass(frozen=True)
class UpsConfig:
    """Buffer sizing, power limits, efficiency, and the grid ramp budget.

    ``grid_ramp_limit_w_per_s`` may be ``math.inf``, which turns smoothing
    into a pass-through.
    """

    capacity_j: float
    max_charge_w: float
    max_discharge_w: float
    round_trip_efficiency: float = 1.0
    grid_ramp_limit_w_per_s: float = math.inf
    initial_soc_fraction: float = 0.5

    def __post_init__(self):
        if not (self.capacity_j > 0) or not math.isfinite(self.capacity_j):
            raise ValidationError("capacity_j must be > 0 and finite")
        if not (self.max_charge_w > 0) or not (self.max_discharge_w > 0):
            raise ValidationError("charge/discharge power limits must be > 0")
        if not (0.0 < self.round_trip_efficiency <= 1.0):
            raise ValidationError("round_trip_efficiency must lie in (0, 1]")
        if not (self.grid_ramp_limit_w_per_s > 0):
            raise ValidationError("grid_ramp_limit_w_per_s must be > 0")
        if not (0.0 <= self.initial_soc_fraction <= 1.0):
            raise ValidationError("initial_soc_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class Violation:
    time_s: float
    reason: str  # depleted | saturated | power-limited


@dataclass(frozen=True)
class UpsResult:
    """Outcome of a smoothing run.

    ``grid_trace`` is the power drawn from the grid; ``soc_j`` the state of
    charge after each step (same length as the load). Energy totals are the
    rectangle sums used by the balance books: grid and load energy, energy
    delivered to the load side, energy absorbed from the grid side, and the
    conversion losses implied by the efficiency split.
    """

    grid_trace: PowerTrace
    soc_j: np.ndarray
    violations: tuple
    delivered_j: float
    absorbed_j: float
    loss_j: float

    @property
    def grid_energy_j(self) -> float:
        return float(np.sum(self.grid_trace.samples) * self.grid_trace.dt)

    def energy_balance_error(self, load: PowerTrace) -> float:
        """Relative bookkeeping error: grid in = load out + dSoC + losses."""
        load_e = float(np.sum(load.samples) * load.dt)
        d_soc = float(self.soc_j[-1] - self.soc_j[0])
        residual = self.grid_energy_j - load_e - d_soc - self.loss_j
        scale = max(abs(self.grid_energy_j), abs(load_e), 1.0)
        return abs(residual) / scale


def smooth(load: PowerTrace, config: UpsConfig) -> UpsResult:
    """Rate-limit the grid draw for a load trace through the buffer.

    The first sample anchors the grid at the load (no prior state to ramp
    from). Per step the grid target is the load clamped into
    ``previous grid +/- ramp_limit * dt``; a positive gap discharges the
    buffer, a negative one charges it. All-or-nothing: if the buffer cannot
    cover the whole gap (power limit, depletion, or saturation) the grid
    snaps to the load for that step and the violation is logged.
    """
    if np.any(load.samples < 0):
        raise ValidationError("smooth expects a nonnegative load trace")
    dt = load.dt
    samples = load.samples
    n = len(samples)
    eta_leg = math.sqrt(config.round_trip_efficiency)

    grid = np.empty(n)
    soc = np.empty(n)
    violations = []
    delivered = absorbed = loss = 0.0

    grid[0] = samples[0]
    state = config.initial_soc_fraction * config.capacity_j
    soc[0] = state
    max_step = config.grid_ramp_limit_w_per_s * dt

    for k in range(1, n):
        target = samples[k]
        if math.isfinite(max_step):
            lo, hi = grid[k - 1] - max_step, grid[k - 1] + max_step
            target = min(max(target, lo), hi)
        gap_w = samples[k] - target  # buffer must deliver (+) or absorb (-)

        if gap_w > 0.0:
            need_soc = gap_w * dt / eta_leg
            if gap_w > config.max_discharge_w:
                violations.append(Violation(load.start_time + k * dt, "power-limited"))
                grid[k] = samples[k]
            elif need_soc > state:
                violations.append(Violation(load.start_time + k * dt, "depleted"))
                grid[k] = samples[k]
            else:
                state -= need_soc
                delivered += gap_w * dt
                loss += need_soc - gap_w * dt
                grid[k] = target
        elif gap_w < 0.0:
            surplus_w = -gap_w
            stored = surplus_w * dt * eta_leg
            if surplus_w > config.max_charge_w:
                violations.append(Violation(load.start_time + k * dt, "power-limited"))
                grid[k] = samples[k]
            elif state + stored > config.capacity_j:
                violations.append(Violation(load.start_time + k * dt, "saturated"))
                grid[k] = samples[k]
            else:
                state += stored
                absorbed += surplus_w * dt
                loss += surplus_w * dt - stored
                grid[k] = target
        else:
            grid[k] = target
        soc[k] = state

    return UpsResult(
        grid_trace=PowerTrace(load.start_time, dt, grid),
        soc_j=soc,
        violations=tuple(violations),
        delivered_j=delivered,
        absorbed_j=absorbed,
        loss_j=loss,
    )


@dataclass(frozen=True)
class StageSchedule:
    """Ordered, non-overlapping pipeline stages with per-stage power caps."""

    intervals: tuple  # (start_s, end_s, stage, cap_w)

    def __post_init__(self):
        norm = []
        prev_end = -math.inf
        for start, end, stage, cap in self.intervals:
            if stage not in STAGES:
                raise ValidationError(f"unknown stage {stage!r}, expected one of {STAGES}")
            if not (start < end):
                raise ValidationError(f"stage interval ({start}, {end}) is empty or reversed")
            if start < prev_end:
                raise ValidationError(f"stage interval starting at {start} overlaps its predecessor")
            if cap < 0 or not math.isfinite(cap):
                raise ValidationError("stage cap must be >= 0 and finite")
            prev_end = end
            norm.append((float(start), float(end), str(stage), float(cap)))
        object.__setattr__(self, "intervals", tuple(norm))

    def cap_at(self, times: np.ndarray) -> np.ndarray:
        """Active cap per sample; +inf where no stage applies."""
        times = np.asarray(times, dtype=np.float64)
        caps = np.full(times.shape, math.inf)
        if self.intervals:
            starts = np.array([s for s, _, _, _ in self.intervals])
            ends = np.array([e for _, e, _, _ in self.intervals])
            values = np.array([c for _, _, _, c in self.intervals])
            idx = np.searchsorted(starts, times, side="right") - 1
            valid = (idx >= 0) & (times < ends[np.clip(idx, 0, len(ends) - 1)])
            caps[valid] = values[idx[valid]]
        return caps


def apply_stage_caps(load: PowerTrace, schedule: Optional[StageSchedule]) -> PowerTrace:
    """Clamp the load pointwise to the active stage cap; identity outside.

    Idempotent and never increases a sample.
    """
    if schedule is None or not schedule.intervals:
        return load
    caps = schedule.cap_at(load.times)
    return load.with_samples(np.minimum(load.samples, caps))

"""Phase-level AI power demand models.

Three operating phases are modeled. Training holds a fleet at a fixed
utilization inside a time window. Fine-tuning switches the fleet between a
full-power level and a reduced level (plus periodic evaluation dips down to
the base draw). Inference adds a stochastic term: query arrivals follow a
Poisson process with a time-dependent rate, and each active query
contributes a class-dependent wattage for a fixed service duration.

All scalar operations have vectorized ``*_array`` twins that evaluate an
entire time grid at once; the synthesis driver uses those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import GridMismatchError, ValidationError
from .trace import PowerTrace, derivative, second_derivative


def _check_fraction(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0) or not math.isfinite(value):
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class AcceleratorSpec:
    """A homogeneous accelerator fleet: count plus per-unit peak/idle watts."""

    count: int
    peak_power_w: float
    idle_power_w: float = 0.0

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise ValidationError(f"count must be a nonnegative integer, got {self.count}")
        if not (self.peak_power_w > 0.0) or not math.isfinite(self.peak_power_w):
            raise ValidationError(f"peak_power_w must be > 0, got {self.peak_power_w}")
        if not (0.0 <= self.idle_power_w <= self.peak_power_w):
            raise ValidationError(
                f"idle_power_w must lie in [0, peak_power_w], got {self.idle_power_w}"
            )


def steady_ai_power(spec: AcceleratorSpec, utilization: float) -> float:
    """Steady-state fleet draw: count * peak * utilization."""
    _check_fraction(utilization, "utilization")
    return spec.count * spec.peak_power_w * utilization


@dataclass(frozen=True)
class TrainingProfile:
    """Sustained-utilization phase over a time window.

    Inside ``[t_start_s, t_end_s]`` the fleet runs at ``u_max``; outside it
    idles, so the contribution is the per-unit idle power.
    """

    base_power_w: float
    u_max: float
    t_start_s: float
    t_end_s: float

    def __post_init__(self):
        if self.base_power_w < 0 or not math.isfinite(self.base_power_w):
            raise ValidationError("base_power_w must be >= 0")
        _check_fraction(self.u_max, "u_max")
        if not (self.t_start_s < self.t_end_s):
            raise ValidationError("t_start_s must be < t_end_s")


def training_power_array(times: np.ndarray, profile: TrainingProfile, spec: AcceleratorSpec) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    active = (times >= profile.t_start_s) & (times <= profile.t_end_s)
    on_w = spec.count * spec.peak_power_w * profile.u_max
    off_w = spec.count * spec.idle_power_w
    return profile.base_power_w + np.where(active, on_w, off_w)


def training_power(t: float, profile: TrainingProfile, spec: AcceleratorSpec) -> float:
    if t < 0:
        raise ValidationError("t must be >= 0")
    return float(training_power_array(np.array([t]), profile, spec)[0])


class UtilizationMode(str, Enum):
    HIGH = "high"
    LOW = "low"
    OFF = "off"


@dataclass(frozen=True)
class FineTuneProfile:
    """Two-level utilization switching with periodic evaluation dips.

    The schedule is an ordered, non-overlapping list of
    ``(start_s, end_s, mode)`` intervals. High mode applies the full fleet
    term, low mode scales it by ``beta``, off mode (and any gap in the
    schedule) drops the fleet term entirely. Every ``eval_interval_s`` the
    output additionally dips to ``base_power_w`` for the last
    ``eval_dip_duration_s`` of the interval; a zero dip duration disables
    the mechanism.
    """

    base_power_w: float
    beta: float
    schedule: tuple
    eval_interval_s: float = 0.0
    eval_dip_duration_s: float = 0.0

    def __post_init__(self):
        if self.base_power_w < 0 or not math.isfinite(self.base_power_w):
            raise ValidationError("base_power_w must be >= 0")
        if not (0.0 < self.beta < 1.0):
            raise ValidationError(f"beta must lie strictly inside (0, 1), got {self.beta}")
        norm = []
        prev_end = -math.inf
        for entry in self.schedule:
            start, end, mode = entry
            mode = UtilizationMode(mode)
            if not (start < end):
                raise ValidationError(f"schedule interval ({start}, {end}) is empty or reversed")
            if start < prev_end:
                raise ValidationError(f"schedule interval starting at {start} overlaps its predecessor")
            prev_end = end
            norm.append((float(start), float(end), mode))
        object.__setattr__(self, "schedule", tuple(norm))
        if self.eval_dip_duration_s < 0:
            raise ValidationError("eval_dip_duration_s must be >= 0")
        if self.eval_dip_duration_s > 0:
            if not (self.eval_interval_s > 0):
                raise ValidationError("eval_interval_s must be > 0 when dips are enabled")
            if self.eval_dip_duration_s >= self.eval_interval_s:
                raise ValidationError("eval_dip_duration_s must be shorter than eval_interval_s")

    def alpha_array(self, times: np.ndarray) -> np.ndarray:
        """Utilization scaling per sample: 1, beta, or 0."""
        times = np.asarray(times, dtype=np.float64)
        alpha = np.zeros_like(times)
        if self.schedule:
            starts = np.array([s for s, _, _ in self.schedule])
            ends = np.array([e for _, e, _ in self.schedule])
            levels = np.array(
                [1.0 if m is UtilizationMode.HIGH else (self.beta if m is UtilizationMode.LOW else 0.0)
                 for _, _, m in self.schedule]
            )
            idx = np.searchsorted(starts, times, side="right") - 1
            valid = (idx >= 0) & (times < ends[np.clip(idx, 0, len(ends) - 1)])
            alpha[valid] = levels[idx[valid]]
        return alpha

    def dip_mask(self, times: np.ndarray) -> np.ndarray:
        """True where an evaluation dip is active (tail of each interval)."""
        times = np.asarray(times, dtype=np.float64)
        if self.eval_dip_duration_s <= 0:
            return np.zeros(times.shape, dtype=bool)
        phase = np.mod(times, self.eval_interval_s)
        return phase >= self.eval_interval_s - self.eval_dip_duration_s


def finetune_power_array(times: np.ndarray, profile: FineTuneProfile, spec: AcceleratorSpec) -> np.ndarray:
    alpha = profile.alpha_array(times)
    power = profile.base_power_w + alpha * spec.count * spec.peak_power_w
    dips = profile.dip_mask(times)
    if dips.any():
        power = np.where(dips, profile.base_power_w, power)
    return power


def finetune_power(t: float, profile: FineTuneProfile, spec: AcceleratorSpec) -> float:
    if t < 0:
        raise ValidationError("t must be >= 0")
    return float(finetune_power_array(np.array([t]), profile, spec)[0])


@dataclass(frozen=True)
class RateSchedule:
    """Piecewise-constant arrival rate (queries per second).

    Breakpoints are ``(t_s, rate)`` pairs; the rate at time t is the value of
    the latest breakpoint at or before t, and the first breakpoint extends
    backwards to the start of time.
    """

    breakpoints: tuple

    def __post_init__(self):
        if not self.breakpoints:
            raise ValidationError("rate schedule needs at least one breakpoint")
        norm = []
        prev_t = -math.inf
        for t, rate in self.breakpoints:
            if t <= prev_t:
                raise ValidationError("rate breakpoints must have strictly increasing times")
            if rate < 0 or not math.isfinite(rate):
                raise ValidationError(f"arrival rate must be >= 0, got {rate}")
            prev_t = t
            norm.append((float(t), float(rate)))
        object.__setattr__(self, "breakpoints", tuple(norm))

    @classmethod
    def constant(cls, rate: float) -> "RateSchedule":
        return cls(((0.0, rate),))

    def at_times(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=np.float64)
        ts = np.array([t for t, _ in self.breakpoints])
        rates = np.array([r for _, r in self.breakpoints])
        idx = np.clip(np.searchsorted(ts, times, side="right") - 1, 0, len(ts) - 1)
        return rates[idx]


@dataclass(frozen=True)
class QueryMix:
    """Categorical samplers for query size and complexity, plus the power table.

    ``power_w[size][complexity]`` gives the wattage a query of that class
    adds while it is being served.
    """

    size_classes: tuple
    size_weights: tuple
    complexity_classes: tuple
    complexity_weights: tuple
    power_w: dict

    def __post_init__(self):
        for names, weights, label in (
            (self.size_classes, self.size_weights, "size"),
            (self.complexity_classes, self.complexity_weights, "complexity"),
        ):
            if len(names) == 0 or len(names) != len(weights):
                raise ValidationError(f"{label} classes and weights must be non-empty and equal length")
            if any(w < 0 for w in weights) or sum(weights) <= 0:
                raise ValidationError(f"{label} weights must be nonnegative with a positive sum")
        for s in self.size_classes:
            for c in self.complexity_classes:
                try:
                    p = self.power_w[s][c]
                except KeyError as exc:
                    raise ValidationError(f"power_w missing entry for ({s}, {c})") from exc
                if p < 0 or not math.isfinite(p):
                    raise ValidationError(f"query power for ({s}, {c}) must be >= 0, got {p}")

    def power_matrix(self) -> np.ndarray:
        return np.array(
            [[self.power_w[s][c] for c in self.complexity_classes] for s in self.size_classes]
        )

    def normalized_weights(self):
        sw = np.asarray(self.size_weights, dtype=np.float64)
        cw = np.asarray(self.complexity_weights, dtype=np.float64)
        return sw / sw.sum(), cw / cw.sum()


@dataclass(frozen=True)
class InferenceProfile:
    """Query-driven phase: base draw plus Poisson bursts of query power."""

    base_power_w: float
    rate: RateSchedule
    query_duration_s: float
    queries: QueryMix

    def __post_init__(self):
        if self.base_power_w < 0 or not math.isfinite(self.base_power_w):
            raise ValidationError("base_power_w must be >= 0")
        if not (self.query_duration_s > 0):
            raise ValidationError("query_duration_s must be > 0")


def poisson_step_arrivals(rng: np.random.Generator, rate_per_s, dt: float, n_steps: int) -> np.ndarray:
    """Per-step arrival counts: Poisson(rate * dt) draws on the grid.

    ``rate_per_s`` may be a scalar or a per-step array.
    """
    lam = np.broadcast_to(np.asarray(rate_per_s, dtype=np.float64), (n_steps,)) * dt
    return rng.poisson(lam)


def inference_power_trace(
    profile: InferenceProfile,
    start_time: float,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate the inference phase over a grid of ``n_steps`` samples.

    Arrivals in step k contribute their class power from step k for the
    query duration (rounded to whole steps, at least one). The result is
    ``base + sum of active query powers`` per sample.
    """
    times = start_time + np.arange(n_steps) * dt
    lam = profile.rate.at_times(times)
    counts = poisson_step_arrivals(rng, lam, dt, n_steps)
    active = np.zeros(n_steps)
    total = int(counts.sum())
    if total > 0:
        size_w, cplx_w = profile.queries.normalized_weights()
        size_idx = rng.choice(len(size_w), size=total, p=size_w)
        cplx_idx = rng.choice(len(cplx_w), size=total, p=cplx_w)
        powers = profile.queries.power_matrix()[size_idx, cplx_idx]
        step_idx = np.repeat(np.arange(n_steps), counts)
        dur_steps = max(1, int(round(profile.query_duration_s / dt)))
        edges = np.zeros(n_steps + 1)
        np.add.at(edges, step_idx, powers)
        np.add.at(edges, np.minimum(step_idx + dur_steps, n_steps), -powers)
        active = np.cumsum(edges[:-1])
    return profile.base_power_w + active


@dataclass(frozen=True)
class PhaseMix:
    """Resource-share weights of the three phases; slack is idle capacity."""

    w_train: float
    w_finetune: float
    w_inference: float

    def __post_init__(self):
        for name in ("w_train", "w_finetune", "w_inference"):
            _check_fraction(getattr(self, name), name)
        if self.w_train + self.w_finetune + self.w_inference > 1.0 + 1e-12:
            raise ValidationError("phase weights must sum to at most 1")


def mixed_power(mix: PhaseMix, p_train: float, p_finetune: float, p_inference: float) -> float:
    return mix.w_train * p_train + mix.w_finetune * p_finetune + mix.w_inference * p_inference


@dataclass(frozen=True)
class DynamicsCoefficients:
    """Derivative-response coefficients for the transient overlay.

    ``c_s`` scales the first derivative (gradual changes), ``d_s2`` the
    second derivative (abrupt changes), ``e_s`` the first derivative of an
    external power trace.
    """

    c_s: float = 0.0
    d_s2: float = 0.0
    e_s: float = 0.0

    def __post_init__(self):
        for name in ("c_s", "d_s2", "e_s"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")


def dynamic_power(
    trace: PowerTrace,
    coeffs: DynamicsCoefficients,
    external: Optional[PowerTrace] = None,
) -> PowerTrace:
    """Transient demand: trace + c*dP/dt + d*d2P/dt2 + e*dPext/dt.

    With all coefficients zero this is the identity. The output is not
    clamped at zero: negative excursions represent modeled overshoot and are
    flagged downstream in reports.
    """
    if coeffs.e_s != 0.0 and external is None:
        raise ValidationError("e_s is nonzero but no external trace was given")
    if external is not None and not trace.same_grid(external):
        raise GridMismatchError("external trace must share dt, length, and start time")
    out = trace.samples.copy()
    if coeffs.c_s != 0.0:
        out = out + coeffs.c_s * derivative(trace).samples
    if coeffs.d_s2 != 0.0:
        out = out + coeffs.d_s2 * second_derivative(trace).samples
    if coeffs.e_s != 0.0 and external is not None:
        out = out + coeffs.e_s * derivative(external).samples
    return trace.with_samples(out)


@dataclass(frozen=True)
class AcceleratorBreakdownFractions:
    """How one accelerator's draw splits into compute/memory/cooling/auxiliary."""

    compute: float
    memory: float
    cooling: float
    auxiliary: float

    def __post_init__(self):
        parts = (self.compute, self.memory, self.cooling, self.auxiliary)
        if any(p < 0 for p in parts):
            raise ValidationError("breakdown fractions must be >= 0")
        if abs(sum(parts) - 1.0) > 1e-12:
            raise ValidationError(f"breakdown fractions must sum to 1, got {sum(parts)!r}")


@dataclass(frozen=True)
class BreakdownWatts:
    compute: float
    memory: float
    cooling: float
    auxiliary: float


def accelerator_breakdown(total_w: float, fractions: AcceleratorBreakdownFractions) -> BreakdownWatts:
    if total_w < 0:
        raise ValidationError("total_w must be >= 0")
    return BreakdownWatts(
        compute=total_w * fractions.compute,
        memory=total_w * fractions.memory,
        cooling=total_w * fractions.cooling,
        auxiliary=total_w * fractions.auxiliary,
    )

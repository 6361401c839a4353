"""Scalar and distributional metrics over a power trace.

Ramp and decline statistics deliberately use raw consecutive differences
rather than the smoothing central stencil: the point of the metric is the
worst single-step transient, which a central difference would halve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .trace import PowerTrace

DEFAULT_IDLE_PERCENTILE = 0.05
DEFAULT_HISTOGRAM_BINS = 64


@dataclass(frozen=True)
class IdleDefinition:
    """How the idle power level is resolved: explicit watts or a quantile.

    The percentile mode (default p=0.05) is robust to measurement noise
    floors; explicit watts override it when the idle draw is known.
    """

    mode: str
    watts: float = 0.0
    p: float = DEFAULT_IDLE_PERCENTILE

    def __post_init__(self):
        if self.mode == "explicit":
            if self.watts < 0 or not math.isfinite(self.watts):
                raise ValidationError("explicit idle watts must be >= 0")
        elif self.mode == "percentile":
            if not (0.0 < self.p < 1.0):
                raise ValidationError("idle percentile must lie strictly inside (0, 1)")
        else:
            raise ValidationError(f"unknown idle mode {self.mode!r}")

    @classmethod
    def explicit(cls, watts: float) -> "IdleDefinition":
        return cls(mode="explicit", watts=watts)

    @classmethod
    def percentile(cls, p: float = DEFAULT_IDLE_PERCENTILE) -> "IdleDefinition":
        return cls(mode="percentile", p=p)

    def resolve(self, trace: PowerTrace) -> float:
        if self.mode == "explicit":
            return self.watts
        return float(np.quantile(trace.samples, self.p))

    def as_dict(self) -> dict:
        if self.mode == "explicit":
            return {"mode": "explicit", "watts": self.watts}
        return {"mode": "percentile", "p": self.p}


def peak_average_ratio(trace: PowerTrace) -> float:
    mean = float(np.mean(trace.samples))
    if mean <= 0:
        raise ValidationError(f"peak/average undefined for nonpositive mean {mean}")
    return float(np.max(trace.samples)) / mean


def peak_idle_ratio(trace: PowerTrace, idle: IdleDefinition) -> float:
    level = idle.resolve(trace)
    if level <= 0:
        raise ValidationError("undefined ratio: idle level resolves to 0")
    return float(np.max(trace.samples)) / level


@dataclass(frozen=True)
class RampStats:
    """Worst-case per-step transients plus the distribution of step rates.

    ``max_ramp_w_per_s`` is the largest positive step rate, and
    ``max_decline_w_per_s`` the magnitude of the most negative one; both are
    0 when no step moves in that direction. The histogram bins all step
    rates over equal-width bins spanning their range.
    """

    max_ramp_w_per_s: float
    max_decline_w_per_s: float
    bin_edges: np.ndarray
    counts: np.ndarray

    def as_dict(self) -> dict:
        return {
            "max_ramp_w_per_s": self.max_ramp_w_per_s,
            "max_decline_w_per_s": self.max_decline_w_per_s,
            "histogram": {
                "bin_edges": [float(x) for x in self.bin_edges],
                "counts": [int(x) for x in self.counts],
            },
        }


def ramp_decline_stats(trace: PowerTrace, n_bins: int = DEFAULT_HISTOGRAM_BINS) -> RampStats:
    if len(trace) < 2:
        raise ValidationError("ramp statistics require at least 2 samples")
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    rates = np.diff(trace.samples) / trace.dt
    max_ramp = float(max(rates.max(), 0.0))
    max_decline = float(max(-rates.min(), 0.0))
    counts, edges = np.histogram(rates, bins=n_bins)
    return RampStats(max_ramp, max_decline, edges, counts)


def empirical_cdf(trace: PowerTrace, n_bins: int) -> list:
    """Cumulative distribution of sample power over equal-width bins.

    Returns ``(bin_upper_edge_w, cumulative_fraction)`` pairs; fractions are
    nondecreasing and the last one is exactly 1.0. A constant trace
    collapses to a single step.
    """
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1")
    s = trace.samples
    lo, hi = float(s.min()), float(s.max())
    if lo == hi:
        return [(hi, 1.0)]
    counts, edges = np.histogram(s, bins=n_bins, range=(lo, hi))
    fractions = np.cumsum(counts) / s.size
    fractions[-1] = 1.0
    return [(float(edges[i + 1]), float(fractions[i])) for i in range(n_bins)]


def exceedance_fraction(trace: PowerTrace, threshold_w: float) -> float:
    """Fraction of samples strictly above the threshold."""
    return float(np.count_nonzero(trace.samples > threshold_w)) / len(trace)

"""Uniform power time series and the numeric operations defined on them.

A :class:`PowerTrace` is the currency every other module trades in: a start
time, a fixed step ``dt`` and a vector of wattage samples. Traces are
immutable after construction; every operation returns a new trace.

CSV format
----------
Traces serialize to a two-column CSV with header ``timestamp_s,power_w``.
Floats are written with 17 significant digits so that a write/read cycle
reproduces the sample values bit for bit. Ingestion requires strictly
increasing timestamps on a uniform grid (tolerance ``1e-6 * dt``); the step
is inferred from the first two rows. A single-row file cannot determine its
own step and is assigned ``dt = 1.0``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TraceParseError, ValidationError

CSV_HEADER = "timestamp_s,power_w"


@dataclass(frozen=True)
class PowerTrace:
    """Uniformly sampled power series in watts.

    Samples may be negative (first/second-derivative overlays can overshoot
    below zero); reports flag such traces rather than clamping them.
    """

    start_time: float
    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (self.dt > 0.0) or not math.isfinite(self.dt):
            raise ValidationError(f"dt must be a positive finite number, got {self.dt}")
        if not math.isfinite(self.start_time):
            raise ValidationError("start_time must be finite")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples must all be finite")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) * self.dt

    @property
    def end_time(self) -> float:
        return self.start_time + (len(self) - 1) * self.dt

    @property
    def duration_s(self) -> float:
        return (len(self) - 1) * self.dt

    def with_samples(self, samples: np.ndarray) -> "PowerTrace":
        """New trace on the same grid with different sample values."""
        return PowerTrace(self.start_time, self.dt, samples)

    def same_grid(self, other: "PowerTrace", rel_tol: float = 1e-12) -> bool:
        return (
            len(self) == len(other)
            and math.isclose(self.dt, other.dt, rel_tol=rel_tol)
            and math.isclose(self.start_time, other.start_time, rel_tol=rel_tol, abs_tol=1e-12)
        )


@dataclass(frozen=True)
class SummaryStats:
    """Population statistics of a trace (std uses the N denominator)."""

    mean_w: float
    max_w: float
    min_w: float
    std_w: float
    duration_s: float

    def as_dict(self) -> dict:
        return {
            "mean_w": self.mean_w,
            "max_w": self.max_w,
            "min_w": self.min_w,
            "std_w": self.std_w,
            "duration_s": self.duration_s,
        }


def summary_stats(trace: PowerTrace) -> SummaryStats:
    s = trace.samples
    return SummaryStats(
        mean_w=float(np.mean(s)),
        max_w=float(np.max(s)),
        min_w=float(np.min(s)),
        std_w=float(np.std(s)),
        duration_s=trace.duration_s,
    )


def _fmt(x: float) -> str:
    # 17 significant digits: enough for exact float64 round-trips.
    return format(float(x), ".17g")


def emit_csv(trace: PowerTrace) -> str:
    """Serialize a trace to CSV text (see module docstring for the format)."""
    lines = [CSV_HEADER]
    t0, dt = trace.start_time, trace.dt
    for i, p in enumerate(trace.samples):
        lines.append(f"{_fmt(t0 + i * dt)},{_fmt(p)}")
    return "\n".join(lines) + "\n"


def write_csv(trace: PowerTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_csv(trace))


def ingest_csv(source) -> PowerTrace:
    """Parse a trace CSV from bytes, text, or a file-like object.

    Raises :class:`TraceParseError` naming the offending data row (1-based,
    header excluded) for non-numeric fields, non-monotonic timestamps, or
    rows that fall off the uniform grid.
    """
    if isinstance(source, bytes):
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TraceParseError(f"input is not valid UTF-8: {exc}") from exc
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    reader = io.StringIO(text)
    header = reader.readline()
    if header.strip() != CSV_HEADER:
        raise TraceParseError(f"expected header '{CSV_HEADER}', got {header.strip()!r}")

    times: list[float] = []
    powers: list[float] = []
    row = 0
    for raw in reader:
        line = raw.strip()
        if not line:
            continue
        row += 1
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceParseError(
                f"row {row}: expected 2 comma-separated fields, got {len(parts)}", row=row
            )
        try:
            t, p = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise TraceParseError(f"row {row}: non-numeric field ({exc})", row=row) from exc
        if not (math.isfinite(t) and math.isfinite(p)):
            raise TraceParseError(f"row {row}: non-finite value", row=row)
        if times and t <= times[-1]:
            raise TraceParseError(
                f"row {row}: timestamp {t!r} does not increase past {times[-1]!r}", row=row
            )
        times.append(t)
        powers.append(p)

    if not times:
        raise TraceParseError("no samples: file contains a header but no data rows")

    if len(times) == 1:
        return PowerTrace(start_time=times[0], dt=1.0, samples=np.array(powers))

    dt = times[1] - times[0]
    tol = 1e-6 * dt
    for i, t in enumerate(times):
        expected = times[0] + i * dt
        if abs(t - expected) > tol:
            raise TraceParseError(
                f"row {i + 1}: non-uniform grid, timestamp {t!r} deviates from "
                f"expected {expected!r} by more than {tol:g}",
                row=i + 1,
            )
    return PowerTrace(start_time=times[0], dt=dt, samples=np.array(powers))


def read_csv(path) -> PowerTrace:
    with open(path, "rb") as fh:
        return ingest_csv(fh)


def derivative(trace: PowerTrace) -> PowerTrace:
    """First time derivative in W/s on the same grid.

    Central differences at interior points, one-sided at the two endpoints.
    Exact for affine traces everywhere.
    """
    if len(trace) < 2:
        raise ValidationError("derivative requires at least 2 samples")
    s, dt = trace.samples, trace.dt
    d = np.empty_like(s)
    d[0] = (s[1] - s[0]) / dt
    d[-1] = (s[-1] - s[-2]) / dt
    if len(s) > 2:
        d[1:-1] = (s[2:] - s[:-2]) / (2.0 * dt)
    return trace.with_samples(d)


def second_derivative(trace: PowerTrace) -> PowerTrace:
    """Second time derivative in W/s^2 via the 3-point stencil.

    One-sided (uncentred) stencils at the endpoints; requires 3 samples.
    """
    if len(trace) < 3:
        raise ValidationError("second_derivative requires at least 3 samples")
    s, dt = trace.samples, trace.dt
    dt2 = dt * dt
    d = np.empty_like(s)
    d[1:-1] = (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dt2
    d[0] = (s[0] - 2.0 * s[1] + s[2]) / dt2
    d[-1] = (s[-1] - 2.0 * s[-2] + s[-3]) / dt2
    return trace.with_samples(d)


def resample(trace: PowerTrace, new_dt: float) -> PowerTrace:
    """Linear interpolation onto a new uniform grid over the same span.

    The output covers ``[start, start + floor(span/new_dt) * new_dt]``; when
    the span is not an exact multiple of ``new_dt`` the tail past the last
    new grid point is dropped. Resampling at the original ``dt`` is the
    identity.
    """
    if not (new_dt > 0.0) or not math.isfinite(new_dt):
        raise ValidationError(f"new_dt must be positive and finite, got {new_dt}")
    span = trace.duration_s
    n_new = int(math.floor(span / new_dt + 1e-9)) + 1
    new_times = trace.start_time + np.arange(n_new) * new_dt
    new_samples = np.interp(new_times, trace.times, trace.samples)
    return PowerTrace(trace.start_time, new_dt, new_samples)

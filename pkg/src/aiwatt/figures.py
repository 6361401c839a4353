"""Figure rendering for report outputs.

Figures are drawn straight onto ``matplotlib.figure.Figure`` objects (no
pyplot state machine, no interactive backend) and written as PNG files next
to the report. Reports always carry the underlying arrays too, so any
external plotter can reproduce these.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .trace import PowerTrace
from .ups import UpsResult

_FIGSIZE = (9.0, 4.0)
_DPI = 120


def _save(fig: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    return path


def plot_trace(trace: PowerTrace, path, title: str = "Power trace") -> Path:
    fig = Figure(figsize=_FIGSIZE)
    ax = fig.subplots()
    ax.plot(trace.times, trace.samples, lw=0.7, color="tab:blue")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("power [W]")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, Path(path))


def plot_cdf(report: dict, path) -> Path:
    points = report["cdf"]
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.subplots()
    ax.step(
        [p["power_w"] for p in points],
        [p["cumulative_fraction"] for p in points],
        where="post",
        color="tab:green",
    )
    for entry in report.get("exceedance", []):
        ax.axvline(entry["threshold_w"], color="tab:red", ls="--", lw=1.0)
    ax.set_xlabel("power [W]")
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(0.0, 1.02)
    ax.set_title("Power CDF")
    ax.grid(alpha=0.3)
    return _save(fig, Path(path))


def plot_ramp_histogram(report: dict, path) -> Path:
    hist = report["ramps"]["histogram"]
    edges = np.asarray(hist["bin_edges"], dtype=float)
    counts = np.asarray(hist["counts"], dtype=float)
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.subplots()
    if edges.size >= 2:
        widths = np.diff(edges)
        ax.bar(edges[:-1], counts, width=widths, align="edge", color="tab:orange", alpha=0.8)
    ax.set_xlabel("step rate [W/s]")
    ax.set_ylabel("count")
    ax.set_yscale("symlog")
    ax.set_title("Ramp / decline distribution")
    ax.grid(alpha=0.3)
    return _save(fig, Path(path))


def plot_ldc(trace: PowerTrace, path) -> Path:
    ordered = np.sort(trace.samples)[::-1]
    hours = np.arange(ordered.size) * trace.dt / 3600.0
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.subplots()
    ax.plot(hours, ordered, color="tab:purple")
    ax.set_xlabel("duration at or above [h]")
    ax.set_ylabel("power [W]")
    ax.set_title("Load duration curve")
    ax.grid(alpha=0.3)
    return _save(fig, Path(path))


def plot_ups(load: PowerTrace, result: UpsResult, path) -> Path:
    fig = Figure(figsize=_FIGSIZE)
    ax = fig.subplots()
    ax.plot(load.times, load.samples, lw=0.8, label="load", color="tab:blue")
    ax.plot(
        result.grid_trace.times,
        result.grid_trace.samples,
        lw=1.2,
        label="grid (smoothed)",
        color="tab:red",
    )
    ax.set_xlabel("time [s]")
    ax.set_ylabel("power [W]")
    ax.grid(alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(load.times, result.soc_j, lw=0.8, color="tab:gray", label="state of charge")
    ax2.set_ylabel("stored energy [J]")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="best", fontsize=8)
    ax.set_title("UPS smoothing")
    return _save(fig, Path(path))


def render_analysis_figures(trace: PowerTrace, report: dict, outdir, stem: str = "trace") -> list:
    """Standard figure set for an analysis run: trace, CDF, ramps, LDC."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = report.get("scenario") or stem
    return [
        plot_trace(trace, outdir / f"{stem}_power.png", title=f"Power trace: {name}"),
        plot_cdf(report, outdir / f"{stem}_cdf.png"),
        plot_ramp_histogram(report, outdir / f"{stem}_ramps.png"),
        plot_ldc(trace, outdir / f"{stem}_ldc.png"),
    ]

"""Facility-level power decomposition, PUE, heat and cooling algebra.

The supporting-infrastructure and IT sums are written with the conversion
efficiency as a multiplier on the component sum. Physically one usually
divides a delivered load by the efficiency to get grid-side power; the
``efficiency_applied`` flag switches to that reading, with "multiply" the
default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .trace import PowerTrace

JOULES_PER_KWH = 3.6e6


def _check_efficiency(value: float, name: str) -> None:
    if not (0.0 < value <= 1.0):
        raise ValidationError(f"{name} must lie in (0, 1], got {value}")


def _check_components(components: dict, name: str) -> None:
    for key, watts in components.items():
        if watts < 0 or not math.isfinite(watts):
            raise ValidationError(f"{name}[{key!r}] must be >= 0, got {watts}")


@dataclass(frozen=True)
class FacilityConfig:
    """Conversion efficiencies and per-component wattage maps.

    ``supporting_w`` covers AHU, chillers, cooling tower, pumps, humidifiers,
    BMS, lighting, office, UPS and network infrastructure; ``it_w`` covers
    servers, network gear, storage, CRAC and the IT-side UPS. Keys are free
    form; only the values enter the sums.
    """

    eta_acac: float = 1.0
    eta_acdc: float = 1.0
    supporting_w: dict = field(default_factory=dict)
    it_w: dict = field(default_factory=dict)
    efficiency_applied: str = "multiply"

    def __post_init__(self):
        _check_efficiency(self.eta_acac, "eta_acac")
        _check_efficiency(self.eta_acdc, "eta_acdc")
        _check_components(self.supporting_w, "supporting_w")
        _check_components(self.it_w, "it_w")
        if self.efficiency_applied not in ("multiply", "divide"):
            raise ValidationError("efficiency_applied must be 'multiply' or 'divide'")


def _apply_eta(total: float, eta: float, mode: str) -> float:
    return total * eta if mode == "multiply" else total / eta


def supporting_infra_power(config: FacilityConfig) -> float:
    """Supporting-infrastructure draw: eta_acac applied to the component sum."""
    return _apply_eta(sum(config.supporting_w.values()), config.eta_acac, config.efficiency_applied)


def it_power(config: FacilityConfig) -> float:
    """IT substation draw: eta_acdc applied to the component sum."""
    return _apply_eta(sum(config.it_w.values()), config.eta_acdc, config.efficiency_applied)


def total_power(ac_bus_w: float, external_w: float) -> float:
    """Total facility supply: utility feed plus external sources."""
    if ac_bus_w < 0 or external_w < 0:
        raise ValidationError("power contributions must be >= 0")
    return ac_bus_w + external_w


def pue(total_w: float, it_w: float) -> float:
    """Power usage effectiveness, total over IT; always >= 1 for valid inputs."""
    if it_w <= 0:
        raise ValidationError("pue undefined: IT power must be > 0")
    if total_w < it_w:
        raise ValidationError(f"total power {total_w} is below IT power {it_w}")
    return total_w / it_w


@dataclass(frozen=True)
class CoolingParams:
    """Coefficient of performance of the cooling plant."""

    cop: float

    def __post_init__(self):
        if not (self.cop > 0) or not math.isfinite(self.cop):
            raise ValidationError(f"cop must be > 0, got {self.cop}")


def heat_generated(p_total_w: float, p_useful_w: float) -> float:
    """Waste heat: total draw minus the power doing useful computation."""
    if p_useful_w < 0:
        raise ValidationError("p_useful_w must be >= 0")
    if p_useful_w > p_total_w:
        raise ValidationError(f"p_useful {p_useful_w} exceeds p_total {p_total_w}")
    return p_total_w - p_useful_w


def cooling_power(heat_w: float, params: CoolingParams) -> float:
    """Cooling plant draw needed to remove ``heat_w``: heat / COP."""
    if heat_w < 0:
        raise ValidationError("heat_w must be >= 0")
    return heat_w / params.cop


def total_energy(trace: PowerTrace) -> float:
    """Trapezoidal energy integral in joules; exact for piecewise-linear power.

    A single-sample trace spans no time and integrates to 0.
    """
    if len(trace) == 1:
        return 0.0
    return float(np.trapezoid(trace.samples, dx=trace.dt))


def joules_to_kwh(joules: float) -> float:
    return joules / JOULES_PER_KWH


def facility_block(config: FacilityConfig, cooling: CoolingParams | None, servers_mean_w: float) -> dict:
    """Steady-state facility rollup around a mean server draw.

    Adds the workload mean to the configured ``servers`` entry, then reports
    the IT and supporting sums, total, PUE, waste heat (relative to the IT
    draw as the useful share), and the implied cooling power when a COP is
    supplied.
    """
    if servers_mean_w < 0:
        raise ValidationError("servers_mean_w must be >= 0")
    it_components = dict(config.it_w)
    it_components["servers"] = it_components.get("servers", 0.0) + servers_mean_w
    merged = FacilityConfig(
        eta_acac=config.eta_acac,
        eta_acdc=config.eta_acdc,
        supporting_w=config.supporting_w,
        it_w=it_components,
        efficiency_applied=config.efficiency_applied,
    )
    it = it_power(merged)
    supporting = supporting_infra_power(merged)
    total = supporting + it
    block = {
        "supporting_infra_w": supporting,
        "it_power_w": it,
        "total_power_w": total,
        "pue": pue(total, it) if it > 0 else None,
        "heat_w": heat_generated(total, it),
    }
    if cooling is not None:
        block["cooling_power_w"] = cooling_power(block["heat_w"], cooling)
        block["cop"] = cooling.cop
    return block

"""Grid-impact quantities: frequency stability, power flow, concentration,
load-duration analysis, harmonics, and net-load variability.

Bus power injections use the polar form

    P_i = sum_j |V_i||V_j||Y_ij| cos(theta_ij - delta_i + delta_j)

with angles in radians and all electrical quantities in per-unit. The
power-flow solver is a standard Newton-Raphson on real-power mismatches for
every non-slack bus plus reactive mismatches for PQ buses, started flat
(angles 0, unknown magnitudes 1.0 pu).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import GridMismatchError, PowerFlowError, ValidationError
from .trace import PowerTrace

PF_TOLERANCE_PU = 1e-8
PF_MAX_ITERATIONS = 50

SLACK, PV, PQ = "slack", "pv", "pq"


# ---------------------------------------------------------------------------
# Frequency stability


@dataclass(frozen=True)
class GridFrequencyParams:
    """System inertia and normalization for frequency-response estimates."""

    inertia_h_s: float
    p_nominal_w: float
    rocof_threshold_pu_per_s: float
    f_nominal_hz: Optional[float] = None

    def __post_init__(self):
        if not (self.inertia_h_s > 0):
            raise ValidationError("inertia_h_s must be > 0")
        if not (self.p_nominal_w > 0):
            raise ValidationError("p_nominal_w must be > 0")
        if not (self.rocof_threshold_pu_per_s > 0):
            raise ValidationError("rocof_threshold_pu_per_s must be > 0")
        if self.f_nominal_hz is not None and not (self.f_nominal_hz > 0):
            raise ValidationError("f_nominal_hz must be > 0 when given")


def rocof(params: GridFrequencyParams, delta_p_w: float) -> float:
    """Rate of change of frequency in per-unit/s for a power imbalance.

    The sign follows the imbalance. Multiply by ``f_nominal_hz`` for Hz/s;
    :func:`rocof_hz_per_s` does that when the nominal frequency is known.
    """
    return (delta_p_w / params.p_nominal_w) / (2.0 * params.inertia_h_s)


def rocof_hz_per_s(params: GridFrequencyParams, delta_p_w: float) -> float:
    if params.f_nominal_hz is None:
        raise ValidationError("f_nominal_hz is required for a Hz/s value")
    return rocof(params, delta_p_w) * params.f_nominal_hz


def worst_step_delta_w(trace: PowerTrace) -> float:
    """The per-step power change of largest magnitude, sign preserved.

    This is the imbalance a trace hands to the frequency-response estimate.
    """
    if len(trace) < 2:
        raise ValidationError("need at least 2 samples to find a power step")
    deltas = np.diff(trace.samples)
    return float(deltas[np.argmax(np.abs(deltas))])


def stability_index(rocof_max_pu_per_s: float, params: GridFrequencyParams) -> float:
    """|RoCoF_max| over the allowable threshold; above 1 flags instability."""
    return abs(rocof_max_pu_per_s) / params.rocof_threshold_pu_per_s


# ---------------------------------------------------------------------------
# Network model and power flow


@dataclass(frozen=True)
class GridNetwork:
    """Polar-form bus network in per-unit.

    ``y_mag``/``y_angle`` hold the full admittance matrix. ``p_specified_pu``
    is the scheduled real injection per bus (ignored at the slack);
    ``q_specified_pu`` is the scheduled reactive injection (used for PQ
    buses only). Exactly one slack bus is required, and the admittance
    magnitudes must be symmetric (reciprocal network).
    """

    bus_types: tuple
    v_mag: np.ndarray
    v_angle: np.ndarray
    y_mag: np.ndarray
    y_angle: np.ndarray
    p_specified_pu: np.ndarray
    q_specified_pu: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.bus_types)
        if n == 0:
            raise ValidationError("network needs at least one bus")
        for t in self.bus_types:
            if t not in (SLACK, PV, PQ):
                raise ValidationError(f"unknown bus type {t!r}")
        if sum(1 for t in self.bus_types if t == SLACK) != 1:
            raise ValidationError("network must have exactly one slack bus")
        arrays = {}
        for name, want_shape in (
            ("v_mag", (n,)),
            ("v_angle", (n,)),
            ("y_mag", (n, n)),
            ("y_angle", (n, n)),
            ("p_specified_pu", (n,)),
        ):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != want_shape:
                raise ValidationError(f"{name} must have shape {want_shape}, got {arr.shape}")
            arrays[name] = arr
        q = self.q_specified_pu
        arrays["q_specified_pu"] = (
            np.zeros(n) if q is None else np.asarray(q, dtype=np.float64)
        )
        if arrays["q_specified_pu"].shape != (n,):
            raise ValidationError("q_specified_pu must match the bus count")
        if np.any(arrays["v_mag"] <= 0):
            raise ValidationError("voltage magnitudes must be > 0")
        if np.any(arrays["y_mag"] < 0):
            raise ValidationError("admittance magnitudes must be >= 0")
        if not np.allclose(arrays["y_mag"], arrays["y_mag"].T, rtol=1e-9, atol=1e-12):
            raise ValidationError("y_mag must be symmetric for a reciprocal network")
        for name, arr in arrays.items():
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "bus_types", tuple(self.bus_types))

    @property
    def n(self) -> int:
        return len(self.bus_types)

    @property
    def slack_index(self) -> int:
        return self.bus_types.index(SLACK)


def _injection_terms(net: GridNetwork, v: np.ndarray, delta: np.ndarray):
    # M[i, j] = Vi Vj Yij, ANG[i, j] = theta_ij - delta_i + delta_j
    m = net.y_mag * np.outer(v, v)
    ang = net.y_angle - delta[:, None] + delta[None, :]
    return m, ang


def _real_injections(net: GridNetwork, v: np.ndarray, delta: np.ndarray) -> np.ndarray:
    m, ang = _injection_terms(net, v, delta)
    return np.sum(m * np.cos(ang), axis=1)


def _reactive_injections(net: GridNetwork, v: np.ndarray, delta: np.ndarray) -> np.ndarray:
    m, ang = _injection_terms(net, v, delta)
    return -np.sum(m * np.sin(ang), axis=1)


def power_injection(net: GridNetwork, i: int) -> float:
    """Real power injected at bus i for the network's stored state, in pu."""
    if not (0 <= i < net.n):
        raise ValidationError(f"bus index {i} out of range for {net.n} buses")
    return float(_real_injections(net, net.v_mag, net.v_angle)[i])


def all_power_injections(net: GridNetwork) -> np.ndarray:
    return _real_injections(net, net.v_mag, net.v_angle)


def solve_power_flow(
    net: GridNetwork,
    tol_pu: float = PF_TOLERANCE_PU,
    max_iterations: int = PF_MAX_ITERATIONS,
) -> GridNetwork:
    """Newton-Raphson power flow from a flat start.

    Unknowns are the angles of all non-slack buses and the voltage
    magnitudes of PQ buses. Converged when every mismatch is below
    ``tol_pu``; raises :class:`PowerFlowError` with the final mismatch on
    non-convergence and on a singular Jacobian.
    """
    n = net.n
    types = net.bus_types
    non_slack = [i for i in range(n) if types[i] != SLACK]
    pq_buses = [i for i in range(n) if types[i] == PQ]

    # Flat start: given magnitudes at slack/PV, 1.0 pu at PQ, all angles 0.
    v = net.v_mag.copy()
    for i in pq_buses:
        v[i] = 1.0
    delta = np.zeros(n)

    p_spec = net.p_specified_pu
    q_spec = net.q_specified_pu

    mismatch_norm = math.inf
    for _ in range(max_iterations):
        p_calc = _real_injections(net, v, delta)
        q_calc = _reactive_injections(net, v, delta)
        mismatch = np.concatenate(
            [p_spec[non_slack] - p_calc[non_slack], q_spec[pq_buses] - q_calc[pq_buses]]
        )
        mismatch_norm = float(np.max(np.abs(mismatch))) if mismatch.size else 0.0
        if mismatch_norm < tol_pu:
            solved = replace(net, v_mag=v, v_angle=delta)
            return solved

        jac = _jacobian(net, v, delta, non_slack, pq_buses)
        try:
            step = np.linalg.solve(jac, mismatch)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(
                f"singular Jacobian after mismatch {mismatch_norm:.3e} pu"
            ) from exc
        if not np.all(np.isfinite(step)):
            raise PowerFlowError("power flow diverged: non-finite Newton step")
        k = len(non_slack)
        delta[non_slack] += step[:k]
        v[pq_buses] += step[k:]
        if np.any(v <= 0):
            raise PowerFlowError(
                "power flow diverged: voltage magnitude collapsed below zero"
            )

    raise PowerFlowError(
        f"no convergence after {max_iterations} iterations; "
        f"final max mismatch {mismatch_norm:.3e} pu"
    )


def _jacobian(net, v, delta, non_slack, pq_buses) -> np.ndarray:
    m, ang = _injection_terms(net, v, delta)
    sin_a, cos_a = np.sin(ang), np.cos(ang)
    n = net.n
    off = ~np.eye(n, dtype=bool)

    # dP/ddelta
    h = np.where(off, -m * sin_a, 0.0)
    np.fill_diagonal(h, np.sum(np.where(off, m * sin_a, 0.0), axis=1))
    # dP/dV (columns scaled per bus j)
    npm = np.where(off, v[:, None] * net.y_mag * cos_a, 0.0)
    np.fill_diagonal(
        npm,
        2.0 * v * np.diag(net.y_mag) * np.cos(np.diag(net.y_angle))
        + np.sum(np.where(off, v[None, :] * net.y_mag * cos_a, 0.0), axis=1),
    )
    # dQ/ddelta
    j = np.where(off, -m * cos_a, 0.0)
    np.fill_diagonal(j, np.sum(np.where(off, m * cos_a, 0.0), axis=1))
    # dQ/dV
    l = np.where(off, -v[:, None] * net.y_mag * sin_a, 0.0)
    np.fill_diagonal(
        l,
        -2.0 * v * np.diag(net.y_mag) * np.sin(np.diag(net.y_angle))
        - np.sum(np.where(off, v[None, :] * net.y_mag * sin_a, 0.0), axis=1),
    )

    top = np.hstack([h[np.ix_(non_slack, non_slack)], npm[np.ix_(non_slack, pq_buses)]])
    bottom = np.hstack([j[np.ix_(pq_buses, non_slack)], l[np.ix_(pq_buses, pq_buses)]])
    return np.vstack([top, bottom])


def network_from_dict(data: dict) -> GridNetwork:
    """Build a network from the JSON schema: buses plus admittance lines.

    Buses: ``{"id", "type", "v_mag", "v_angle", "p_injection", "q_injection"}``
    with injections in pu (loads negative). Lines:
    ``{"from", "to", "y_mag", "y_angle"}`` giving the series admittance in
    polar pu form. The bus admittance matrix is assembled as
    Y_ii = sum of incident line admittances, Y_ij = -y_line.
    """
    try:
        buses = data["buses"]
        lines = data["lines"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"network dict needs 'buses' and 'lines' keys: {exc}") from exc
    if not buses:
        raise ValidationError("network has no buses")

    ids = [b.get("id") for b in buses]
    if len(set(ids)) != len(ids) or any(i is None for i in ids):
        raise ValidationError("every bus needs a unique 'id'")
    index = {bus_id: k for k, bus_id in enumerate(ids)}
    n = len(buses)

    types, v_mag, v_angle, p_spec, q_spec = [], [], [], [], []
    for b in buses:
        types.append(str(b.get("type", PQ)).lower())
        v_mag.append(float(b.get("v_mag", 1.0)))
        v_angle.append(float(b.get("v_angle", 0.0)))
        p_spec.append(float(b.get("p_injection", 0.0)))
        q_spec.append(float(b.get("q_injection", 0.0)))

    y = np.zeros((n, n), dtype=np.complex128)
    for ln in lines:
        try:
            i, j = index[ln["from"]], index[ln["to"]]
        except KeyError as exc:
            raise ValidationError(f"line references unknown bus {exc}") from exc
        if i == j:
            raise ValidationError("line endpoints must differ")
        y_line = float(ln["y_mag"]) * np.exp(1j * float(ln.get("y_angle", 0.0)))
        y[i, i] += y_line
        y[j, j] += y_line
        y[i, j] -= y_line
        y[j, i] -= y_line

    return GridNetwork(
        bus_types=tuple(types),
        v_mag=np.array(v_mag),
        v_angle=np.array(v_angle),
        y_mag=np.abs(y),
        y_angle=np.angle(y),
        p_specified_pu=np.array(p_spec),
        q_specified_pu=np.array(q_spec),
    )


def network_from_json(path) -> GridNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Spatial concentration


@dataclass(frozen=True)
class LoadSite:
    """One AI load center: its draw and the area it influences."""

    power_w: float
    area_km2: float

    def __post_init__(self):
        if self.power_w < 0:
            raise ValidationError("power_w must be >= 0")
        if not (self.area_km2 > 0):
            raise ValidationError("area_km2 must be > 0")


def spatial_distribution_factor(sites: Sequence[LoadSite]) -> float:
    """Power-weighted mean influence area; low values mean concentration."""
    total = sum(s.power_w for s in sites)
    if total <= 0:
        raise ValidationError("spatial distribution factor undefined for zero total power")
    return sum(s.power_w * s.area_km2 for s in sites) / total


# ---------------------------------------------------------------------------
# Load duration analysis


def load_duration_curve(trace: PowerTrace) -> PowerTrace:
    """Samples sorted descending on the same grid (time loses its meaning)."""
    ordered = np.sort(trace.samples)[::-1]
    return trace.with_samples(ordered)


def ldc_delta_energy(with_ai: PowerTrace, without_ai: PowerTrace) -> float:
    """Area in joules between the two traces' load duration curves."""
    if len(with_ai) != len(without_ai) or not math.isclose(
        with_ai.dt, without_ai.dt, rel_tol=1e-12
    ):
        raise GridMismatchError("LDC comparison requires identical dt and length")
    diff = load_duration_curve(with_ai).samples - load_duration_curve(without_ai).samples
    if len(diff) == 1:
        return 0.0
    return float(np.trapezoid(diff, dx=with_ai.dt))


# ---------------------------------------------------------------------------
# Harmonics


@dataclass(frozen=True)
class HarmonicSpectrum:
    """RMS fundamental current plus a finite set of harmonic amplitudes."""

    fundamental_a: float
    harmonics: dict

    def __post_init__(self):
        if not (self.fundamental_a > 0):
            raise ValidationError("fundamental_a must be > 0")
        for order, amp in self.harmonics.items():
            if int(order) != order or order < 2:
                raise ValidationError(f"harmonic orders must be integers >= 2, got {order}")
            if amp < 0 or not math.isfinite(amp):
                raise ValidationError(f"harmonic amplitude for order {order} must be >= 0")


def thd(spectrum: HarmonicSpectrum) -> float:
    """Total harmonic distortion: RMS of harmonics over the fundamental."""
    ssq = sum(a * a for a in spectrum.harmonics.values())
    return math.sqrt(ssq) / spectrum.fundamental_a


# ---------------------------------------------------------------------------
# Net-load variability


@dataclass(frozen=True)
class VariabilityInputs:
    """Standard deviations of the AI and renewable components plus their
    correlation."""

    v_ai_w: float
    v_re_w: float
    rho: float

    def __post_init__(self):
        if self.v_ai_w < 0 or self.v_re_w < 0:
            raise ValidationError("variabilities must be >= 0")
        if not (-1.0 <= self.rho <= 1.0):
            raise ValidationError(f"correlation must lie in [-1, 1], got {self.rho}")


def net_load_variability(v: VariabilityInputs) -> float:
    """Law-of-cosines combination of the two variability sources."""
    radicand = v.v_ai_w**2 + v.v_re_w**2 - 2.0 * v.rho * v.v_ai_w * v.v_re_w
    return math.sqrt(max(radicand, 0.0))


def estimate_variability(trace: PowerTrace) -> float:
    """Whole-trace population standard deviation in watts."""
    return float(np.std(trace.samples))


def windowed_variability(trace: PowerTrace, window_s: float) -> np.ndarray:
    """Per-window population stds; exploratory, window choice is uncalibrated.

    The trace is split into consecutive windows of ``window_s`` (the last
    partial window is kept when it holds at least 2 samples).
    """
    if not (window_s > 0):
        raise ValidationError("window_s must be > 0")
    w = max(2, int(round(window_s / trace.dt)))
    out = []
    for i in range(0, len(trace), w):
        chunk = trace.samples[i : i + w]
        if chunk.size >= 2:
            out.append(float(np.std(chunk)))
    if not out:
        raise ValidationError("window too long: no window holds 2 samples")
    return np.array(out)


def estimate_correlation(a: PowerTrace, b: PowerTrace) -> float:
    """Pearson correlation of two traces on the same grid."""
    if len(a) != len(b) or not math.isclose(a.dt, b.dt, rel_tol=1e-12):
        raise GridMismatchError("correlation requires identical dt and length")
    xa = a.samples - np.mean(a.samples)
    xb = b.samples - np.mean(b.samples)
    denom = math.sqrt(float(np.dot(xa, xa)) * float(np.dot(xb, xb)))
    if denom == 0.0:
        raise ValidationError("correlation undefined for a zero-variance trace")
    return float(np.dot(xa, xb)) / denom

"""UPS smoothing state machine and the stage-cap policy."""

import math

import numpy as np
import pytest

from aiwatt.errors import ValidationError
from aiwatt.trace import PowerTrace
from aiwatt.ups import StageSchedule, UpsConfig, apply_stage_caps, smooth


def make(samples, dt=1.0):
    return PowerTrace(0.0, dt, np.asarray(samples, dtype=float))


def ample(ramp=100.0, eta=1.0):
    return UpsConfig(
        capacity_j=1e9,
        max_charge_w=1e9,
        max_discharge_w=1e9,
        round_trip_efficiency=eta,
        grid_ramp_limit_w_per_s=ramp,
        initial_soc_fraction=0.5,
    )


def step_load(n_tail=15, level=1000.0):
    return make([0.0] + [level] * n_tail)


class TestSmooth:
    def test_within_ramp_limit_is_identity(self):
        load = make([100.0, 150.0, 120.0, 160.0])
        res = smooth(load, ample(ramp=100.0))
        assert np.array_equal(res.grid_trace.samples, load.samples)
        assert np.all(res.soc_j == res.soc_j[0])
        assert res.violations == ()

    def test_step_load_hand_trajectory(self):
        # hand simulation: grid climbs 100 W per step, deficits sum to 4500 J
        res = smooth(step_load(), ample(ramp=100.0, eta=1.0))
        expected_grid = [0.0] + [min(100.0 * k, 1000.0) for k in range(1, 16)]
        assert np.array_equal(res.grid_trace.samples, expected_grid)
        assert res.violations == ()
        assert res.delivered_j == pytest.approx(4500.0, rel=1e-12)
        soc_drop = res.soc_j[0] - res.soc_j[-1]
        assert soc_drop == pytest.approx(4500.0, rel=1e-12)

    def test_efficiency_split_on_discharge(self):
        # delivering 4500 J at round-trip 0.81 draws 4500 / 0.9 from the store
        res = smooth(step_load(), ample(ramp=100.0, eta=0.81))
        soc_drop = res.soc_j[0] - res.soc_j[-1]
        assert soc_drop == pytest.approx(4500.0 / 0.9, rel=1e-12)
        assert res.delivered_j == pytest.approx(4500.0, rel=1e-12)

    def test_sudden_decline_charges_buffer(self):
        load = make([1000.0] * 3 + [0.0] * 12)
        res = smooth(load, ample(ramp=100.0, eta=1.0))
        assert res.soc_j[-1] > res.soc_j[0]
        assert res.violations == ()
        assert res.absorbed_j == pytest.approx(4500.0, rel=1e-12)

    def test_infinite_ramp_limit_is_identity(self):
        load = make(np.random.default_rng(0).uniform(0, 5000, 50))
        res = smooth(load, ample(ramp=math.inf))
        assert np.array_equal(res.grid_trace.samples, load.samples)

    def test_depleted_logs_and_snaps(self):
        config = UpsConfig(
            capacity_j=200.0,
            max_charge_w=1e9,
            max_discharge_w=1e9,
            grid_ramp_limit_w_per_s=100.0,
            initial_soc_fraction=1.0,
        )
        res = smooth(step_load(), config)
        reasons = {v.reason for v in res.violations}
        assert "depleted" in reasons
        # snapped steps sit exactly on the load
        assert res.grid_trace.samples[-1] == 1000.0
        assert np.all(res.soc_j >= 0.0)

    def test_saturated_on_decline(self):
        config = UpsConfig(
            capacity_j=100.0,
            max_charge_w=1e9,
            max_discharge_w=1e9,
            grid_ramp_limit_w_per_s=10.0,
            initial_soc_fraction=1.0,
        )
        res = smooth(make([500.0, 0.0, 0.0, 0.0]), config)
        assert any(v.reason == "saturated" for v in res.violations)
        assert np.all(res.soc_j <= config.capacity_j + 1e-9)

    def test_power_limited(self):
        config = UpsConfig(
            capacity_j=1e9,
            max_charge_w=1e9,
            max_discharge_w=50.0,
            grid_ramp_limit_w_per_s=100.0,
            initial_soc_fraction=0.5,
        )
        res = smooth(step_load(), config)
        assert any(v.reason == "power-limited" for v in res.violations)

    def test_ramp_bound_holds_without_violations(self):
        rng = np.random.default_rng(5)
        load = make(np.abs(rng.normal(2000.0, 800.0, 300)))
        config = ample(ramp=150.0, eta=0.9)
        res = smooth(load, config)
        assert res.violations == ()
        steps = np.abs(np.diff(res.grid_trace.samples))
        assert steps.max() <= 150.0 * (1.0 + 1e-12)

    def test_energy_books_balance(self):
        rng = np.random.default_rng(6)
        load = make(np.abs(rng.normal(1000.0, 500.0, 400)), dt=0.5)
        for eta in (1.0, 0.92, 0.75):
            res = smooth(load, ample(ramp=120.0, eta=eta))
            assert res.energy_balance_error(load) <= 1e-9

    def test_negative_load_rejected(self):
        with pytest.raises(ValidationError):
            smooth(make([-1.0, 0.0]), ample())

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            UpsConfig(capacity_j=0.0, max_charge_w=1.0, max_discharge_w=1.0)
        with pytest.raises(ValidationError):
            UpsConfig(capacity_j=1.0, max_charge_w=1.0, max_discharge_w=1.0, round_trip_efficiency=1.2)


class TestStageCaps:
    schedule = StageSchedule(
        intervals=(
            (0.0, 10.0, "pretrain", 300.0),
            (10.0, 20.0, "inference", 150.0),
        )
    )

    def test_caps_above_load_are_identity(self):
        load = make([100.0] * 25)
        out = apply_stage_caps(load, self.schedule)
        assert np.array_equal(out.samples, load.samples)

    def test_pointwise_min(self):
        load = make([350.0] * 25)
        out = apply_stage_caps(load, self.schedule)
        assert np.array_equal(out.samples[:10], np.full(10, 300.0))
        assert np.array_equal(out.samples[10:20], np.full(10, 150.0))
        assert np.array_equal(out.samples[20:], np.full(5, 350.0))  # outside schedule

    def test_empty_schedule_is_identity(self):
        load = make([500.0, 600.0])
        out = apply_stage_caps(load, StageSchedule(intervals=()))
        assert np.array_equal(out.samples, load.samples)
        assert np.array_equal(apply_stage_caps(load, None).samples, load.samples)

    def test_idempotent_and_never_increases(self):
        load = make(np.random.default_rng(1).uniform(0, 500, 30))
        once = apply_stage_caps(load, self.schedule)
        twice = apply_stage_caps(once, self.schedule)
        assert np.array_equal(once.samples, twice.samples)
        assert np.all(once.samples <= load.samples)

    def test_overlap_rejected(self):
        with pytest.raises(ValidationError):
            StageSchedule(intervals=((0.0, 10.0, "pretrain", 1.0), (5.0, 15.0, "finetune", 1.0)))

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValidationError):
            StageSchedule(intervals=((0.0, 1.0, "mining", 1.0),))

"""Trace metrics: ratios, ramp/decline, CDF, exceedance."""

import numpy as np
import pytest

from aiwatt.errors import ValidationError
from aiwatt.metrics import (
    IdleDefinition,
    empirical_cdf,
    exceedance_fraction,
    peak_average_ratio,
    peak_idle_ratio,
    ramp_decline_stats,
)
from aiwatt.trace import PowerTrace


def make(samples, dt=1.0):
    return PowerTrace(0.0, dt, np.asarray(samples, dtype=float))


class TestRatios:
    def test_peak_average_constant(self):
        assert peak_average_ratio(make([50.0] * 5)) == 1.0

    def test_peak_average_direct(self):
        assert peak_average_ratio(make([100.0, 300.0])) == 1.5

    def test_peak_average_rejects_nonpositive_mean(self):
        with pytest.raises(ValidationError):
            peak_average_ratio(make([0.0, 0.0]))

    def test_peak_idle_explicit(self):
        assert peak_idle_ratio(make([50.0, 400.0, 60.0]), IdleDefinition.explicit(50.0)) == 8.0

    def test_peak_idle_constant_trace(self):
        assert peak_idle_ratio(make([75.0] * 4), IdleDefinition.explicit(75.0)) == 1.0

    def test_peak_idle_percentile_mode(self):
        tr = make(np.concatenate([np.full(95, 10.0), np.full(5, 200.0)]))
        ratio = peak_idle_ratio(tr, IdleDefinition.percentile(0.05))
        assert ratio == pytest.approx(20.0, rel=1e-12)

    def test_zero_idle_is_undefined(self):
        with pytest.raises(ValidationError, match="undefined"):
            peak_idle_ratio(make([0.0, 10.0]), IdleDefinition.explicit(0.0))

    def test_idle_definition_validation(self):
        with pytest.raises(ValidationError):
            IdleDefinition.percentile(0.0)
        with pytest.raises(ValidationError):
            IdleDefinition.explicit(-5.0)

    def test_ratios_at_least_one_when_idle_below_max(self):
        tr = make([10.0, 30.0, 20.0])
        assert peak_average_ratio(tr) >= 1.0
        assert peak_idle_ratio(tr, IdleDefinition.percentile(0.1)) >= 1.0

    def test_ratios_invariant_under_scaling(self):
        samples = np.random.default_rng(7).uniform(10.0, 500.0, 100)
        idle = IdleDefinition.percentile(0.05)
        for k in (0.5, 3.0, 1e4):
            assert peak_average_ratio(make(k * samples)) == pytest.approx(
                peak_average_ratio(make(samples)), rel=1e-12
            )
            assert peak_idle_ratio(make(k * samples), idle) == pytest.approx(
                peak_idle_ratio(make(samples), idle), rel=1e-12
            )


class TestRampStats:
    def test_constant_trace(self):
        rs = ramp_decline_stats(make([5.0] * 6))
        assert rs.max_ramp_w_per_s == 0.0
        assert rs.max_decline_w_per_s == 0.0

    def test_reported_transient_fixture(self):
        # per-step differences: +350 then -320 at dt = 1
        rs = ramp_decline_stats(make([100.0, 450.0, 130.0]))
        assert rs.max_ramp_w_per_s == 350.0
        assert rs.max_decline_w_per_s == 320.0

    def test_monotone_ramp_has_no_decline(self):
        rs = ramp_decline_stats(make([0.0, 10.0, 25.0, 60.0]))
        assert rs.max_decline_w_per_s == 0.0
        assert rs.max_ramp_w_per_s == 35.0

    def test_time_reversal_swaps_extrema(self):
        rng = np.random.default_rng(1)
        samples = rng.uniform(0.0, 500.0, 64)
        fwd = ramp_decline_stats(make(samples))
        rev = ramp_decline_stats(make(samples[::-1]))
        assert fwd.max_ramp_w_per_s == rev.max_decline_w_per_s
        assert fwd.max_decline_w_per_s == rev.max_ramp_w_per_s

    def test_scaling(self):
        samples = np.array([10.0, 40.0, 5.0, 80.0])
        base = ramp_decline_stats(make(samples))
        scaled = ramp_decline_stats(make(3.0 * samples))
        assert scaled.max_ramp_w_per_s == 3.0 * base.max_ramp_w_per_s
        assert scaled.max_decline_w_per_s == 3.0 * base.max_decline_w_per_s

    def test_histogram_counts_cover_all_steps(self):
        tr = make(np.random.default_rng(2).uniform(0, 100, 257))
        rs = ramp_decline_stats(tr, n_bins=16)
        assert rs.counts.sum() == len(tr) - 1

    def test_dt_scales_rates(self):
        rs = ramp_decline_stats(make([0.0, 10.0], dt=0.1))
        assert rs.max_ramp_w_per_s == pytest.approx(100.0, rel=1e-12)

    def test_too_short(self):
        with pytest.raises(ValidationError):
            ramp_decline_stats(make([1.0]))


class TestCdf:
    def test_constant_single_step(self):
        assert empirical_cdf(make([42.0] * 9), 8) == [(42.0, 1.0)]

    def test_hand_binned(self):
        # bins [0,15] and (15,30]: counts 2 and 2
        out = empirical_cdf(make([0.0, 10.0, 20.0, 30.0]), 2)
        assert out == [(15.0, 0.5), (30.0, 1.0)]

    def test_uniform_ramp_tracks_identity(self):
        n, bins = 10_000, 50
        tr = make(np.linspace(0.0, 1.0, n))
        out = empirical_cdf(tr, bins)
        for power, frac in out:
            assert abs(frac - power) <= 1.0 / bins + 1e-9

    def test_monotone_and_ends_at_one(self):
        tr = make(np.random.default_rng(4).normal(100.0, 20.0, 500))
        out = empirical_cdf(tr, 32)
        fracs = [f for _, f in out]
        assert all(b >= a for a, b in zip(fracs, fracs[1:]))
        assert fracs[-1] == 1.0


class TestExceedance:
    def test_threshold_below_min(self):
        assert exceedance_fraction(make([10.0, 20.0]), 5.0) == 1.0

    def test_threshold_above_max(self):
        assert exceedance_fraction(make([10.0, 20.0]), 25.0) == 0.0

    def test_counting(self):
        assert exceedance_fraction(make([10.0, 20.0, 30.0]), 15.0) == pytest.approx(2.0 / 3.0)

    def test_strictness(self):
        assert exceedance_fraction(make([10.0, 20.0]), 20.0) == 0.0

    def test_nonincreasing_in_threshold(self):
        tr = make(np.random.default_rng(9).uniform(0, 100, 200))
        fracs = [exceedance_fraction(tr, th) for th in np.linspace(-10, 110, 25)]
        assert all(b <= a for a, b in zip(fracs, fracs[1:]))

"""Bus injection evaluation and the Newton-Raphson power flow solver."""

import math

import numpy as np
import pytest

from aiwatt.errors import PowerFlowError, ValidationError
from aiwatt.grid import (
    GridNetwork,
    all_power_injections,
    network_from_dict,
    power_injection,
    solve_power_flow,
)


def brute_force_injection(net: GridNetwork, i: int, v=None, delta=None) -> float:
    """Independent evaluation of the polar injection sum with explicit loops."""
    v = net.v_mag if v is None else v
    delta = net.v_angle if delta is None else delta
    total = 0.0
    for j in range(net.n):
        total += (
            v[i]
            * v[j]
            * net.y_mag[i, j]
            * math.cos(net.y_angle[i, j] - delta[i] + delta[j])
        )
    return total


def two_bus(p2_pu=-0.5, bus2_type="pv", q2_pu=0.0) -> GridNetwork:
    """Slack at 1.0 pu feeding bus 2 through a 0.1 pu reactance line."""
    return network_from_dict(
        {
            "buses": [
                {"id": 1, "type": "slack", "v_mag": 1.0, "v_angle": 0.0},
                {"id": 2, "type": bus2_type, "v_mag": 1.0, "p_injection": p2_pu, "q_injection": q2_pu},
            ],
            "lines": [{"from": 1, "to": 2, "y_mag": 10.0, "y_angle": -math.pi / 2}],
        }
    )


class TestInjection:
    def test_disconnected_network_is_zero(self):
        net = GridNetwork(
            bus_types=("slack", "pq"),
            v_mag=np.array([1.0, 1.0]),
            v_angle=np.zeros(2),
            y_mag=np.zeros((2, 2)),
            y_angle=np.zeros((2, 2)),
            p_specified_pu=np.zeros(2),
        )
        assert power_injection(net, 0) == 0.0
        assert power_injection(net, 1) == 0.0

    def test_single_bus_self_admittance(self):
        theta = 0.7
        net = GridNetwork(
            bus_types=("slack",),
            v_mag=np.array([1.0]),
            v_angle=np.zeros(1),
            y_mag=np.array([[4.0]]),
            y_angle=np.array([[theta]]),
            p_specified_pu=np.zeros(1),
        )
        assert power_injection(net, 0) == pytest.approx(4.0 * math.cos(theta), rel=1e-15)

    def test_matches_brute_force(self):
        net = solve_power_flow(two_bus())
        for i in range(net.n):
            assert power_injection(net, i) == pytest.approx(
                brute_force_injection(net, i), rel=1e-12, abs=1e-12
            )

    def test_index_out_of_range(self):
        with pytest.raises(ValidationError):
            power_injection(two_bus(), 5)


class TestSolver:
    def test_zero_load_flat_start_is_solution(self):
        net = solve_power_flow(two_bus(p2_pu=0.0))
        assert np.allclose(net.v_angle, 0.0, atol=1e-12)
        assert np.allclose(net.v_mag, 1.0, atol=1e-12)

    def test_two_bus_against_bisection_oracle(self):
        net = two_bus(p2_pu=-0.5)
        solved = solve_power_flow(net)

        # 1-D oracle: bisection on the bus-2 injection residual in delta2.
        def residual(delta2):
            return brute_force_injection(net, 1, delta=np.array([0.0, delta2])) - (-0.5)

        lo, hi = -math.pi / 2, 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if residual(lo) * residual(mid) <= 0:
                hi = mid
            else:
                lo = mid
        delta2_oracle = 0.5 * (lo + hi)
        assert abs(residual(delta2_oracle)) < 1e-10
        assert solved.v_angle[1] == pytest.approx(delta2_oracle, abs=1e-9)
        # closed form for this line: sin(delta2) = -0.05
        assert solved.v_angle[1] == pytest.approx(math.asin(-0.05), abs=1e-9)

    def test_converged_mismatches_are_tiny(self):
        net = two_bus(p2_pu=-0.8, bus2_type="pq", q2_pu=-0.2)
        solved = solve_power_flow(net)
        injections = all_power_injections(solved)
        for i, bus_type in enumerate(solved.bus_types):
            if bus_type != "slack":
                assert abs(injections[i] - solved.p_specified_pu[i]) < 1e-8

    def test_injection_bookkeeping(self):
        solved = solve_power_flow(two_bus(p2_pu=-0.5))
        injections = all_power_injections(solved)
        slack = solved.slack_index
        non_slack_spec = sum(
            solved.p_specified_pu[i] for i in range(solved.n) if i != slack
        )
        assert abs(injections.sum() - (injections[slack] + non_slack_spec)) < 1e-6

    def test_overload_raises_diagnostic(self):
        # max transfer over a 0.1 pu reactance at unit voltages is 10 pu
        with pytest.raises(PowerFlowError):
            solve_power_flow(two_bus(p2_pu=-12.0))

    def test_three_bus_mixed_types(self):
        net = network_from_dict(
            {
                "buses": [
                    {"id": "a", "type": "slack", "v_mag": 1.02},
                    {"id": "b", "type": "pv", "v_mag": 1.01, "p_injection": 0.3},
                    {"id": "c", "type": "pq", "p_injection": -0.6, "q_injection": -0.25},
                ],
                "lines": [
                    {"from": "a", "to": "b", "y_mag": 12.0, "y_angle": -1.47},
                    {"from": "b", "to": "c", "y_mag": 8.0, "y_angle": -1.45},
                    {"from": "a", "to": "c", "y_mag": 5.0, "y_angle": -1.50},
                ],
            }
        )
        solved = solve_power_flow(net)
        injections = all_power_injections(solved)
        assert abs(injections[1] - 0.3) < 1e-8
        assert abs(injections[2] + 0.6) < 1e-8
        for i in range(3):
            assert injections[i] == pytest.approx(
                brute_force_injection(solved, i), rel=1e-10, abs=1e-12
            )
        # PV magnitude pinned, PQ magnitude solved
        assert solved.v_mag[1] == 1.01
        assert solved.v_mag[2] != 1.0


class TestNetworkValidation:
    def test_requires_exactly_one_slack(self):
        with pytest.raises(ValidationError):
            network_from_dict(
                {
                    "buses": [{"id": 1, "type": "pq"}, {"id": 2, "type": "pq"}],
                    "lines": [{"from": 1, "to": 2, "y_mag": 1.0, "y_angle": 0.0}],
                }
            )

    def test_unknown_line_endpoint(self):
        with pytest.raises(ValidationError):
            network_from_dict(
                {
                    "buses": [{"id": 1, "type": "slack"}],
                    "lines": [{"from": 1, "to": 9, "y_mag": 1.0, "y_angle": 0.0}],
                }
            )

    def test_duplicate_ids(self):
        with pytest.raises(ValidationError):
            network_from_dict({"buses": [{"id": 1, "type": "slack"}, {"id": 1}], "lines": []})

    def test_asymmetric_admittance_rejected(self):
        with pytest.raises(ValidationError):
            GridNetwork(
                bus_types=("slack", "pq"),
                v_mag=np.ones(2),
                v_angle=np.zeros(2),
                y_mag=np.array([[1.0, 2.0], [3.0, 1.0]]),
                y_angle=np.zeros((2, 2)),
                p_specified_pu=np.zeros(2),
            )

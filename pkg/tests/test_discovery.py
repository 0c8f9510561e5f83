"""Dry/wet decision rules, power-peer ranking, promotion planning."""

from __future__ import annotations

import pytest

from p2psim.discovery import (
    DECLARED_WET,
    DRY,
    RESUME_NEIGHBORS,
    STAY_DRY,
    WET,
    PowerPeerEntry,
    availability_ratio,
    check_return_to_wet,
    entry_utility,
    evaluate_area,
    neighbor_utility,
    plan_promotion,
    power_peer_utility,
    rank_power_peers,
    round_half_up,
    window_hit_rate,
    window_sample_size,
)

W = (0.5, 0.25, 0.25)


def test_utilities_scale_to_hundred():
    assert power_peer_utility(1.0, 1.0, 1.0, W) == pytest.approx(100.0)
    assert power_peer_utility(0.0, 0.0, 0.0, W) == 0.0
    assert power_peer_utility(1.0, 0.0, 0.0, W) == pytest.approx(50.0)
    assert neighbor_utility(0.0, 1.0, 0.0, (1 / 3, 1 / 3, 1 / 3)) == pytest.approx(
        100 / 3
    )


def test_utilities_reject_bad_weights():
    with pytest.raises(ValueError):
        power_peer_utility(1, 1, 1, (0.5, 0.5))
    with pytest.raises(ValueError):
        neighbor_utility(1, 1, 1, (0.5, 0.5, 0.5))


def test_entry_utility_normalizes_and_caps():
    entry = PowerPeerEntry(3, hits=80, degree=50, bandwidth=99_999)
    # all three components saturate at 1.0
    assert entry_utility(entry, 40, W, degree_cap=20, bandwidth_cap=10_000) == (
        pytest.approx(100.0)
    )
    entry = PowerPeerEntry(3, hits=2, degree=10, bandwidth=5000)
    value = entry_utility(entry, 10, W, degree_cap=20, bandwidth_cap=10_000)
    assert value == pytest.approx((0.5 * 0.2 + 0.25 * 0.5 + 0.25 * 0.5) * 100)
    # zero routed queries treated as one to avoid dividing by zero
    assert entry_utility(PowerPeerEntry(1, hits=1), 0, W, 20, 10_000) >= 50.0


def test_ranking_orders_by_utility_then_id():
    table = {
        5: PowerPeerEntry(5, hits=9, degree=10, bandwidth=1000),
        2: PowerPeerEntry(2, hits=9, degree=10, bandwidth=1000),
        7: PowerPeerEntry(7, hits=1, degree=2, bandwidth=500),
    }
    assert rank_power_peers(table, 10, W, 20, 10_000) == [2, 5, 7]


def test_area_evaluation_thresholds():
    assert evaluate_area({}, 0.3) is None
    assert evaluate_area({1: (0, 0)}, 0.3) is None
    assert evaluate_area({1: (10, 1), 2: (10, 1)}, 0.3) == DRY
    assert evaluate_area({1: (10, 3)}, 0.3) == WET  # rate == threshold stays wet
    assert evaluate_area({1: (10, 9), 2: (10, 0)}, 0.3) == WET  # mean 0.45


def test_window_helpers():
    window = {1: (10, 2), 2: (5, 5), 3: (0, 0)}
    assert window_sample_size(window) == 15
    assert window_hit_rate(window) == pytest.approx((0.2 + 1.0) / 2)
    assert window_hit_rate({}) is None


def test_round_half_up():
    assert round_half_up(0.5) == 1
    assert round_half_up(1.5) == 2
    assert round_half_up(2.4) == 2
    assert round_half_up(2.6) == 3
    assert round_half_up(0.0) == 0


def test_promotion_splits_evenly_best_to_best():
    selected = {10: 90.0, 11: 80.0, 12: 70.0, 13: 60.0, 14: 50.0}
    plan = plan_promotion(selected, [100, 101])
    # 5 guests over 2 power peers -> 3 each (half-up), last one short
    assert plan == {100: [10, 11, 12], 101: [13, 14]}


def test_promotion_single_power_peer_takes_all():
    selected = {1: 5.0, 2: 9.0}
    assert plan_promotion(selected, [42]) == {42: [2, 1]}


def test_promotion_more_peers_than_guests():
    selected = {1: 5.0}
    plan = plan_promotion(selected, [7, 8, 9])
    assert plan == {7: [1]}  # n_p floors at one guest per peer


def test_promotion_empty_inputs():
    assert plan_promotion({}, [1]) == {}
    assert plan_promotion({1: 2.0}, []) == {}


def test_return_to_wet_progression():
    availability = {1: 0.5, 2: 0.1, 3: 0.45}
    # only 2/3 green at lambda 0.4: below an 80% quorum, stay dry
    decision, green = check_return_to_wet(availability, 0.4, 0.8, False, None, 0.6)
    assert decision == STAY_DRY and green == [1, 3]
    # at a 60% quorum the same state resumes neighbor querying
    decision, green = check_return_to_wet(availability, 0.4, 0.6, False, None, 0.6)
    assert decision == RESUME_NEIGHBORS and green == [1, 3]
    # once resumed, the verdict depends on the measured window rate
    decision, _ = check_return_to_wet(availability, 0.4, 0.6, True, 0.7, 0.6)
    assert decision == DECLARED_WET
    decision, _ = check_return_to_wet(availability, 0.4, 0.6, True, 0.2, 0.6)
    assert decision == RESUME_NEIGHBORS
    decision, _ = check_return_to_wet(availability, 0.4, 0.6, True, None, 0.6)
    assert decision == RESUME_NEIGHBORS


def test_return_to_wet_empty_promotion_stays_dry():
    assert check_return_to_wet({}, 0.4, 0.8, False, None, 0.6) == (STAY_DRY, [])


def test_availability_ratio():
    assert availability_ratio(0, 10) == 0.0
    assert availability_ratio(-3, 10) == 0.0
    assert availability_ratio(5, 5) == pytest.approx(0.5)
    assert availability_ratio(10, 0) == pytest.approx(1.0)

"""Search-protocol state and decision rules: dry/wet areas, power peers.

A node averages the per-neighbor hit rate of its walkers over a sliding
window; below the dry threshold it reroutes queries through the
highest-utility power peers it has learned about, promotes its
best-provisioned neighbors into those power peers' replication tables,
and returns to neighbor search once enough of them have been stocked
with replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

DRY = "dry"
WET = "wet"

STAY_DRY = "stay_dry"
RESUME_NEIGHBORS = "resume_neighbors"
DECLARED_WET = "declared_wet"


@dataclass(slots=True)
class PowerPeerEntry:
    """What a querying node remembers about one power peer."""

    peer_id: int
    hits: int = 0
    degree: int = 0
    bandwidth: int = 0


@dataclass(slots=True)
class GuestRecord:
    """A promoted neighbor as tracked by its hosting power peer."""

    sponsor: int
    guest: int
    files_at_promotion: int  # shared entries held when promoted
    received_baseline: int  # guest's received_total at promotion


@dataclass(slots=True)
class AreaState:
    """Dry/wet machinery for one node."""

    status: str = WET
    suspended: bool = False  # power routing suspended (neighbors resumed)
    window: dict = field(default_factory=dict)  # neighbor -> [sent, hits]
    win_queries: int = 0  # neighbor-routed queries since last area judgement
    win_hits: int = 0
    promoted: dict = field(default_factory=dict)  # guest -> hosting power peer
    green: tuple = ()
    power_routed_queries: int = 0


def _check_weights(weights: Sequence[float]) -> None:
    if len(weights) != 3 or abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"weights must be 3 values summing to 1, got {weights}")


def power_peer_utility(hit_rate: float, degree_norm: float, bandwidth_norm: float, weights: Sequence[float]) -> float:
    """Utility of a power peer from normalized hit rate, degree, bandwidth."""
    _check_weights(weights)
    w1, w2, w3 = weights
    return (w1 * hit_rate + w2 * degree_norm + w3 * bandwidth_norm) * 100.0


def neighbor_utility(free_norm: float, degree_norm: float, bandwidth_norm: float, weights: Sequence[float]) -> float:
    """Promotion utility of a neighbor from free storage, degree, bandwidth."""
    _check_weights(weights)
    w1, w2, w3 = weights
    return (w1 * free_norm + w2 * degree_norm + w3 * bandwidth_norm) * 100.0


def entry_utility(
    entry: PowerPeerEntry,
    power_routed_queries: int,
    weights: Sequence[float],
    degree_cap: int,
    bandwidth_cap: int,
) -> float:
    hit_rate = min(1.0, entry.hits / max(1, power_routed_queries))
    degree_norm = min(1.0, entry.degree / degree_cap)
    bandwidth_norm = min(1.0, entry.bandwidth / bandwidth_cap)
    return power_peer_utility(hit_rate, degree_norm, bandwidth_norm, weights)


def rank_power_peers(
    table: Mapping[int, PowerPeerEntry],
    power_routed_queries: int,
    weights: Sequence[float],
    degree_cap: int,
    bandwidth_cap: int,
) -> list[int]:
    """Peer ids by descending utility, ties broken by lower id."""
    scored = [
        (-entry_utility(e, power_routed_queries, weights, degree_cap, bandwidth_cap), pid)
        for pid, e in table.items()
    ]
    scored.sort()
    return [pid for _, pid in scored]


def evaluate_area(window: Mapping[int, Sequence[int]], dry_threshold: float) -> str | None:
    """Classify from the window's per-neighbor (sent, hits) counters.

    Returns DRY when the mean per-neighbor hit rate is strictly below the
    threshold, WET otherwise, and None when no neighbor was queried.
    """
    rates = [hits / sent for sent, hits in window.values() if sent > 0]
    if not rates:
        return None
    avg = sum(rates) / len(rates)
    return DRY if avg < dry_threshold else WET


def window_hit_rate(window: Mapping[int, Sequence[int]]) -> float | None:
    rates = [hits / sent for sent, hits in window.values() if sent > 0]
    if not rates:
        return None
    return sum(rates) / len(rates)


def window_sample_size(window: Mapping[int, Sequence[int]]) -> int:
    return sum(sent for sent, _ in window.values())


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def plan_promotion(
    selected: Mapping[int, float],
    ranked_power_peers: Sequence[int],
) -> dict[int, list[int]]:
    """Assign promoted neighbors to power peers, best to best.

    Each power peer receives an equal share of the selected neighbors
    (rounded half-up, at least one); the utility-ranked power peers take
    the highest-utility unassigned neighbors in turn, so only the last
    may receive fewer.
    """
    if not selected or not ranked_power_peers:
        return {}
    per_peer = round_half_up(len(selected) / len(ranked_power_peers))
    if per_peer == 0:
        per_peer = 1
    by_utility = sorted(selected, key=lambda nb: (-selected[nb], nb))
    plan: dict[int, list[int]] = {}
    cursor = 0
    for pp in ranked_power_peers:
        if cursor >= len(by_utility):
            break
        plan[pp] = by_utility[cursor : cursor + per_peer]
        cursor += per_peer
    return plan


def check_return_to_wet(
    availability: Mapping[int, float],
    availability_threshold: float,
    quorum_fraction: float,
    resumed: bool,
    window_rate: float | None,
    recovery_threshold: float,
) -> tuple[str, list[int]]:
    """Decide the next step of a dry node's recovery.

    Before resuming: promoted neighbors whose availability ratio meets
    the threshold are green; once the green share reaches the quorum
    fraction the node resumes querying those neighbors.  After resuming:
    a window hit rate at or above the recovery threshold declares the
    area wet again.
    """
    green = sorted(nb for nb, v in availability.items() if v >= availability_threshold)
    if resumed:
        if window_rate is not None and window_rate >= recovery_threshold:
            return DECLARED_WET, green
        return RESUME_NEIGHBORS, green
    if availability and len(green) >= quorum_fraction * len(availability):
        return RESUME_NEIGHBORS, green
    return STAY_DRY, green


def availability_ratio(received_since_promotion: int, files_at_promotion: int) -> float:
    """Fraction of the guest's shared stock that arrived after promotion."""
    if received_since_promotion <= 0:
        return 0.0
    return received_since_promotion / (files_at_promotion + received_since_promotion)

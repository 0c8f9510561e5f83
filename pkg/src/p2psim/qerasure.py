"""Q-learning replica placement: Q-tables, rewards, distribution planning.

Replicating nodes keep a Q-value per known peer, select targets whose
value beats both the table average and an absolute threshold, place one
erasure block per chosen peer, and fold the observed reward back into the
table.  Peers that were probed while down decay; peers excluded for
already holding copies keep their value.
"""

from __future__ import annotations

import random
from typing import Iterable, Mapping, Sequence, Set


def initial_q_value(bandwidth: float, free_storage: float, min_bandwidth: float, min_storage: float) -> float:
    """Bootstrap Q from bandwidth and free-storage ratios against the
    configured system minimums."""
    if min_bandwidth <= 0 or min_storage <= 0:
        raise ValueError("system minimums must be positive")
    return (bandwidth / min_bandwidth + free_storage / min_storage) * 100.0


def average_q(table: Mapping[int, float]) -> float:
    if not table:
        return 0.0
    return sum(table.values()) / len(table)


def select_targets(table: Mapping[int, float], q_threshold: float) -> tuple[float, list[int]]:
    """Average Q plus the ids whose Q meets both the average and q_threshold,
    ordered by descending Q (ties: lower id)."""
    avg = average_q(table)
    eligible = [
        (-q, pid) for pid, q in table.items() if q >= avg and q >= q_threshold
    ]
    eligible.sort()
    return avg, [pid for _, pid in eligible]


def compute_reward(
    degree: float,
    bandwidth: float,
    free_storage: float,
    minimums: Sequence[float],
    weights: Sequence[float],
) -> float:
    """Reward for a peer that hosted a block, from its degree, bandwidth
    and free storage scaled by the system minimums and weights."""
    min_degree, min_bandwidth, min_storage = minimums
    if min_degree <= 0 or min_bandwidth <= 0 or min_storage <= 0:
        raise ValueError("system minimums must be positive")
    w1, w2, w3 = weights
    if abs(w1 + w2 + w3 - 1.0) > 1e-9:
        raise ValueError(f"reward weights must sum to 1, got {weights}")
    if not (w2 < w1 and w2 < w3):
        raise ValueError("bandwidth weight (second) must be the smallest")
    return (degree / (min_degree * w1) + bandwidth / (min_bandwidth * w2) + free_storage / (min_storage * w3)) * 100.0


def q_after_host(q: float, reward: float, learning_rate: float) -> float:
    return q + learning_rate * (reward - q)


def q_after_down(q: float, learning_rate: float) -> float:
    return q * (1.0 - learning_rate)


def update_q_values(
    table: Mapping[int, float],
    hosted: Mapping[int, float],
    down: Iterable[int],
    learning_rate: float,
) -> dict[int, float]:
    """New table: hosts move toward their reward, down peers decay, every
    other entry is untouched."""
    if not 0 < learning_rate < 1:
        raise ValueError("learning_rate must lie in (0, 1)")
    down_set = set(down)
    overlap = down_set & set(hosted)
    if overlap:
        raise ValueError(f"peers cannot be both hosts and down: {sorted(overlap)}")
    out = dict(table)
    for pid, reward in hosted.items():
        out[pid] = q_after_host(out.get(pid, 0.0), reward, learning_rate)
    for pid in down_set:
        if pid in out:
            out[pid] = q_after_down(out[pid], learning_rate)
    return out


def hash_recipients(table: Mapping[int, float]) -> list[int]:
    """Peers worth telling about a popular digest: Q at or above the table
    average, best first."""
    avg = average_q(table)
    picked = [(-q, pid) for pid, q in table.items() if q >= avg]
    picked.sort()
    return [pid for _, pid in picked]


def plan_distribution(
    created: Set[int],
    n_blocks: int,
    n_targets: int,
    rng: random.Random,
) -> tuple[list[int], list[int]]:
    """Choose block indices for a replication round with n_targets peers.

    Returns (primary, duplicate_pool): the i-th selected peer receives
    primary[i]; peers beyond len(primary) each receive a random pick from
    duplicate_pool.  For an unreplicated object up to n distinct indices
    are generated at random; for a partial one the missing indices are
    filled first and any spare peers get duplicates of this round's new
    blocks.
    """
    if n_targets <= 0:
        return [], []
    if not created:
        count = min(n_targets, n_blocks)
        primary = rng.sample(range(n_blocks), count)
        return primary, list(primary)
    missing = sorted(set(range(n_blocks)) - set(created))
    if not missing:
        return [], []
    if n_targets >= len(missing):
        return list(missing), list(missing)
    return missing[:n_targets], []


def choose_duplicate(
    pool: Sequence[int],
    held: Set[int],
    fallback: Set[int],
    rng: random.Random,
) -> int | None:
    """Pick a duplicate block index the target does not already hold."""
    options = [i for i in pool if i not in held]
    if not options:
        options = sorted(i for i in fallback if i not in held)
    if not options:
        return None
    return options[rng.randrange(len(options))]

"""Overlay graph generation and power-peer classification.

Nodes are joined by random attachment until the requested mean degree is
reached; attributes (bandwidth class, storage, CPU budget) are drawn from
the same seed so a (n, degree, seed) triple always yields a bit-identical
network.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

ORDINARY = "ordinary"
POWER = "power"

DEFAULT_BANDWIDTH_CLASSES: tuple[tuple[int, float], ...] = (
    (1000, 0.25),
    (2000, 0.25),
    (5000, 0.25),
    (10000, 0.25),
)


@dataclass(slots=True)
class NodeAttributes:
    """Static and slowly-changing per-node facts."""

    node_id: int
    bandwidth: int  # kbit/s
    storage_capacity: int  # kB of shared block space
    storage_free: int
    degree: int
    is_up: bool = True
    role: str = ORDINARY
    cpu_capacity: int = 10  # messages handled per tick


@dataclass
class OverlayGraph:
    nodes: dict[int, NodeAttributes]
    adjacency: dict[int, tuple[int, ...]]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def n_edges(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def mean_degree(self) -> float:
        if not self.nodes:
            return 0.0
        return 2.0 * self.n_edges() / len(self.nodes)


def generate_network(
    n_nodes: int,
    avg_degree: float,
    seed: int,
    *,
    bandwidth_classes: Iterable[tuple[int, float]] | None = None,
    storage_range: tuple[int, int] = (10_000, 100_000),
    cpu_capacity: int = 10,
) -> OverlayGraph:
    """Build a random overlay with the requested mean degree.

    Deterministic for a fixed seed.  Rejects mean degrees that no simple
    graph on n_nodes can realize.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if avg_degree < 0 or avg_degree > max(0, n_nodes - 1):
        raise ValueError(
            f"avg_degree {avg_degree} unrealizable for a simple graph on {n_nodes} nodes"
        )
    classes = tuple(bandwidth_classes or DEFAULT_BANDWIDTH_CLASSES)
    values = [c for c, _ in classes]
    weights = [w for _, w in classes]
    lo, hi = storage_range
    if lo < 1 or hi < lo:
        raise ValueError(f"bad storage range {storage_range}")

    rng = random.Random(seed)
    nodes: dict[int, NodeAttributes] = {}
    for nid in range(n_nodes):
        bw = rng.choices(values, weights=weights, k=1)[0]
        cap = rng.randint(lo, hi)
        nodes[nid] = NodeAttributes(
            node_id=nid,
            bandwidth=bw,
            storage_capacity=cap,
            storage_free=cap,
            degree=0,
            cpu_capacity=cpu_capacity,
        )

    target_edges = round(n_nodes * avg_degree / 2)
    max_edges = n_nodes * (n_nodes - 1) // 2
    target_edges = min(target_edges, max_edges)
    edges: set[tuple[int, int]] = set()
    if target_edges > 0.35 * max_edges:
        # dense request: enumerate pairs so sampling cannot stall
        all_pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
        edges = set(rng.sample(all_pairs, target_edges))
    else:
        while len(edges) < target_edges:
            i = rng.randrange(n_nodes)
            j = rng.randrange(n_nodes)
            if i == j:
                continue
            edges.add((i, j) if i < j else (j, i))

    neigh: dict[int, set[int]] = {nid: set() for nid in range(n_nodes)}
    for i, j in edges:
        neigh[i].add(j)
        neigh[j].add(i)
    adjacency = {nid: tuple(sorted(s)) for nid, s in neigh.items()}
    for nid, adj in adjacency.items():
        nodes[nid].degree = len(adj)
    return OverlayGraph(nodes=nodes, adjacency=adjacency)


def classify_power_peers(
    graph: OverlayGraph,
    min_degree: int,
    min_free_fraction: float,
    min_objects: int,
    initial_fraction: float,
    shared_objects: Mapping[int, int],
) -> set[int]:
    """Mark the best-connected qualifying nodes as power peers.

    A node qualifies with degree >= min_degree, free shared storage >=
    min_free_fraction of capacity, and at least min_objects distinct
    objects in its shared block folder.  At most initial_fraction of the
    network is selected, preferring higher degree (ties: lower id); if
    fewer qualify, all qualifiers are returned.  Roles are set in place.
    """
    if not 0 <= initial_fraction <= 1:
        raise ValueError("initial_fraction must lie in [0, 1]")
    qualifying = []
    for nid, attrs in graph.nodes.items():
        if attrs.degree < min_degree:
            continue
        if attrs.storage_capacity > 0 and attrs.storage_free < min_free_fraction * attrs.storage_capacity:
            continue
        if shared_objects.get(nid, 0) < min_objects:
            continue
        qualifying.append(nid)
    cap = round(initial_fraction * graph.n_nodes)
    qualifying.sort(key=lambda nid: (-graph.nodes[nid].degree, nid))
    chosen = set(qualifying[:cap]) if len(qualifying) > cap else set(qualifying)
    for nid, attrs in graph.nodes.items():
        attrs.role = POWER if nid in chosen else ORDINARY
    return chosen

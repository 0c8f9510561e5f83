"""Baseline protocol wiring: plain random walk and path replication.

Both baselines reuse the engine's walker mechanics with the power-peer
and dry/wet machinery switched off; the path-replication variant copies
the whole matched object into the shared space of every node the winning
walker traversed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import CannotFitError, NodeDirectories, ObjectCatalog, SharedEntry, evict_block


@dataclass(frozen=True, slots=True)
class Features:
    """Which protocol layers an engine run enables."""

    power: bool
    replication: str | None  # "qe", "path" or None
    hello: bool


def features_for_protocol(protocol: str) -> Features:
    if protocol == "proposed":
        return Features(power=True, replication="qe", hello=True)
    if protocol == "rw":
        return Features(power=False, replication=None, hello=False)
    if protocol == "rw-path":
        return Features(power=False, replication="path", hello=False)
    if protocol == "rw-qe":
        return Features(power=False, replication="qe", hello=True)
    raise ValueError(f"unknown protocol {protocol!r}")


def path_replication_targets(
    path: list[int],
    digest: str,
    directories,
) -> list[int]:
    """Nodes on the walker's path (origin through hit) that should receive
    a full shared copy: those not already holding one."""
    seen: set[int] = set()
    out: list[int] = []
    for nid in path:
        if nid in seen:
            continue
        seen.add(nid)
        if directories[nid].holds(digest, None):
            continue
        out.append(nid)
    return out


def place_full_copy(
    directories: NodeDirectories,
    popularity: dict,
    catalog: ObjectCatalog,
    digest: str,
    now: int,
) -> tuple[bool, int]:
    """Put a full shared copy of `digest` on one node, evicting as needed.

    Returns (placed, entries_evicted)."""
    meta = catalog.objects[digest]
    evicted = 0
    if directories.free_kb < meta.size_kb:
        try:
            evicted = len(evict_block(directories, popularity, meta.size_kb, now))
        except CannotFitError:
            return False, 0
    if directories.holds(digest, None):
        return False, evicted
    directories.add_shared(
        SharedEntry(
            digest=digest,
            block_index=None,
            size_kb=meta.size_kb,
            inserted_at=now,
            keywords=meta.keywords,
        )
    )
    return True, evicted

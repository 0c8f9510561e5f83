"""Object catalog, per-node shared directories, popularity and eviction.

Every node keeps two directories: FULL (complete private copies, never
matched by searches) and a shared block folder whose entries are matched
against query keywords.  Popularity is tracked per hosting node from the
download counters of the blocks it shares.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .topology import OverlayGraph

NOT_REPLICATED = "not_replicated"
PARTIAL = "partial"
FULL = "full"


class CannotFitError(RuntimeError):
    """Evicting every shared entry still cannot free the requested space."""


def digest_for(name: str, payload_seed: int, algo: str = "md5") -> str:
    """Stable 128-bit content digest for a simulated object."""
    material = f"{name}:{payload_seed}".encode()
    if algo == "md5":
        return hashlib.md5(material).hexdigest()
    if algo == "blake2b":
        return hashlib.blake2b(material, digest_size=16).hexdigest()
    raise ValueError(f"unsupported digest algorithm {algo!r}")


@dataclass(slots=True)
class ObjectMeta:
    """Catalog-side description of one object."""

    name: str
    digest: str
    keywords: frozenset[int]
    size_kb: int
    payload_seed: int
    created_indices: set[int] = field(default_factory=set)
    popularity_threshold_hit: bool = False

    @property
    def blocks_replicated(self) -> int:
        return len(self.created_indices)


@dataclass
class ObjectCatalog:
    objects: dict[str, ObjectMeta]
    n_blocks: int
    k_fragments: int
    block_size_kb: int

    def status(self, digest: str) -> str:
        created = len(self.objects[digest].created_indices)
        if created == 0:
            return NOT_REPLICATED
        if created < self.n_blocks:
            return PARTIAL
        return FULL

    def keywords_of(self, digest: str) -> frozenset[int]:
        return self.objects[digest].keywords


@dataclass(slots=True)
class SharedEntry:
    """One entry of a node's shared folder.

    block_index is None for a full-object shared copy (path-replication
    baseline); otherwise it names the erasure block held.
    """

    digest: str
    block_index: int | None
    size_kb: int
    inserted_at: int
    keywords: frozenset[int]
    download_count: int = 0


@dataclass(slots=True)
class PopularityEntry:
    """Per-node popularity state for one object whose blocks it hosts."""

    digest: str
    per_block_downloads: dict = field(default_factory=dict)
    popularity: float = 0.0
    last_update: int = 0


class NodeDirectories:
    """FULL directory plus shared block folder with a keyword index."""

    __slots__ = (
        "capacity_kb",
        "used_kb",
        "full",
        "entries",
        "digest_blocks",
        "keyword_index",
        "reservations",
        "received_total",
    )

    def __init__(self, capacity_kb: int):
        self.capacity_kb = capacity_kb
        self.used_kb = 0
        self.full: set[str] = set()
        self.entries: dict[tuple[str, int | None], SharedEntry] = {}
        self.digest_blocks: dict[str, set[int | None]] = {}
        self.keyword_index: dict[int, set[str]] = {}
        self.reservations: dict[str, int] = {}  # digest -> expiry time
        self.received_total = 0  # shared entries ever received (for availability)

    @property
    def free_kb(self) -> int:
        return self.capacity_kb - self.used_kb

    def block_count(self, digest: str) -> int:
        return len(self.digest_blocks.get(digest, ()))

    def holds(self, digest: str, block_index: int | None) -> bool:
        return (digest, block_index) in self.entries

    def held_indices(self, digest: str) -> set[int | None]:
        return set(self.digest_blocks.get(digest, ()))

    def add_shared(self, entry: SharedEntry) -> None:
        key = (entry.digest, entry.block_index)
        if key in self.entries:
            raise ValueError(f"duplicate shared entry {key}")
        if entry.size_kb > self.free_kb:
            raise CannotFitError(
                f"entry of {entry.size_kb} kB exceeds free space {self.free_kb} kB"
            )
        self.entries[key] = entry
        self.used_kb += entry.size_kb
        blocks = self.digest_blocks.setdefault(entry.digest, set())
        if not blocks:
            for kw in entry.keywords:
                self.keyword_index.setdefault(kw, set()).add(entry.digest)
        blocks.add(entry.block_index)
        self.received_total += 1

    def remove_shared(self, digest: str, block_index: int | None) -> SharedEntry:
        entry = self.entries.pop((digest, block_index))
        self.used_kb -= entry.size_kb
        blocks = self.digest_blocks[digest]
        blocks.discard(block_index)
        if not blocks:
            del self.digest_blocks[digest]
            for kw in entry.keywords:
                bucket = self.keyword_index.get(kw)
                if bucket is not None:
                    bucket.discard(digest)
                    if not bucket:
                        del self.keyword_index[kw]
        return entry

    def match(self, keywords: tuple[int, ...]) -> SharedEntry | None:
        """Lowest-digest, lowest-index shared entry whose object keywords
        contain every query keyword; None when nothing matches."""
        if not keywords:
            return None
        buckets = [self.keyword_index.get(kw) for kw in keywords]
        if any(b is None for b in buckets):
            return None
        candidates = set.intersection(*buckets) if len(buckets) > 1 else buckets[0]
        if not candidates:
            return None
        digest = min(candidates)
        idx = min(
            self.digest_blocks[digest],
            key=lambda i: -1 if i is None else i,
        )
        return self.entries[(digest, idx)]

    def eviction_order(self) -> list[SharedEntry]:
        # fewest downloads first, oldest (smallest insertion time) first on ties
        return sorted(
            self.entries.values(),
            key=lambda e: (
                e.download_count,
                e.inserted_at,
                e.digest,
                -1 if e.block_index is None else e.block_index,
            ),
        )

    def prune_expired_reservations(self, now: int) -> None:
        expired = [d for d, exp in self.reservations.items() if exp <= now]
        for d in expired:
            del self.reservations[d]


def evict_block(
    directories: NodeDirectories,
    popularity: dict[str, PopularityEntry],
    needed_kb: int,
    now: int,
) -> list[SharedEntry]:
    """Free shared space until needed_kb fits, least-valuable entries first.

    Raises CannotFitError when even a fully emptied folder would not fit.
    Popularity entries of objects that lose their last local block are
    dropped with them.
    """
    if needed_kb > directories.capacity_kb:
        raise CannotFitError(
            f"{needed_kb} kB can never fit in capacity {directories.capacity_kb} kB"
        )
    evicted: list[SharedEntry] = []
    if directories.free_kb >= needed_kb:
        return evicted
    for entry in directories.eviction_order():
        directories.remove_shared(entry.digest, entry.block_index)
        evicted.append(entry)
        if entry.digest not in directories.digest_blocks:
            popularity.pop(entry.digest, None)
        if directories.free_kb >= needed_kb:
            return evicted
    raise CannotFitError(f"could not free {needed_kb} kB")  # pragma: no cover


def update_popularity(
    entry: PopularityEntry,
    total_downloads_at_node: int,
    share_weight: float,
    decay_scale: float,
) -> float:
    """Refresh one object's popularity from this period's download counters.

    The retained term is ln(popularity / decay_scale) when that ratio
    exceeds one, zero otherwise.  With downloads the new value is
    (retained + share_weight * object's share of the node's downloads),
    scaled by ten; without downloads it drops to the retained term alone.
    Results are clamped at a zero minimum.
    """
    if share_weight <= 0 or decay_scale <= 0:
        raise ValueError("share_weight and decay_scale must be positive")
    object_total = sum(entry.per_block_downloads.values())
    if any(v < 0 for v in entry.per_block_downloads.values()):
        raise ValueError("negative block download counter")
    if total_downloads_at_node < object_total:
        raise ValueError(
            f"node-wide downloads {total_downloads_at_node} below object sum {object_total}"
        )
    ratio = entry.popularity / decay_scale
    decay = math.log(ratio) if ratio > 1 else 0.0
    if object_total == 0:
        value = max(0.0, decay)
    else:
        if total_downloads_at_node == 0:
            raise ValueError("zero total downloads with nonzero object downloads")
        value = max(0.0, (decay + share_weight * (object_total / total_downloads_at_node)) * 10.0)
    entry.popularity = value
    return value


def select_replication_candidates(
    popularity: Mapping[str, PopularityEntry],
    full_digests: Iterable[str],
    catalog: ObjectCatalog,
    popularity_threshold: float,
) -> list[str]:
    """Digests this node should replicate now: popular enough, full copy
    held locally, and not yet fully replicated network-wide."""
    full = set(full_digests)
    out = []
    for digest, entry in popularity.items():
        if entry.popularity < popularity_threshold:
            continue
        if digest not in full:
            continue
        if catalog.status(digest) == FULL:
            continue
        out.append(digest)
    out.sort()
    return out


def replication_shortfall(
    popularity: Mapping[str, PopularityEntry],
    full_digests: Iterable[str],
    popularity_threshold: float,
) -> list[str]:
    """Popular digests with no local full copy (hash-propagation cases)."""
    full = set(full_digests)
    return sorted(
        d for d, e in popularity.items() if e.popularity >= popularity_threshold and d not in full
    )


def seed_objects(
    graph: OverlayGraph,
    directories: Mapping[int, NodeDirectories],
    n_objects: int,
    keyword_pool_size: int,
    seed: int,
    *,
    object_size_kb: int = 8000,
    k_fragments: int = 8,
    n_blocks: int = 12,
    full_copies_per_object: int = 1,
    seed_fulls_on_librarians: bool = False,
    seeded_block_fraction: float = 0.5,
    initial_blocks_per_object: int = 4,
    librarian_fraction: float = 0.1,
    digest_algo: str = "md5",
) -> ObjectCatalog:
    """Create the object population and scatter the starting state.

    Each object receives a disjoint slice of the keyword pool, at least
    one FULL copy, and (for a seeded fraction) a handful of initial blocks
    concentrated on the best-connected "librarian" nodes so that searches
    can succeed before the first replication round.
    """
    if n_objects < 0:
        raise ValueError("n_objects must be >= 0")
    if n_objects and keyword_pool_size < n_objects:
        raise ValueError("keyword pool smaller than object count")
    block_size_kb = (object_size_kb + k_fragments - 1) // k_fragments
    catalog = ObjectCatalog(
        objects={}, n_blocks=n_blocks, k_fragments=k_fragments, block_size_kb=block_size_kb
    )
    if n_objects == 0:
        return catalog
    rng = random.Random(seed)
    kw_per_object = keyword_pool_size // n_objects
    permutation = rng.sample(range(keyword_pool_size), keyword_pool_size)

    n_nodes = graph.n_nodes
    by_degree = sorted(graph.nodes, key=lambda nid: (-graph.nodes[nid].degree, nid))
    n_librarians = max(1, round(librarian_fraction * n_nodes))
    librarians = by_degree[:n_librarians]

    def place_block(nid: int, meta: ObjectMeta, index: int, now: int = 0) -> bool:
        d = directories[nid]
        if d.holds(meta.digest, index) or d.block_count(meta.digest) >= 2:
            return False
        if d.free_kb < block_size_kb:
            return False
        d.add_shared(
            SharedEntry(
                digest=meta.digest,
                block_index=index,
                size_kb=block_size_kb,
                inserted_at=now,
                keywords=meta.keywords,
            )
        )
        meta.created_indices.add(index)
        return True

    metas: list[ObjectMeta] = []
    for i in range(n_objects):
        name = f"obj{i:05d}.dat"
        payload_seed = rng.getrandbits(48)
        digest = digest_for(name, payload_seed, digest_algo)
        kws = frozenset(permutation[i * kw_per_object : (i + 1) * kw_per_object])
        meta = ObjectMeta(
            name=name,
            digest=digest,
            keywords=kws,
            size_kb=object_size_kb,
            payload_seed=payload_seed,
        )
        catalog.objects[digest] = meta
        metas.append(meta)

    for meta in metas:
        holders: list[int] = []
        first = rng.randrange(n_nodes)
        holders.append(first)
        for _ in range(1, max(1, full_copies_per_object)):
            pool = librarians if seed_fulls_on_librarians else range(n_nodes)
            pick = pool[rng.randrange(len(pool))] if seed_fulls_on_librarians else rng.randrange(n_nodes)
            if pick not in holders:
                holders.append(pick)
        next_index = 0
        for nid in holders:
            directories[nid].full.add(meta.digest)
            if place_block(nid, meta, next_index):
                next_index += 1

    n_seeded = round(seeded_block_fraction * n_objects)
    seeded = rng.sample(metas, n_seeded) if n_seeded < n_objects else list(metas)
    for meta in seeded:
        count = min(initial_blocks_per_object, len(librarians))
        hosts = rng.sample(librarians, count)
        next_index = max(meta.created_indices) + 1 if meta.created_indices else 0
        for nid in hosts:
            if next_index >= n_blocks:
                break
            if place_block(nid, meta, next_index):
                next_index += 1

    for nid, d in directories.items():
        graph.nodes[nid].storage_free = d.free_kb
    return catalog

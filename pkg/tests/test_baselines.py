"""Protocol feature wiring and the path-replication baseline."""

from __future__ import annotations

import pytest

from p2psim.baselines import (
    Features,
    features_for_protocol,
    path_replication_targets,
    place_full_copy,
)
from p2psim.catalog import (
    NodeDirectories,
    ObjectCatalog,
    ObjectMeta,
    PopularityEntry,
    SharedEntry,
)


def test_feature_matrix():
    assert features_for_protocol("proposed") == Features(True, "qe", True)
    assert features_for_protocol("rw") == Features(False, None, False)
    assert features_for_protocol("rw-path") == Features(False, "path", False)
    assert features_for_protocol("rw-qe") == Features(False, "qe", True)
    with pytest.raises(ValueError):
        features_for_protocol("flooding")


def _catalog(digest="obj", size=40):
    meta = ObjectMeta(
        name=digest, digest=digest, keywords=frozenset({1}), size_kb=size, payload_seed=0
    )
    return ObjectCatalog(
        objects={digest: meta}, n_blocks=12, k_fragments=8, block_size_kb=5
    )


def test_path_targets_deduplicate_and_skip_holders():
    dirs = {nid: NodeDirectories(100) for nid in range(4)}
    dirs[2].add_shared(SharedEntry("obj", None, 10, 0, frozenset({1})))
    path = [0, 1, 2, 1, 3]
    assert path_replication_targets(path, "obj", dirs) == [0, 1, 3]


def test_place_full_copy_and_duplicate_guard():
    d = NodeDirectories(100)
    catalog = _catalog(size=40)
    placed, evicted = place_full_copy(d, {}, catalog, "obj", now=5)
    assert placed and evicted == 0
    assert d.holds("obj", None) and d.used_kb == 40
    placed, evicted = place_full_copy(d, {}, catalog, "obj", now=6)
    assert not placed and evicted == 0


def test_place_full_copy_evicts_for_space():
    d = NodeDirectories(100)
    pops = {}
    for i, digest in enumerate("abcdefgh"):
        d.add_shared(SharedEntry(digest, 0, 10, i, frozenset({9})))
        pops[digest] = PopularityEntry(digest)
    catalog = _catalog(size=60)
    placed, evicted = place_full_copy(d, pops, catalog, "obj", now=50)
    assert placed and evicted == 4  # freed 40 kB from the oldest entries
    assert d.holds("obj", None)
    assert d.used_kb == 100


def test_place_full_copy_cannot_fit():
    d = NodeDirectories(30)
    catalog = _catalog(size=40)
    placed, evicted = place_full_copy(d, {}, catalog, "obj", now=0)
    assert not placed and evicted == 0
    assert d.used_kb == 0

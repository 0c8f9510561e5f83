"""Shared fixtures: desk-profile run set, fast tiny scenarios, verdict lines."""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from p2psim.config import PROTOCOLS, ExperimentConfig, parse_config_file
from p2psim.engine import RunResult, run_experiment

REPO_ROOT = Path(__file__).resolve().parent.parent
DESK_CONFIG = REPO_ROOT / "configs" / "desk.cfg"

_ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def record_acceptance(num: int, name: str, ok: bool) -> bool:
    """Register one acceptance verdict; echoed in the terminal summary."""
    _ACCEPTANCE[num] = (name, ok)
    print(f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'}")
    return ok


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        name, ok = _ACCEPTANCE[num]
        terminalreporter.write_line(
            f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'}"
        )


BASE_TINY = dict(
    n_nodes=48,
    avg_degree=4.0,
    storage_min_kb=600,
    storage_max_kb=1800,
    power_min_degree=4,
    power_min_free_fraction=0.05,
    power_min_objects=1,
    power_initial_fraction=0.25,
    n_objects=8,
    keyword_pool_size=64,
    object_size_kb=320,
    full_copies_per_object=2,
    seed_fulls_on_librarians=True,
    seeded_block_fraction=1.0,
    initial_blocks_per_object=3,
    librarian_fraction=0.25,
    k_fragments=4,
    n_blocks=12,
    k_walkers=3,
    ttl=5,
    t_window=12,
    replication_period=24,
    area_min_queries=6,
    promotion_threshold=20.0,
    popularity_threshold=0.05,
    refresh_requests=25,
    min_degree=4,
    min_bandwidth=2000,
    min_storage=500,
    q_threshold=5.0,
    queries_per_node=12,
    mean_interval=4,
    churn_quantum=97,
    interval_queries=120,
    seed=7,
)


def tiny_config(**overrides) -> ExperimentConfig:
    """A sub-second scenario that still exercises every protocol layer:
    power peers exist, areas dry out, replication rounds fire, churn flips,
    and reservation contention occurs."""
    base = dict(BASE_TINY)
    base.update(overrides)
    return ExperimentConfig().with_overrides(**base)


def tiny_config_text(**overrides) -> str:
    """The tiny scenario rendered as a key=value config file."""
    base = dict(BASE_TINY)
    base.update(overrides)
    lines = []
    for key, value in base.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def desk_cfg() -> ExperimentConfig:
    return parse_config_file(DESK_CONFIG)


@pytest.fixture(scope="session")
def desk_runs(desk_cfg) -> dict[str, tuple[RunResult, float]]:
    """One run per protocol on the shipped desk profile, with wall times.

    Session-scoped: the end-to-end acceptance tests all share these runs.
    """
    out: dict[str, tuple[RunResult, float]] = {}
    for proto in PROTOCOLS:
        t0 = time.perf_counter()
        result = run_experiment(desk_cfg.with_overrides(protocol=proto))
        out[proto] = (result, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def desk_repeat(desk_cfg) -> tuple[RunResult, float]:
    """Second run of the flagship protocol with an identical seed."""
    t0 = time.perf_counter()
    result = run_experiment(desk_cfg.with_overrides(protocol="proposed"))
    return result, time.perf_counter() - t0

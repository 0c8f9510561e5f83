"""Experiment configuration: flat key=value files, defaults, validation.

Defaults describe the full-scale reference scenario; the shipped desk
profile overrides them down to a size that runs in well under a minute.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

PROTOCOLS = ("proposed", "rw", "rw-path", "rw-qe")
DIGEST_ALGOS = ("md5", "blake2b")


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    # network
    n_nodes: int = 10_000
    avg_degree: float = 3.5
    bandwidth_classes: tuple[tuple[int, float], ...] = (
        (1000, 0.25),
        (2000, 0.25),
        (5000, 0.25),
        (10000, 0.25),
    )
    storage_min_kb: int = 10_000
    storage_max_kb: int = 100_000
    cpu_capacity: int = 10

    # power-peer qualification
    power_min_degree: int = 7
    power_min_free_fraction: float = 0.30
    power_min_objects: int = 15
    power_initial_fraction: float = 0.20

    # objects and seeding
    n_objects: int = 1000
    keyword_pool_size: int = 30_000
    object_size_kb: int = 8000
    full_copies_per_object: int = 1
    seed_fulls_on_librarians: bool = False
    seeded_block_fraction: float = 0.5
    initial_blocks_per_object: int = 4
    librarian_fraction: float = 0.1
    digest_algo: str = "md5"

    # erasure coding
    k_fragments: int = 8
    n_blocks: int = 12

    # search
    k_walkers: int = 6
    ttl: int = 6
    query_keywords: int = 1

    # dry/wet machinery
    t_window: int = 200
    replication_period: int = 1000
    area_min_queries: int = 20
    dry_threshold: float = 0.3
    recovery_threshold: float = 0.6
    availability_threshold: float = 0.4
    green_quorum_percent: float = 80.0
    promotion_threshold: float = 50.0
    power_rank_weights: tuple[float, float, float] = (0.5, 0.25, 0.25)
    promotion_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    degree_cap: int = 20

    # popularity
    popularity_threshold: float = 0.5
    popularity_share_weight: float = 0.2
    popularity_decay_scale: float = 0.2
    refresh_requests: int = 100

    # q-learning replication
    learning_rate: float = 0.5
    reward_weights: tuple[float, float, float] = (0.4, 0.2, 0.4)
    min_degree: int = 2
    min_bandwidth: int = 1000
    min_storage: int = 10_000
    q_threshold: float = 100.0
    hello_refresh_periods: int = 10
    reservation_ttl_periods: int = 2

    # workload
    queries_per_node: int = 100
    mean_interval: int = 20
    churn_quantum: int = 50_000
    initial_up_fraction: float = 0.8
    interval_queries: int = 10_000

    # run
    protocol: str = "proposed"
    seed: int = 1

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        cfg = replace(self, **kwargs)
        validate(cfg)
        return cfg


def _parse_int(text: str) -> int:
    return int(text.replace("_", ""))


def _parse_float(text: str) -> float:
    return float(text)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_weights(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated weights")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _parse_classes(text: str) -> tuple[tuple[int, float], ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        value, _, prob = part.partition(":")
        out.append((_parse_int(value), float(prob)))
    if not out:
        raise ValueError("no bandwidth classes given")
    return tuple(out)


_PARSERS = {
    "n_nodes": _parse_int,
    "avg_degree": _parse_float,
    "bandwidth_classes": _parse_classes,
    "storage_min_kb": _parse_int,
    "storage_max_kb": _parse_int,
    "cpu_capacity": _parse_int,
    "power_min_degree": _parse_int,
    "power_min_free_fraction": _parse_float,
    "power_min_objects": _parse_int,
    "power_initial_fraction": _parse_float,
    "n_objects": _parse_int,
    "keyword_pool_size": _parse_int,
    "object_size_kb": _parse_int,
    "full_copies_per_object": _parse_int,
    "seed_fulls_on_librarians": _parse_bool,
    "seeded_block_fraction": _parse_float,
    "initial_blocks_per_object": _parse_int,
    "librarian_fraction": _parse_float,
    "digest_algo": str,
    "k_fragments": _parse_int,
    "n_blocks": _parse_int,
    "k_walkers": _parse_int,
    "ttl": _parse_int,
    "query_keywords": _parse_int,
    "t_window": _parse_int,
    "replication_period": _parse_int,
    "area_min_queries": _parse_int,
    "dry_threshold": _parse_float,
    "recovery_threshold": _parse_float,
    "availability_threshold": _parse_float,
    "green_quorum_percent": _parse_float,
    "promotion_threshold": _parse_float,
    "power_rank_weights": _parse_weights,
    "promotion_weights": _parse_weights,
    "degree_cap": _parse_int,
    "popularity_threshold": _parse_float,
    "popularity_share_weight": _parse_float,
    "popularity_decay_scale": _parse_float,
    "refresh_requests": _parse_int,
    "learning_rate": _parse_float,
    "reward_weights": _parse_weights,
    "min_degree": _parse_int,
    "min_bandwidth": _parse_int,
    "min_storage": _parse_int,
    "q_threshold": _parse_float,
    "hello_refresh_periods": _parse_int,
    "reservation_ttl_periods": _parse_int,
    "queries_per_node": _parse_int,
    "mean_interval": _parse_int,
    "churn_quantum": _parse_int,
    "initial_up_fraction": _parse_float,
    "interval_queries": _parse_int,
    "protocol": str,
    "seed": _parse_int,
}

assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse flat key=value lines (UTF-8, # comments) into a validated
    configuration."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", "expected key=value")
        parser = _PARSERS.get(key)
        if parser is None:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = parser(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(key, f"bad value {value!r}: {exc}") from None
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def parse_config_file(path: str | Path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _require(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigError(key, message)


def validate(cfg: ExperimentConfig) -> None:
    _require(cfg.n_nodes >= 1, "n_nodes", "must be >= 1")
    _require(0 <= cfg.avg_degree <= max(0, cfg.n_nodes - 1), "avg_degree",
             f"must lie in [0, {cfg.n_nodes - 1}] for a simple graph")
    _require(all(v > 0 for v, _ in cfg.bandwidth_classes), "bandwidth_classes",
             "class bandwidths must be positive")
    _require(abs(sum(p for _, p in cfg.bandwidth_classes) - 1.0) <= 1e-9,
             "bandwidth_classes", "class probabilities must sum to 1")
    _require(1 <= cfg.storage_min_kb <= cfg.storage_max_kb, "storage_min_kb",
             "need 1 <= storage_min_kb <= storage_max_kb")
    _require(cfg.cpu_capacity >= 1, "cpu_capacity", "must be >= 1")
    _require(cfg.power_min_degree >= 0, "power_min_degree", "must be >= 0")
    _require(0 <= cfg.power_min_free_fraction <= 1, "power_min_free_fraction",
             "must lie in [0, 1]")
    _require(cfg.power_min_objects >= 0, "power_min_objects", "must be >= 0")
    _require(0 <= cfg.power_initial_fraction <= 1, "power_initial_fraction",
             "must lie in [0, 1]")
    _require(cfg.n_objects >= 1, "n_objects", "must be >= 1")
    _require(cfg.keyword_pool_size >= cfg.n_objects, "keyword_pool_size",
             "must be >= n_objects")
    _require(cfg.object_size_kb >= 1, "object_size_kb", "must be >= 1")
    _require(cfg.full_copies_per_object >= 1, "full_copies_per_object", "must be >= 1")
    _require(0 <= cfg.seeded_block_fraction <= 1, "seeded_block_fraction",
             "must lie in [0, 1]")
    _require(cfg.initial_blocks_per_object >= 0, "initial_blocks_per_object",
             "must be >= 0")
    _require(0 < cfg.librarian_fraction <= 1, "librarian_fraction",
             "must lie in (0, 1]")
    _require(cfg.digest_algo in DIGEST_ALGOS, "digest_algo",
             f"must be one of {DIGEST_ALGOS}")
    _require(1 <= cfg.k_fragments <= cfg.n_blocks <= 255, "k_fragments",
             "need 1 <= k_fragments <= n_blocks <= 255")
    _require(cfg.k_walkers >= 1, "k_walkers", "must be >= 1")
    _require(cfg.ttl >= 1, "ttl", "must be >= 1")
    _require(cfg.query_keywords >= 1, "query_keywords", "must be >= 1")
    _require(cfg.t_window >= 1, "t_window", "must be >= 1")
    _require(cfg.replication_period > cfg.t_window, "replication_period",
             f"replication period {cfg.replication_period} must exceed t_window {cfg.t_window}")
    _require(cfg.area_min_queries >= 1, "area_min_queries", "must be >= 1")
    _require(0 < cfg.dry_threshold < 1, "dry_threshold", "must lie in (0, 1)")
    _require(0 < cfg.recovery_threshold <= 1, "recovery_threshold", "must lie in (0, 1]")
    _require(0 < cfg.availability_threshold < 1, "availability_threshold", "must lie in (0, 1)")
    _require(0 < cfg.green_quorum_percent <= 100, "green_quorum_percent", "must lie in (0, 100]")
    _require(0 <= cfg.promotion_threshold <= 100, "promotion_threshold",
             "must lie in [0, 100]")
    for key in ("power_rank_weights", "promotion_weights"):
        w = getattr(cfg, key)
        _require(abs(sum(w) - 1.0) <= 1e-9, key, "weights must sum to 1")
        _require(all(x >= 0 for x in w), key, "weights must be non-negative")
    _require(cfg.degree_cap >= 1, "degree_cap", "must be >= 1")
    _require(cfg.popularity_threshold >= 0, "popularity_threshold", "must be >= 0")
    _require(0 < cfg.popularity_share_weight <= 1, "popularity_share_weight", "must lie in (0, 1]")
    _require(0 < cfg.popularity_decay_scale <= 1, "popularity_decay_scale", "must lie in (0, 1]")
    _require(cfg.refresh_requests >= 1, "refresh_requests", "must be >= 1")
    _require(0 < cfg.learning_rate < 1, "learning_rate", "must lie in (0, 1)")
    rw = cfg.reward_weights
    _require(abs(sum(rw) - 1.0) <= 1e-9, "reward_weights", "weights must sum to 1")
    _require(rw[1] < rw[0] and rw[1] < rw[2], "reward_weights",
             "bandwidth weight (second) must be strictly smallest")
    _require(cfg.min_degree >= 1, "min_degree", "must be >= 1")
    _require(cfg.min_bandwidth >= 1, "min_bandwidth", "must be >= 1")
    _require(cfg.min_storage >= 1, "min_storage", "must be >= 1")
    _require(cfg.q_threshold >= 0, "q_threshold", "must be >= 0")
    _require(cfg.hello_refresh_periods >= 1, "hello_refresh_periods", "must be >= 1")
    _require(cfg.reservation_ttl_periods >= 1, "reservation_ttl_periods",
             "must be >= 1")
    _require(cfg.queries_per_node >= 0, "queries_per_node", "must be >= 0")
    _require(cfg.mean_interval >= 1, "mean_interval", "must be >= 1")
    _require(cfg.churn_quantum >= 1, "churn_quantum", "must be >= 1")
    _require(0 < cfg.initial_up_fraction <= 1, "initial_up_fraction",
             "must lie in (0, 1]")
    _require(cfg.interval_queries >= 1, "interval_queries", "must be >= 1")
    _require(cfg.protocol in PROTOCOLS, "protocol", f"must be one of {PROTOCOLS}")

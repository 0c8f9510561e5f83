"""Config parsing, defaults, and validation errors."""

from __future__ import annotations

import dataclasses

import pytest

from p2psim.config import (
    PROTOCOLS,
    ConfigError,
    ExperimentConfig,
    parse_config_file,
    parse_config_text,
    validate,
)

from conftest import DESK_CONFIG, REPO_ROOT


def test_defaults_are_valid():
    validate(ExperimentConfig())


def test_shipped_configs_parse():
    desk = parse_config_file(DESK_CONFIG)
    assert desk.n_nodes == 1000
    assert desk.protocol in PROTOCOLS
    full = parse_config_file(REPO_ROOT / "configs" / "full.cfg")
    assert full.n_nodes == 10_000
    assert full.n_objects == 1000


def test_parse_comments_blanks_underscores():
    cfg = parse_config_text(
        """
        # a comment line
        n_nodes = 1_000   # trailing comment

        seed=9
        """
    )
    assert cfg.n_nodes == 1000
    assert cfg.seed == 9


def test_parse_bandwidth_classes_and_weights():
    cfg = parse_config_text(
        "bandwidth_classes = 500:0.5, 1500:0.5\n"
        "power_rank_weights = 0.2, 0.3, 0.5\n"
    )
    assert cfg.bandwidth_classes == ((500, 0.5), (1500, 0.5))
    assert cfg.power_rank_weights == (0.2, 0.3, 0.5)


def test_parse_booleans():
    assert parse_config_text("seed_fulls_on_librarians = yes\n").seed_fulls_on_librarians
    assert not parse_config_text("seed_fulls_on_librarians = off\n").seed_fulls_on_librarians
    with pytest.raises(ConfigError):
        parse_config_text("seed_fulls_on_librarians = maybe\n")


def test_unknown_key_reports_key():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("no_such_knob = 3\n")
    assert exc.value.key == "no_such_knob"
    assert "no_such_knob" in str(exc.value)


def test_bad_value_reports_key_and_value():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("n_nodes = many\n")
    assert exc.value.key == "n_nodes"
    assert "many" in str(exc.value)


def test_missing_equals_sign():
    with pytest.raises(ConfigError):
        parse_config_text("just a stray line\n")


@pytest.mark.parametrize(
    "overrides,key",
    [
        ({"n_nodes": 0}, "n_nodes"),
        ({"n_nodes": 10, "avg_degree": 11.0}, "avg_degree"),
        ({"bandwidth_classes": ((100, 0.4), (200, 0.4))}, "bandwidth_classes"),
        ({"storage_min_kb": 50, "storage_max_kb": 10}, "storage_min_kb"),
        ({"keyword_pool_size": 5, "n_objects": 10}, "keyword_pool_size"),
        ({"k_fragments": 9, "n_blocks": 8}, "k_fragments"),
        ({"n_blocks": 300}, "k_fragments"),
        ({"t_window": 100, "replication_period": 100}, "replication_period"),
        ({"area_min_queries": 0}, "area_min_queries"),
        ({"dry_threshold": 0.0}, "dry_threshold"),
        ({"dry_threshold": 1.0}, "dry_threshold"),
        ({"recovery_threshold": 1.5}, "recovery_threshold"),
        ({"green_quorum_percent": 0.0}, "green_quorum_percent"),
        ({"power_rank_weights": (0.5, 0.5, 0.5)}, "power_rank_weights"),
        ({"learning_rate": 1.0}, "learning_rate"),
        ({"reward_weights": (0.2, 0.4, 0.4)}, "reward_weights"),
        ({"digest_algo": "sha999"}, "digest_algo"),
        ({"initial_up_fraction": 0.0}, "initial_up_fraction"),
        ({"interval_queries": 0}, "interval_queries"),
        ({"protocol": "flood"}, "protocol"),
        ({"librarian_fraction": 0.0}, "librarian_fraction"),
        ({"reservation_ttl_periods": 0}, "reservation_ttl_periods"),
    ],
)
def test_validation_rejects(overrides, key):
    cfg = dataclasses.replace(ExperimentConfig(), **overrides)
    with pytest.raises(ConfigError) as exc:
        validate(cfg)
    assert exc.value.key == key


def test_with_overrides_validates():
    cfg = ExperimentConfig()
    assert cfg.with_overrides(seed=5).seed == 5
    with pytest.raises(ConfigError):
        cfg.with_overrides(ttl=0)


def test_replication_period_must_exceed_window_example():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("t_window = 300\nreplication_period = 200\n")
    assert exc.value.key == "replication_period"

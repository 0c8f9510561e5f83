"""Figure rendering: comparison plots as static image files + per-figure CSVs.

Every figure is backed by a sibling ``.csv`` holding exactly the numbers
drawn, so the images are reproducible from the metrics stream alone.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import MetricsRecord  # noqa: E402

log = logging.getLogger(__name__)

# protocol -> display style, in stable drawing order
_STYLES = {
    "proposed": {"color": "tab:blue", "marker": "o"},
    "rw": {"color": "tab:orange", "marker": "s"},
    "rw-path": {"color": "tab:green", "marker": "^"},
    "rw-qe": {"color": "tab:red", "marker": "d"},
}


def _style(protocol: str) -> dict:
    return _STYLES.get(protocol, {"color": "tab:gray", "marker": "x"})


def _common_length(results: Mapping[str, Sequence[MetricsRecord]]) -> int:
    lengths = {name: len(recs) for name, recs in results.items()}
    n = min(lengths.values())
    if len(set(lengths.values())) > 1:
        log.warning(
            "interval counts differ across protocols (%s); truncating to %d",
            lengths,
            n,
        )
    return n


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.6f}" if isinstance(v, float) else str(v) for v in row]
            )


def _comparison_figure(
    results: Mapping[str, Sequence[MetricsRecord]],
    out_dir: Path,
    stem: str,
    value,
    ylabel: str,
    title: str,
) -> list[Path]:
    n = _common_length(results)
    protocols = [p for p in _STYLES if p in results]
    protocols += [p for p in results if p not in _STYLES]
    intervals = list(range(1, n + 1))
    series = {p: [value(r) for r in list(results[p])[:n]] for p in protocols}

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for p in protocols:
        st = _style(p)
        ax.plot(intervals, series[p], label=p, lw=1.6, ms=4, **st)
    ax.set_xlabel("run interval")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()

    png = out_dir / f"{stem}.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)

    csv_path = out_dir / f"{stem}.csv"
    rows = [[iv] + [series[p][i] for p in protocols] for i, iv in enumerate(intervals)]
    _write_csv(csv_path, ["interval"] + protocols, rows)
    return [png, csv_path]


def fig_success_rate(
    results: Mapping[str, Sequence[MetricsRecord]], out_dir: Path
) -> list[Path]:
    return _comparison_figure(
        results,
        out_dir,
        "fig_success_rate",
        lambda r: r.success_rate,
        "query success rate",
        "Query success rate per interval",
    )


def fig_messages_per_query(
    results: Mapping[str, Sequence[MetricsRecord]], out_dir: Path
) -> list[Path]:
    return _comparison_figure(
        results,
        out_dir,
        "fig_messages_per_query",
        lambda r: r.messages_per_query,
        "search messages per query",
        "Search cost per query per interval",
    )


def fig_queries_finished(
    results: Mapping[str, Sequence[MetricsRecord]], out_dir: Path
) -> list[Path]:
    """Cumulative percentage of issued queries answered successfully."""

    def rows_for(recs: Sequence[MetricsRecord]) -> list[float]:
        out, hits, issued = [], 0, 0
        for r in recs:
            hits += r.hits
            issued += r.queries_issued
            out.append(100.0 * hits / issued if issued else 0.0)
        return out

    n = _common_length(results)
    protocols = [p for p in _STYLES if p in results]
    protocols += [p for p in results if p not in _STYLES]
    intervals = list(range(1, n + 1))
    series = {p: rows_for(list(results[p])[:n]) for p in protocols}

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for p in protocols:
        st = _style(p)
        ax.plot(intervals, series[p], label=p, lw=1.6, ms=4, **st)
    ax.set_xlabel("run interval")
    ax.set_ylabel("queries finished (%)")
    ax.set_title("Cumulative share of queries answered")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()

    png = out_dir / "fig_queries_finished.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)

    csv_path = out_dir / "fig_queries_finished.csv"
    rows = [[iv] + [series[p][i] for p in protocols] for i, iv in enumerate(intervals)]
    _write_csv(csv_path, ["interval"] + protocols, rows)
    return [png, csv_path]


def fig_hit_sources(
    results: Mapping[str, Sequence[MetricsRecord]], out_dir: Path
) -> list[Path]:
    """Stacked per-interval success split by the role of the answering node.

    The two stacked components sum to the interval's total success rate.
    """
    name = "proposed" if "proposed" in results else next(iter(results))
    recs = list(results[name])
    intervals = list(range(1, len(recs) + 1))
    nb = [r.hits_via_neighbors / r.queries_issued if r.queries_issued else 0.0 for r in recs]
    pp = [r.hits_via_power_peers / r.queries_issued if r.queries_issued else 0.0 for r in recs]

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar(intervals, nb, label="via ordinary neighbors", color="tab:green")
    ax.bar(intervals, pp, bottom=nb, label="via power peers", color="tab:purple")
    ax.set_xlabel("run interval")
    ax.set_ylabel("success rate by answering role")
    ax.set_title(f"Hit attribution by node role ({name})")
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()

    png = out_dir / "fig_hit_sources.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)

    csv_path = out_dir / "fig_hit_sources.csv"
    rows = [
        [iv, nb[i], pp[i], nb[i] + pp[i]]
        for i, iv in enumerate(intervals)
    ]
    _write_csv(
        csv_path,
        ["interval", "via_neighbors_rate", "via_power_peers_rate", "success_rate"],
        rows,
    )
    return [png, csv_path]


def render_report(
    results: Mapping[str, Sequence[MetricsRecord]], out_dir: str | Path
) -> list[Path]:
    """Render all four report figures (plus data CSVs) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    written += fig_success_rate(results, out)
    written += fig_hit_sources(results, out)
    written += fig_messages_per_query(results, out)
    written += fig_queries_finished(results, out)
    return written

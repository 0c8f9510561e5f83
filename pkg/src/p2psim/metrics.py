"""Interval metrics records and delimited output."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable

CSV_HEADER = (
    "run_id,queries_issued,hits,failures,success_rate,messages_total,"
    "messages_per_query,hits_via_neighbors,hits_via_power_peers,"
    "replicas_created,blocks_evicted,nodes_dry,nodes_wet"
)


@dataclass(slots=True)
class MetricsRecord:
    """Aggregated outcome of one run interval (a fixed quantum of queries)."""

    run_id: int
    queries_issued: int
    hits: int
    failures: int
    messages_total: int
    search_messages: int
    hits_via_neighbors: int
    hits_via_power_peers: int
    replicas_created: int
    blocks_evicted: int
    nodes_dry: int
    nodes_wet: int

    @property
    def success_rate(self) -> float:
        if self.queries_issued == 0:
            return 0.0
        return self.hits / self.queries_issued

    @property
    def messages_per_query(self) -> float:
        """Search (walk) messages per issued query.

        Control traffic — table bootstrap, promotion, replication — is part
        of ``messages_total`` but not of the per-query search cost.
        """
        if self.queries_issued == 0:
            return 0.0
        return self.search_messages / self.queries_issued

    def check(self) -> None:
        assert self.queries_issued >= 0 and self.hits >= 0 and self.failures >= 0
        assert self.hits + self.failures == self.queries_issued
        assert self.hits_via_neighbors + self.hits_via_power_peers == self.hits


def format_real(x: float) -> str:
    """Four decimal places, half-up (0.42857 -> '0.4286')."""
    return str(Decimal(repr(x)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


def record_row(rec: MetricsRecord) -> list[str]:
    return [
        str(rec.run_id),
        str(rec.queries_issued),
        str(rec.hits),
        str(rec.failures),
        format_real(rec.success_rate),
        str(rec.messages_total),
        format_real(rec.messages_per_query),
        str(rec.hits_via_neighbors),
        str(rec.hits_via_power_peers),
        str(rec.replicas_created),
        str(rec.blocks_evicted),
        str(rec.nodes_dry),
        str(rec.nodes_wet),
    ]


def metrics_csv_text(records: Iterable[MetricsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for rec in records:
        rec.check()
        writer.writerow(record_row(rec))
    return buf.getvalue()


def write_metrics_csv(records: Iterable[MetricsRecord], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(metrics_csv_text(records), encoding="utf-8")
    return path

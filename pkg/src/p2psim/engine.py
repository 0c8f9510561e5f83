"""Deterministic discrete-event engine driving search, churn, replication.

One tick is one simulated second and every walker hop costs one tick and
one message.  All randomness flows from per-concern generators derived
from the configured seed (workload, churn, protocol, topology, seeding),
so a fixed seed yields bit-identical metrics and the workload stays
paired across protocol variants: liveness and query streams evolve
identically no matter which protocol features are switched on.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

from . import qerasure
from .baselines import Features, features_for_protocol, path_replication_targets, place_full_copy
from .catalog import (
    CannotFitError,
    FULL,
    NodeDirectories,
    ObjectCatalog,
    PopularityEntry,
    SharedEntry,
    evict_block,
    replication_shortfall,
    seed_objects,
    select_replication_candidates,
    update_popularity,
)
from .config import ExperimentConfig, validate
from .discovery import (
    DRY,
    RESUME_NEIGHBORS,
    WET,
    AreaState,
    GuestRecord,
    PowerPeerEntry,
    availability_ratio,
    check_return_to_wet,
    neighbor_utility,
    plan_promotion,
    rank_power_peers,
)
from .metrics import MetricsRecord
from .topology import POWER, OverlayGraph, classify_power_peers, generate_network

# event kinds, processed in (time, seq) order
EV_QUERY = 0
EV_WALKER = 1
EV_WINDOW = 2
EV_PERIOD = 3
EV_REPLICATE = 4
EV_HELLO = 5

NEIGHBOR_MODE = 0
POWER_MODE = 1


@dataclass(slots=True)
class Walker:
    ttl_remaining: int
    first_hop: int
    visited: set
    path: list


@dataclass(slots=True)
class Query:
    qid: int
    origin: int
    keywords: tuple
    mode: int
    interval: int
    outstanding: int = 0
    messages: int = 0
    done: bool = False
    walkers: list = field(default_factory=list)


@dataclass(slots=True)
class Node:
    attrs: object
    neighbors: tuple
    adj_pos: dict
    directories: NodeDirectories
    area: AreaState
    power_table: dict
    qtable: dict
    guests: dict
    popularity: dict
    window_downloads: int = 0
    requests_since_refresh: int = 0
    cpu_tick: int = -1
    cpu_count: int = 0


@dataclass
class Audit:
    """Always-on counters the invariant suite inspects after a run."""

    per_query_messages: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)  # (qid, hit) in finish order
    power_route_violations: int = 0
    reservation_violations: int = 0
    reservation_skips: int = 0
    churn_flips: list = field(default_factory=list)  # (up_before, up_after)
    first_replication_interval: int | None = None
    skipped_slots: int = 0  # query slots lost because the node was down
    max_blocks_one_host: int = 0
    enter_dry: int = 0
    resumes: int = 0
    declared_wet: int = 0
    promotions: int = 0


@dataclass
class RunResult:
    records: list
    summary: dict
    audit: Audit


class Simulation:
    """One experiment run; construct, call run() once, read the result."""

    def __init__(self, cfg: ExperimentConfig, features: Features | None = None):
        validate(cfg)
        self.cfg = cfg
        self.features = features or features_for_protocol(cfg.protocol)
        self._ran = False

        self.rng_protocol = random.Random(f"{cfg.seed}/protocol")
        self.rng_churn = random.Random(f"{cfg.seed}/churn")
        rng_workload = random.Random(f"{cfg.seed}/workload")

        self.graph: OverlayGraph = generate_network(
            cfg.n_nodes,
            cfg.avg_degree,
            cfg.seed,
            bandwidth_classes=cfg.bandwidth_classes,
            storage_range=(cfg.storage_min_kb, cfg.storage_max_kb),
            cpu_capacity=cfg.cpu_capacity,
        )
        directories = {
            nid: NodeDirectories(attrs.storage_capacity)
            for nid, attrs in self.graph.nodes.items()
        }
        self.catalog: ObjectCatalog = seed_objects(
            self.graph,
            directories,
            cfg.n_objects,
            cfg.keyword_pool_size,
            cfg.seed + 1,
            object_size_kb=cfg.object_size_kb,
            k_fragments=cfg.k_fragments,
            n_blocks=cfg.n_blocks,
            full_copies_per_object=cfg.full_copies_per_object,
            seed_fulls_on_librarians=cfg.seed_fulls_on_librarians,
            seeded_block_fraction=cfg.seeded_block_fraction,
            initial_blocks_per_object=cfg.initial_blocks_per_object,
            librarian_fraction=cfg.librarian_fraction,
            digest_algo=cfg.digest_algo,
        )

        if self.features.power:
            power = classify_power_peers(
                self.graph,
                cfg.power_min_degree,
                cfg.power_min_free_fraction,
                cfg.power_min_objects,
                cfg.power_initial_fraction,
                {nid: len(d.digest_blocks) for nid, d in directories.items()},
            )
        else:
            power = set()
        self._power_list: tuple = tuple(sorted(power))

        self.nodes: list[Node] = []
        for nid in range(cfg.n_nodes):
            adj = self.graph.adjacency[nid]
            node = Node(
                attrs=self.graph.nodes[nid],
                neighbors=adj,
                adj_pos={nb: i for i, nb in enumerate(adj)},
                directories=directories[nid],
                area=AreaState(),
                power_table={},
                qtable={},
                guests={},
                popularity={},
            )
            if self.features.replication == "qe":
                for digest in node.directories.digest_blocks:
                    node.popularity[digest] = PopularityEntry(digest)
            self.nodes.append(node)

        # initial liveness
        n_down = cfg.n_nodes - round(cfg.initial_up_fraction * cfg.n_nodes)
        for nid in self.rng_churn.sample(range(cfg.n_nodes), n_down):
            self.nodes[nid].attrs.is_up = False

        # paired workload: jitters then per-query keyword draws
        jitters = [rng_workload.randrange(cfg.mean_interval) for _ in range(cfg.n_nodes)]
        self._workload: list[list[tuple]] = []
        kw_count = min(cfg.query_keywords, cfg.keyword_pool_size)
        for _ in range(cfg.n_nodes):
            per_node = [
                tuple(rng_workload.sample(range(cfg.keyword_pool_size), kw_count))
                for _ in range(cfg.queries_per_node)
            ]
            self._workload.append(per_node)

        # upper bound on interval count; down nodes lose their slots, so the
        # realized count is derived from issued_total at the end of the run
        self.total_slots = cfg.n_nodes * cfg.queries_per_node
        self.max_intervals = max(1, math.ceil(self.total_slots / cfg.interval_queries)) \
            if self.total_slots else 0
        size = max(1, self.max_intervals)
        self.iv_queries = [0] * size
        self.iv_hits = [0] * size
        self.iv_fail = [0] * size
        self.iv_qmsgs = [0] * size
        self.iv_omsgs = [0] * size
        self.iv_nb = [0] * size
        self.iv_pp = [0] * size
        self.iv_repl = [0] * size
        self.iv_evict = [0] * size
        self.iv_snap: dict[int, tuple[int, int]] = {}

        self.audit = Audit()
        self.now = 0
        self.issued_total = 0
        self.finished_total = 0
        self.walkers_in_flight = 0
        self._pending_streams = cfg.n_nodes if cfg.queries_per_node else 0
        self._finished = self._pending_streams == 0
        self._queries: dict[int, Query] = {}
        self._next_qid = 0
        self._memo: dict[int, int] = {}
        self._period_index = 0
        self._propagated: set = set()
        self._bw_cap = max(v for v, _ in cfg.bandwidth_classes)

        self._heap: list = []
        self._seq = 0
        for nid in range(cfg.n_nodes):
            if cfg.queries_per_node > 0:
                self._push(jitters[nid], EV_QUERY, nid, 0)
        if self.features.hello:
            for nid in range(cfg.n_nodes):
                self._push(nid % cfg.mean_interval, EV_HELLO, nid)
        if self.features.power or self.features.replication == "qe":
            self._push(cfg.t_window, EV_WINDOW)
        if self.features.replication == "qe":
            self._push(cfg.replication_period, EV_PERIOD)

    # -- plumbing ---------------------------------------------------------

    def _push(self, time: int, kind: int, a=0, b=0, c=0, d=0) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (time, self._seq, kind, a, b, c, d))

    def _interval_now(self) -> int:
        if self.max_intervals == 0:
            return 0
        return min(self.issued_total // self.cfg.interval_queries, self.max_intervals - 1)

    def _charge_overhead(self, count: int = 1) -> None:
        self.iv_omsgs[self._interval_now()] += count

    # -- main loop --------------------------------------------------------

    def run(self) -> RunResult:
        if self._ran:
            raise RuntimeError("Simulation.run() may only be called once")
        self._ran = True
        heap = self._heap
        while heap and not self._finished:
            time_, _seq, kind, a, b, c, d = heapq.heappop(heap)
            self.now = time_
            if kind == EV_WALKER:
                self._deliver_walker(a, b, c, d)
            elif kind == EV_QUERY:
                self._query_event(a, b)
            elif kind == EV_WINDOW:
                self._window_tick()
            elif kind == EV_PERIOD:
                self._period_tick()
            elif kind == EV_REPLICATE:
                self._replication_round(a, b)
            elif kind == EV_HELLO:
                self._hello_round(a)
        return self._finalize()

    def _finalize(self) -> RunResult:
        n_out = math.ceil(self.issued_total / self.cfg.interval_queries)
        for idx in range(n_out):
            if idx not in self.iv_snap:
                self._snapshot(idx)
        records = []
        for idx in range(n_out):
            dry, wet = self.iv_snap[idx]
            records.append(
                MetricsRecord(
                    run_id=idx + 1,
                    queries_issued=self.iv_queries[idx],
                    hits=self.iv_hits[idx],
                    failures=self.iv_fail[idx],
                    messages_total=self.iv_qmsgs[idx] + self.iv_omsgs[idx],
                    search_messages=self.iv_qmsgs[idx],
                    hits_via_neighbors=self.iv_nb[idx],
                    hits_via_power_peers=self.iv_pp[idx],
                    replicas_created=self.iv_repl[idx],
                    blocks_evicted=self.iv_evict[idx],
                    nodes_dry=dry,
                    nodes_wet=wet,
                )
            )
        self.audit.max_blocks_one_host = self._max_blocks_one_host()
        hits = sum(self.iv_hits)
        summary = {
            "protocol": self.cfg.protocol,
            "seed": self.cfg.seed,
            "n_nodes": self.cfg.n_nodes,
            "n_objects": self.cfg.n_objects,
            "power_peers": len(self._power_list),
            "intervals": n_out,
            "queries_issued": self.issued_total,
            "hits": hits,
            "failures": sum(self.iv_fail),
            "success_rate": hits / self.issued_total if self.issued_total else 0.0,
            "messages_total": sum(self.iv_qmsgs) + sum(self.iv_omsgs),
            "replicas_created": sum(self.iv_repl),
            "blocks_evicted": sum(self.iv_evict),
            "skipped_slots": self.audit.skipped_slots,
        }
        return RunResult(records=records, summary=summary, audit=self.audit)

    def _snapshot(self, idx: int) -> None:
        dry = sum(1 for node in self.nodes if node.area.status == DRY)
        self.iv_snap[idx] = (dry, len(self.nodes) - dry)

    def _max_blocks_one_host(self) -> int:
        worst = 0
        for node in self.nodes:
            for blocks in node.directories.digest_blocks.values():
                count = sum(1 for b in blocks if b is not None)
                if count > worst:
                    worst = count
        return worst

    # -- workload ---------------------------------------------------------

    def _query_event(self, nid: int, qnum: int) -> None:
        node = self.nodes[nid]
        if node.attrs.is_up:
            self._issue_query(nid, self._workload[nid][qnum])
        else:
            # an offline node does not queue searches: the slot is lost
            self.audit.skipped_slots += 1
        if qnum + 1 < self.cfg.queries_per_node:
            self._push(self.now + self.cfg.mean_interval, EV_QUERY, nid, qnum + 1)
        else:
            self._pending_streams -= 1
            if self._pending_streams == 0 and self.finished_total == self.issued_total:
                self._finished = True

    def _issue_query(self, nid: int, keywords: tuple) -> None:
        cfg = self.cfg
        self.issued_total += 1
        interval = (self.issued_total - 1) // cfg.interval_queries
        qid = self._next_qid
        self._next_qid += 1
        node = self.nodes[nid]

        entry = node.directories.match(keywords)
        if entry is not None:
            q = Query(qid, nid, keywords, NEIGHBOR_MODE, interval)
            self._queries[qid] = q
            self._finish(q, hit=True, via_power=node.attrs.role == POWER)
        else:
            area = node.area
            use_power = (
                self.features.power
                and area.status == DRY
                and not area.suspended
                and bool(node.power_table)
            )
            if use_power:
                ranked = rank_power_peers(
                    node.power_table,
                    area.power_routed_queries,
                    cfg.power_rank_weights,
                    cfg.degree_cap,
                    self._bw_cap,
                )
                targets = ranked[: cfg.k_walkers]
                area.power_routed_queries += 1
                mode = POWER_MODE
            else:
                pool = (
                    area.green
                    if self.features.power and area.suspended and area.green
                    else node.neighbors
                )
                if len(pool) <= cfg.k_walkers:
                    targets = list(pool)
                else:
                    targets = self.rng_protocol.sample(pool, cfg.k_walkers)
                mode = NEIGHBOR_MODE
            q = Query(qid, nid, keywords, mode, interval)
            self._queries[qid] = q
            if not targets:
                self._finish(q, hit=False, via_power=False)
            else:
                track = self.features.power and mode == NEIGHBOR_MODE
                mask = 0
                for widx, target in enumerate(targets):
                    walker = Walker(
                        ttl_remaining=cfg.ttl - 1,
                        first_hop=target,
                        visited={nid, target},
                        path=[nid],
                    )
                    q.walkers.append(walker)
                    q.messages += 1
                    q.outstanding += 1
                    if mode == NEIGHBOR_MODE:
                        mask |= 1 << node.adj_pos[target]
                        if track:
                            stats = node.area.window.get(target)
                            if stats is None:
                                node.area.window[target] = stats = [0, 0]
                            stats[0] += 1
                    self.walkers_in_flight += 1
                    self._push(self.now + 1, EV_WALKER, qid, widx, target, nid)
                if mask:
                    self._memo[qid * cfg.n_nodes + nid] = mask

        # interval boundary and churn bookkeeping
        if self.issued_total % cfg.interval_queries == 0:
            self._snapshot(self.issued_total // cfg.interval_queries - 1)
        if self.issued_total % cfg.churn_quantum == 0:
            self._churn_flip()

    def _finish(self, q: Query, hit: bool, via_power: bool) -> None:
        q.done = True
        if q.mode == NEIGHBOR_MODE and q.walkers:
            if self.features.power:
                # per-query outcome feeds the dry/wet judgement; the
                # per-neighbor window only ranks individual links
                area = self.nodes[q.origin].area
                area.win_queries += 1
                if hit:
                    area.win_hits += 1
            base = q.qid * self.cfg.n_nodes
            memo = self._memo
            for walker in q.walkers:
                for nid in walker.visited:
                    memo.pop(base + nid, None)
        idx = q.interval
        self.iv_queries[idx] += 1
        self.iv_qmsgs[idx] += q.messages
        if hit:
            self.iv_hits[idx] += 1
            if via_power:
                self.iv_pp[idx] += 1
            else:
                self.iv_nb[idx] += 1
        else:
            self.iv_fail[idx] += 1
        self.audit.per_query_messages.append(q.messages)
        self.audit.outcomes.append((q.qid, hit))
        self.finished_total += 1
        if self._pending_streams == 0 and self.finished_total == self.issued_total:
            self._finished = True

    # -- walkers ----------------------------------------------------------

    def _deliver_walker(self, qid: int, widx: int, target: int, sender: int) -> None:
        self.walkers_in_flight -= 1
        q = self._queries.get(qid)
        if q is None or q.done:
            return
        node = self.nodes[target]
        walker = q.walkers[widx]
        if not node.attrs.is_up:
            self._walker_died(q)
            return
        if node.cpu_tick != self.now:
            node.cpu_tick = self.now
            node.cpu_count = 0
        attrs = node.attrs
        if (
            q.mode == POWER_MODE
            and attrs.role == POWER
            and node.cpu_count >= attrs.cpu_capacity
        ):
            self._redirect(q, widx, walker, target)
            return
        node.cpu_count += 1
        walker.path.append(target)
        walker.visited.add(target)
        if self.features.replication == "qe":
            node.requests_since_refresh += 1
            if node.requests_since_refresh >= self.cfg.refresh_requests:
                self._refresh_popularity(node)

        entry = node.directories.match(q.keywords)
        if entry is not None:
            self._register_hit(q, walker, node, entry)
            return
        if walker.ttl_remaining <= 0:
            self._walker_died(q)
            return
        if q.mode == POWER_MODE:
            nxt = self._next_power_hop(walker, target)
            if nxt is not None and self.nodes[nxt].attrs.role != POWER:
                self.audit.power_route_violations += 1  # pragma: no cover
        else:
            nxt = self._next_neighbor_hop(q, walker, node, target, sender)
        if nxt is None:
            self._walker_died(q)
            return
        walker.ttl_remaining -= 1
        q.messages += 1
        self.walkers_in_flight += 1
        self._push(self.now + 1, EV_WALKER, qid, widx, nxt, target)

    def _next_neighbor_hop(
        self, q: Query, walker: Walker, node: Node, nid: int, sender: int
    ) -> int | None:
        # never forward to a neighbor known to have received this query:
        # the sender and everyone this node already forwarded it to.
        key = q.qid * self.cfg.n_nodes + nid
        mask = self._memo.get(key, 0)
        spos = node.adj_pos.get(sender)
        if spos is not None:
            mask |= 1 << spos
        adj = node.neighbors
        candidates = [adj[i] for i in range(len(adj)) if not mask >> i & 1]
        if not candidates:
            self._memo[key] = mask
            return None
        pick = candidates[self.rng_protocol.randrange(len(candidates))]
        self._memo[key] = mask | (1 << node.adj_pos[pick])
        return pick

    def _next_power_hop(self, walker: Walker, nid: int) -> int | None:
        registry = self._power_list
        n_reg = len(registry)
        if n_reg <= 1:
            return None
        visited = walker.visited
        rng = self.rng_protocol
        for _ in range(16):
            pick = registry[rng.randrange(n_reg)]
            if pick != nid and pick not in visited:
                return pick
        remaining = [p for p in registry if p != nid and p not in visited]
        if not remaining:
            return None
        return remaining[rng.randrange(len(remaining))]

    def _redirect(self, q: Query, widx: int, walker: Walker, target: int) -> None:
        """Overloaded power peer: pass the walker to the origin's
        next-best power peer, spending one hop of TTL."""
        walker.visited.add(target)
        if walker.ttl_remaining <= 0:
            self._walker_died(q)
            return
        origin = self.nodes[q.origin]
        ranked = rank_power_peers(
            origin.power_table,
            origin.area.power_routed_queries,
            self.cfg.power_rank_weights,
            self.cfg.degree_cap,
            self._bw_cap,
        )
        nxt = None
        try:
            pos = ranked.index(target)
        except ValueError:
            pos = -1
        for pid in ranked[pos + 1 :] if pos >= 0 else []:
            if pid not in walker.visited:
                nxt = pid
                break
        if nxt is None:
            self._walker_died(q)
            return
        if self.nodes[nxt].attrs.role != POWER:  # pragma: no cover - defensive
            self.audit.power_route_violations += 1
        walker.ttl_remaining -= 1
        q.messages += 1
        self.walkers_in_flight += 1
        self._push(self.now + 1, EV_WALKER, q.qid, widx, nxt, target)

    def _walker_died(self, q: Query) -> None:
        q.outstanding -= 1
        if q.outstanding <= 0 and not q.done:
            self._finish(q, hit=False, via_power=False)

    def _register_hit(self, q: Query, walker: Walker, node: Node, entry) -> None:
        entry.download_count += 1
        if self.features.replication == "qe":
            pe = node.popularity.get(entry.digest)
            if pe is None:
                pe = node.popularity[entry.digest] = PopularityEntry(entry.digest)
            key = entry.block_index
            pe.per_block_downloads[key] = pe.per_block_downloads.get(key, 0) + 1
            node.window_downloads += 1
        origin = self.nodes[q.origin]
        hitter = node.attrs.node_id
        via_power = node.attrs.role == POWER
        if self.features.power and hitter != q.origin:
            if q.mode == NEIGHBOR_MODE:
                stats = origin.area.window.get(walker.first_hop)
                if stats is not None:
                    stats[1] += 1
            if node.attrs.role == POWER:
                tbl = origin.power_table
                e = tbl.get(hitter)
                if e is None:
                    tbl[hitter] = e = PowerPeerEntry(
                        hitter, 0, node.attrs.degree, node.attrs.bandwidth
                    )
                e.hits += 1
        if self.features.replication == "path":
            self._path_replicate(walker.path, entry.digest)
        self._finish(q, hit=True, via_power=via_power)

    # -- plain-walk path replication --------------------------------------

    def _path_replicate(self, path: list, digest: str) -> None:
        directories = {nid: self.nodes[nid].directories for nid in path}
        for nid in path_replication_targets(path, digest, directories):
            node = self.nodes[nid]
            if not node.attrs.is_up:
                continue
            placed, evicted = place_full_copy(
                node.directories, node.popularity, self.catalog, digest, self.now
            )
            idx = self._interval_now()
            self.iv_evict[idx] += evicted
            if placed:
                self.iv_repl[idx] += 1
                self._charge_overhead(1)
                node.attrs.storage_free = node.directories.free_kb

    # -- periodic machinery ------------------------------------------------

    def _window_tick(self) -> None:
        qe = self.features.replication == "qe"
        for node in self.nodes:
            if not node.attrs.is_up:
                continue
            if qe:
                self._refresh_popularity(node)
            if self.features.power:
                self._area_tick(node)
        if not self._finished:
            self._push(self.now + self.cfg.t_window, EV_WINDOW)

    def _refresh_popularity(self, node: Node) -> None:
        total = node.window_downloads
        for digest in sorted(node.popularity):
            entry = node.popularity[digest]
            update_popularity(entry, total, self.cfg.popularity_share_weight, self.cfg.popularity_decay_scale)
            entry.last_update = self.now
            entry.per_block_downloads = {}
        node.window_downloads = 0
        node.requests_since_refresh = 0

    def _area_tick(self, node: Node) -> None:
        cfg = self.cfg
        area = node.area
        # Judge the area only once enough walk outcomes have accumulated;
        # sparse windows carry over so a handful of unlucky walks cannot
        # flip a node's classification.
        if area.win_queries >= cfg.area_min_queries:
            rate = area.win_hits / area.win_queries
            area.window = {}
            area.win_queries = 0
            area.win_hits = 0
            if area.status == WET:
                if rate < cfg.dry_threshold:
                    self._enter_dry(node)
            elif area.suspended:
                if rate >= cfg.recovery_threshold:
                    self._declare_wet(node, prune=True)
                elif rate < cfg.dry_threshold:
                    self._enter_dry(node)  # area degraded again; power routing resumes
            else:
                if rate >= cfg.dry_threshold:
                    self._declare_wet(node, prune=False)
        if area.status == DRY and not area.suspended:
            if not area.promoted and node.power_table:
                self._promote(node)
            if area.promoted:
                self._check_green(node)

    def _enter_dry(self, node: Node) -> None:
        self._dissolve_promotions(node, prune=False)
        node.area.status = DRY
        node.area.suspended = False
        self.audit.enter_dry += 1
        if node.power_table:
            self._promote(node)

    def _declare_wet(self, node: Node, prune: bool) -> None:
        self._dissolve_promotions(node, prune=prune)
        node.area.status = WET
        self.audit.declared_wet += 1

    def _dissolve_promotions(self, node: Node, prune: bool) -> None:
        nid = node.attrs.node_id
        avail_min = self.cfg.availability_threshold
        for guest, pp_id in node.area.promoted.items():
            pp = self.nodes[pp_id]
            rec = pp.guests.get((nid, guest))
            if prune and rec is not None:
                delta_recv = (
                    self.nodes[guest].directories.received_total - rec.received_baseline
                )
                if availability_ratio(delta_recv, rec.files_at_promotion) < avail_min / 2:
                    # guest contributed too little: evict it from the table and
                    # forget its promotion baseline
                    pp.qtable.pop(guest, None)
                    pp.guests.pop((nid, guest), None)
        node.area.promoted = {}
        node.area.green = ()
        node.area.suspended = False

    def _promote(self, node: Node) -> None:
        cfg = self.cfg
        nid = node.attrs.node_id
        ranked = rank_power_peers(
            node.power_table,
            node.area.power_routed_queries,
            cfg.power_rank_weights,
            cfg.degree_cap,
            self._bw_cap,
        )
        selected: dict[int, float] = {}
        for nb in node.neighbors:
            self._charge_overhead(1)  # attribute probe
            peer = self.nodes[nb]
            if not peer.attrs.is_up or peer.attrs.role == POWER:
                continue
            cap = peer.attrs.storage_capacity
            free_norm = peer.directories.free_kb / cap if cap else 1.0
            degree_norm = min(1.0, peer.attrs.degree / cfg.degree_cap)
            bandwidth_norm = min(1.0, peer.attrs.bandwidth / self._bw_cap)
            utility = neighbor_utility(free_norm, degree_norm, bandwidth_norm, cfg.promotion_weights)
            if utility > cfg.promotion_threshold:
                selected[nb] = utility
        from .discovery import plan_promotion

        plan = plan_promotion(selected, ranked)
        promoted: dict[int, int] = {}
        for pp_id, guests in plan.items():
            self._charge_overhead(1)  # assignment notice
            pp = self.nodes[pp_id]
            for guest in guests:
                if guest not in pp.qtable:
                    pp.qtable[guest] = 100.0
                # a guest hosted continuously keeps its original promotion
                # baseline, so availability does not reset each cycle
                if (nid, guest) not in pp.guests:
                    gdir = self.nodes[guest].directories
                    pp.guests[(nid, guest)] = GuestRecord(
                        sponsor=nid,
                        guest=guest,
                        files_at_promotion=len(gdir.entries),
                        received_baseline=gdir.received_total,
                    )
                promoted[guest] = pp_id
        node.area.promoted = promoted
        if promoted:
            self.audit.promotions += 1

    def _check_green(self, node: Node) -> None:
        cfg = self.cfg
        nid = node.attrs.node_id
        availability: dict[int, float] = {}
        hosts = set()
        for guest, pp_id in node.area.promoted.items():
            hosts.add(pp_id)
            rec = self.nodes[pp_id].guests.get((nid, guest))
            if rec is None:
                availability[guest] = 0.0
                continue
            delta_recv = (
                self.nodes[guest].directories.received_total - rec.received_baseline
            )
            availability[guest] = availability_ratio(delta_recv, rec.files_at_promotion)
        self._charge_overhead(len(hosts))
        decision, green = check_return_to_wet(
            availability,
            cfg.availability_threshold,
            cfg.green_quorum_percent / 100.0,
            resumed=False,
            window_rate=None,
            recovery_threshold=cfg.recovery_threshold,
        )
        if decision == RESUME_NEIGHBORS:
            node.area.suspended = True
            node.area.green = tuple(g for g in green if g in node.adj_pos)
            node.area.window = {}  # measure the restored links from scratch
            node.area.win_queries = 0
            node.area.win_hits = 0
            self.audit.resumes += 1

    def _period_tick(self) -> None:
        self._period_index += 1
        cfg = self.cfg
        self._propagated = set()
        for node in self.nodes:
            if not node.attrs.is_up or not node.popularity:
                continue
            nid = node.attrs.node_id
            local = select_replication_candidates(
                node.popularity, node.directories.full, self.catalog, cfg.popularity_threshold
            )
            for digest in local:
                self.catalog.objects[digest].popularity_threshold_hit = True
                self._replication_round(nid, digest)
            for digest in replication_shortfall(
                node.popularity, node.directories.full, cfg.popularity_threshold
            ):
                self.catalog.objects[digest].popularity_threshold_hit = True
                self._propagate_hash(node, digest)
        if self._period_index % cfg.hello_refresh_periods == 0:
            for node in self.nodes:
                if node.attrs.is_up:
                    self._hello_round(node.attrs.node_id)
        if not self._finished:
            self._push(self.now + cfg.replication_period, EV_PERIOD)

    def _propagate_hash(self, node: Node, digest: str) -> None:
        recipients = qerasure.hash_recipients(node.qtable)
        if not recipients:
            return
        self._charge_overhead(len(recipients))
        if self.catalog.status(digest) == FULL:
            return
        for pid in recipients:
            peer = self.nodes[pid]
            if not peer.attrs.is_up:
                continue
            if digest not in peer.directories.full:
                continue
            if (pid, digest) in self._propagated:
                continue
            self._propagated.add((pid, digest))
            self._push(self.now + 1, EV_REPLICATE, pid, digest)

    def _replication_round(self, nid: int, digest: str) -> None:
        cfg = self.cfg
        node = self.nodes[nid]
        if not node.attrs.is_up:
            return
        meta = self.catalog.objects.get(digest)
        if meta is None or digest not in node.directories.full:
            return
        if self.catalog.status(digest) == FULL:
            return
        table = node.qtable
        if not table:
            return
        _avg, eligible = qerasure.select_targets(table, cfg.q_threshold)
        reserve_until = self.now + cfg.reservation_ttl_periods * cfg.replication_period
        survivors: list[int] = []
        for pid in eligible:
            if pid == nid:
                continue
            self._charge_overhead(1)  # existence/reservation probe
            peer = self.nodes[pid]
            if not peer.attrs.is_up:
                table[pid] = qerasure.q_after_down(table[pid], cfg.learning_rate)
                continue
            pdir = peer.directories
            pdir.prune_expired_reservations(self.now)
            if pdir.block_count(digest) >= 2:
                continue
            if digest in pdir.reservations:
                if pdir.reservations[digest] > self.now:
                    self.audit.reservation_skips += 1
                    continue
                # expired entries were pruned above; reaching here means the
                # reservation bookkeeping let a stale lock leak through
                self.audit.reservation_violations += 1  # pragma: no cover
            pdir.reservations[digest] = reserve_until
            survivors.append(pid)
        if not survivors:
            return
        primary, pool = qerasure.plan_distribution(
            meta.created_indices, cfg.n_blocks, len(survivors), self.rng_protocol
        )
        if not primary:
            return
        hosted: list[int] = []
        for i, pid in enumerate(survivors):
            peer = self.nodes[pid]
            if not peer.attrs.is_up:
                # went down mid-round: failed placement, zero-reward decay
                table[pid] = qerasure.q_after_down(table[pid], cfg.learning_rate)
                continue
            if i < len(primary):
                index = primary[i]
            else:
                held = {
                    b for b in peer.directories.held_indices(digest) if b is not None
                }
                index = qerasure.choose_duplicate(
                    pool, held, meta.created_indices, self.rng_protocol
                )
                if index is None:
                    continue
            if self._place_block(peer, meta, index):
                hosted.append(pid)
        for pid in hosted:
            self._charge_overhead(1)  # reward signal
            peer = self.nodes[pid]
            reward = qerasure.compute_reward(
                peer.attrs.degree,
                peer.attrs.bandwidth,
                peer.directories.free_kb,
                (cfg.min_degree, cfg.min_bandwidth, cfg.min_storage),
                cfg.reward_weights,
            )
            table[pid] = qerasure.q_after_host(table.get(pid, 0.0), reward, cfg.learning_rate)

    def _place_block(self, peer: Node, meta, index: int) -> bool:
        pdir = peer.directories
        digest = meta.digest
        if pdir.holds(digest, index) or pdir.block_count(digest) >= 2:
            return False
        bsz = self.catalog.block_size_kb
        idx = self._interval_now()
        if pdir.free_kb < bsz:
            try:
                evicted = evict_block(pdir, peer.popularity, bsz, self.now)
            except CannotFitError:
                return False
            self.iv_evict[idx] += len(evicted)
        pdir.add_shared(
            SharedEntry(
                digest=digest,
                block_index=index,
                size_kb=bsz,
                inserted_at=self.now,
                keywords=meta.keywords,
            )
        )
        meta.created_indices.add(index)
        if self.features.replication == "qe" and digest not in peer.popularity:
            peer.popularity[digest] = PopularityEntry(digest)
        peer.attrs.storage_free = pdir.free_kb
        self._charge_overhead(1)  # block transfer
        self.iv_repl[idx] += 1
        if self.audit.first_replication_interval is None:
            self.audit.first_replication_interval = idx + 1
        return True

    # -- q-table bootstrap -------------------------------------------------

    def _hello_round(self, nid: int) -> None:
        cfg = self.cfg
        node = self.nodes[nid]
        if not node.attrs.is_up or not self.features.hello:
            return
        knows: dict[int, set] = {}
        received: set[int] = set()
        rng = self.rng_protocol
        for _ in range(cfg.k_walkers):
            cur = nid
            ttl = cfg.ttl
            while ttl > 0:
                known = knows.setdefault(cur, set())
                adj = self.nodes[cur].neighbors
                candidates = [nb for nb in adj if nb not in known]
                if not candidates:
                    break
                pick = candidates[rng.randrange(len(candidates))]
                known.add(pick)
                knows.setdefault(pick, set()).add(cur)
                self._charge_overhead(1)
                ttl -= 1
                if not self.nodes[pick].attrs.is_up:
                    break
                received.add(pick)
                cur = pick
        for pid in sorted(received - {nid}):
            if pid in node.qtable:
                continue
            peer = self.nodes[pid]
            node.qtable[pid] = qerasure.initial_q_value(
                peer.attrs.bandwidth,
                peer.directories.free_kb,
                cfg.min_bandwidth,
                cfg.min_storage,
            )

    # -- churn -------------------------------------------------------------

    def _churn_flip(self) -> None:
        downs = [n.attrs.node_id for n in self.nodes if not n.attrs.is_up]
        ups = [n.attrs.node_id for n in self.nodes if n.attrs.is_up]
        up_before = len(ups)
        k = len(downs) // 2
        if k > 0:
            to_up = self.rng_churn.sample(downs, k)
            to_down = self.rng_churn.sample(ups, k)
            for nid in to_up:
                self.nodes[nid].attrs.is_up = True
                if self.features.hello and not self.nodes[nid].qtable:
                    self._push(self.now + 1, EV_HELLO, nid)
            for nid in to_down:
                self.nodes[nid].attrs.is_up = False
        up_after = sum(1 for n in self.nodes if n.attrs.is_up)
        self.audit.churn_flips.append((up_before, up_after))


def run_experiment(cfg: ExperimentConfig, features: Features | None = None) -> RunResult:
    return Simulation(cfg, features=features).run()

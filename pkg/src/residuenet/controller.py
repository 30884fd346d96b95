"""Centralised load balancer: data collection, flow classification, decision
making and edge-only route changes.

Runs inside the simulation clock as periodic stats-poll callbacks.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .dataplane import Simulation
from .errors import MigrationRejected, RouteMismatch
from .residue import RouteId
from .topology import (Path, Topology, enumerate_equal_length_paths, is_core_link,
                       path_route_fits, route_id_for_path)
from .traffic import FlowSpec

log = logging.getLogger(__name__)


class FlowClass(str, enum.Enum):
    ELEPHANT = "elephant"
    MICE = "mice"
    UNCLASSIFIED = "unclassified"


@dataclass
class ControllerConfig:
    poll: float = 1.0
    theta_e: float = 0.1
    theta_m: float = 0.01
    k: int = 3
    alpha: float = 0.5
    t_rule: float = 0.0005
    t_drain: float = 0.010
    auto_balance: bool = False
    # >0 emulates a non-atomic source-rule swap: old rule removed, new one
    # installed this many seconds later
    blackhole: float = 0.0

    def __post_init__(self):
        if self.poll <= 0:
            raise ValueError("poll interval must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 <= self.theta_m < self.theta_e:
            raise ValueError("need 0 <= theta_m < theta_e")
        if self.t_rule < 0 or self.t_drain < 0 or self.blackhole < 0:
            raise ValueError("rule timings must be non-negative")


@dataclass
class FlowRecord:
    id: str
    spec: FlowSpec
    path: Path
    route: RouteId
    cls: FlowClass = FlowClass.UNCLASSIFIED
    ewma_rate: float = 0.0
    consecutive_over: int = 0
    consecutive_under: int = 0
    packets_seen: int = 0
    busy_until: float = float("-inf")


@dataclass(frozen=True)
class LinkStats:
    link: tuple  # (node, egress port)
    bytes_this_poll: int
    utilization: float


@dataclass(frozen=True)
class StatsSnapshot:
    time: float
    links: dict
    flow_bytes: dict  # flow -> (bytes, packets) this poll

    def utilization(self) -> dict:
        return {k: v.utilization for k, v in self.links.items()}


@dataclass(frozen=True)
class Conflict:
    link: tuple
    elephants: tuple
    mice: tuple


@dataclass(frozen=True)
class MigrationAction:
    flow: str
    old_path: Path
    new_path: Path
    old_route: RouteId
    new_route: RouteId
    decided_at: float
    dest_rule_at: float
    src_rule_at: float
    drain_until: float
    blackhole: float = 0.0

    @property
    def src_active_at(self) -> float:
        return self.src_rule_at + self.blackhole


@dataclass(frozen=True)
class PollRecord:
    time: float
    classes: dict
    ewma: dict
    conflicts: tuple
    utilization: dict


@dataclass
class MigrationRecord:
    action: MigrationAction
    drops_at_decision: int
    dropped_during_window: Optional[int] = None


def update_ewma(prev: float, window_rate: float, alpha: float) -> float:
    return alpha * window_rate + (1 - alpha) * prev


def link_utilization(nbytes: int, capacity: float, window: float) -> float:
    return min(1.0, nbytes * 8 / (capacity * window))


def classify_flow(record: FlowRecord, min_path_capacity: float,
                  config: ControllerConfig = ControllerConfig()) -> FlowClass:
    """Threshold classifier with K-poll confirmation and hysteresis.

    Updates the record's counters and class in place and returns the class.
    """
    rate = record.ewma_rate
    hi = config.theta_e * min_path_capacity
    if rate >= hi:
        record.consecutive_over += 1
    else:
        record.consecutive_over = 0
    if rate < hi / 2:
        record.consecutive_under += 1
    else:
        record.consecutive_under = 0

    mice = rate <= config.theta_m * min_path_capacity and record.packets_seen >= 1
    if record.cls is FlowClass.ELEPHANT:
        if record.consecutive_under >= config.k:
            record.cls = FlowClass.MICE if mice else FlowClass.UNCLASSIFIED
    elif record.consecutive_over >= config.k:
        record.cls = FlowClass.ELEPHANT
    elif mice:
        record.cls = FlowClass.MICE
    else:
        record.cls = FlowClass.UNCLASSIFIED
    return record.cls


def balanceable_links(path: Path, topology: Topology) -> list[tuple]:
    """Directed core-to-core links of a path.

    Edge uplinks and downlinks are common to every path between the same
    pair of edges, so a migration can never move a flow off them.
    """
    return [(h.node, h.port) for h in topology.path_hops(path) if is_core_link(topology, h)]


def detect_conflicts(flows: Iterable[FlowRecord], topology: Topology) -> list[Conflict]:
    """Balanceable links carrying at least one elephant and one mouse."""
    eleph: dict[tuple, list] = {}
    mice: dict[tuple, list] = {}
    for r in flows:
        if r.cls is FlowClass.ELEPHANT:
            target = eleph
        elif r.cls is FlowClass.MICE:
            target = mice
        else:
            continue
        for link in balanceable_links(r.path, topology):
            target.setdefault(link, []).append(r.id)
    return [Conflict(link, tuple(sorted(eleph[link])), tuple(sorted(mice[link])))
            for link in sorted(set(eleph) & set(mice))]


def plan_migration(record: FlowRecord, new_path: Path, topology: Topology, now: float,
                   config: ControllerConfig = ControllerConfig()) -> MigrationAction:
    dest = now + config.t_rule
    src = now + 2 * config.t_rule
    return MigrationAction(
        flow=record.id, old_path=record.path, new_path=new_path,
        old_route=record.route, new_route=route_id_for_path(new_path, topology),
        decided_at=now, dest_rule_at=dest, src_rule_at=src,
        drain_until=src + config.blackhole + config.t_drain, blackhole=config.blackhole)


def decide_migrations(conflicts: Iterable[Conflict], flows: Mapping[str, FlowRecord],
                      stats, topology: Topology, *, now: float = 0.0,
                      config: ControllerConfig = ControllerConfig()) -> list[MigrationAction]:
    """For each elephant on a conflicted link pick the equal-length path that
    carries no mice and has the lowest peak utilisation.

    ``stats`` maps link -> utilisation (or is a :class:`StatsSnapshot`).
    Candidates are already in modulus order, so ties resolve to the
    lexicographically smallest path.  Mice are never moved.
    """
    util = stats.utilization() if isinstance(stats, StatsSnapshot) else dict(stats)
    mice_links = set()
    for r in flows.values():
        if r.cls is FlowClass.MICE:
            mice_links.update(balanceable_links(r.path, topology))

    actions, seen = [], set()
    for c in conflicts:
        for fid in c.elephants:
            if fid in seen:
                continue
            rec = flows[fid]
            if rec.cls is not FlowClass.ELEPHANT:
                continue
            best, best_key = None, None
            cands = enumerate_equal_length_paths(topology, rec.path.src_edge,
                                                 rec.path.dst_edge, rec.path)
            for i, p in enumerate(cands):
                links = balanceable_links(p, topology)
                if mice_links.intersection(links) or not path_route_fits(p, topology):
                    continue
                key = (max((util.get(l, 0.0) for l in links), default=0.0), i)
                if best_key is None or key < best_key:
                    best, best_key = p, key
            if best is None:
                log.info("no mice-free alternative for %s", fid)
                continue
            seen.add(fid)
            actions.append(plan_migration(rec, best, topology, now, config))
    return actions


def execute_migration(action: MigrationAction, sim: Simulation, on_switch=None) -> list[tuple]:
    """Schedule the edge rule changes for a migration (make-before-break).

    Destination restore rule first, then the source rewrite, then removal of
    the old restore rule once the old path has drained.  Core switches are
    never touched.  Returns the scheduled ``(time, node, op, table)`` list.
    """
    topo = sim.topology
    if action.new_path == action.old_path:
        raise MigrationRejected(f"flow {action.flow} is already on {action.new_path}")
    expected = route_id_for_path(action.new_path, topo)
    if action.new_route != expected:
        raise RouteMismatch(f"route {action.new_route} does not encode {action.new_path} "
                            f"(expected {expected})")
    flow, old, new = action.flow, action.old_path, action.new_path
    same_route = action.new_route == action.old_route
    plan = []

    if not same_route:
        sim.at(action.dest_rule_at, lambda now: sim.install_restore_rule(
            flow, new, action.new_route, cause="migrate"))
        plan.append((action.dest_rule_at, new.dst_edge, "install", "restore"))

    def switch(now):
        sim.install_source_rule(flow, new, action.new_route, cause="migrate")
        if on_switch is not None:
            on_switch(action)

    if action.blackhole > 0:
        sim.at(action.src_rule_at, lambda now: sim.remove_source_rule(
            flow, old.src_edge, action.old_route, cause="migrate"))
        plan.append((action.src_rule_at, old.src_edge, "remove", "source"))
    sim.at(action.src_active_at, switch)
    plan.append((action.src_active_at, new.src_edge, "install", "source"))

    if not same_route:
        sim.at(action.drain_until, lambda now: sim.remove_restore_rule(
            flow, old.dst_edge, action.old_route, cause="migrate"))
        plan.append((action.drain_until, old.dst_edge, "remove", "restore"))
    return plan


class Controller:
    """Owns the flow table and drives polls and migrations for one simulation."""

    def __init__(self, sim: Simulation, config: Optional[ControllerConfig] = None):
        self.sim = sim
        self.topology = sim.topology
        self.config = config or ControllerConfig()
        self.records: dict[str, FlowRecord] = {}
        self.poll_log: list[PollRecord] = []
        self.migrations: list[MigrationRecord] = []
        self._specs = {f.id: f for f in sim.flows}
        self._started = False

    def register(self, flow: str, path: Path, reverse_path: Optional[Path] = None) -> FlowRecord:
        route = self.sim.register(flow, path, reverse_path)
        rec = FlowRecord(flow, self._specs[flow], path, route)
        self.records[flow] = rec
        return rec

    def start(self):
        """Schedule the periodic stats poll (first poll one interval in)."""
        if not self._started:
            self._started = True
            self._schedule_poll(1)

    def _schedule_poll(self, n):
        t = n * self.config.poll
        if t <= self.sim.duration:
            self.sim.at(t, lambda now: self._on_poll(now, n))

    def _on_poll(self, now, n):
        self.poll(now)
        self._schedule_poll(n + 1)

    def min_path_capacity(self, path: Path) -> float:
        return min(h.link.capacity for h in self.topology.path_hops(path))

    def collect_stats(self, now: float) -> StatsSnapshot:
        window = self.config.poll
        raw = self.sim.take_link_bytes()
        links = {}
        for h in self.sim.queue_hops:
            key = (h.node, h.port)
            links[key] = LinkStats(key, raw[key], link_utilization(raw[key], h.link.capacity, window))
        counts = self.sim.take_flow_counts()
        for fid, rec in self.records.items():
            nbytes, npkts = counts[fid]
            rec.ewma_rate = update_ewma(rec.ewma_rate, nbytes * 8 / window, self.config.alpha)
            rec.packets_seen += npkts
        return StatsSnapshot(now, links, counts)

    def poll(self, now: float):
        snap = self.collect_stats(now)
        for rec in self.records.values():
            classify_flow(rec, self.min_path_capacity(rec.path), self.config)
        conflicts = detect_conflicts(self.records.values(), self.topology)
        self.poll_log.append(PollRecord(
            now, {f: r.cls for f, r in self.records.items()},
            {f: r.ewma_rate for f, r in self.records.items()},
            tuple(conflicts), snap.utilization()))
        if self.config.auto_balance and conflicts:
            for action in decide_migrations(conflicts, self.records, snap, self.topology,
                                            now=now, config=self.config):
                # a flow mid-migration keeps its plan until the drain completes
                if self.records[action.flow].busy_until <= now:
                    self._execute(action)

    def migrate(self, flow: str, new_path: Path, now: float) -> MigrationAction:
        """Scripted migration decided at ``now``."""
        rec = self.records[flow]
        action = plan_migration(rec, new_path, self.topology, now, self.config)
        self._execute(action)
        return action

    def _execute(self, action: MigrationAction):
        rec = self.records[action.flow]
        execute_migration(action, self.sim, on_switch=self._switched)
        rec.busy_until = action.drain_until
        self.migrations.append(MigrationRecord(
            action, self.sim.attributable_drops()[action.flow]))
        log.info("migrating %s %s -> %s at %.6f", action.flow, action.old_path.label(),
                 action.new_path.label(), action.decided_at)

    def _switched(self, action: MigrationAction):
        rec = self.records[action.flow]
        rec.path = action.new_path
        rec.route = action.new_route

    def finalize(self):
        """Attribute unmatched/misroute drops to migrations.

        Each migration owns the flow's drops from its decision until the
        flow's next migration (or the end of the run); outside migrations
        these causes are zero in a consistently provisioned scenario.
        """
        totals = self.sim.attributable_drops()
        by_flow: dict[str, list] = {}
        for m in self.migrations:
            by_flow.setdefault(m.action.flow, []).append(m)
        for ms in by_flow.values():
            for cur, nxt in zip(ms, ms[1:] + [None]):
                end = nxt.drops_at_decision if nxt else totals[cur.action.flow]
                cur.dropped_during_window = end - cur.drops_at_decision

"""Discrete-event data plane: edge rewrite rules, modulo-forwarding cores and
drop-tail FIFO ports.

The per-packet work runs inside an engine (compiled or pure Python, see
``_backend``); :class:`Simulation` compiles the topology into the engine's
flat tables, owns the rule tables' change log and interleaves control-plane
callbacks with packet events on one ``(time, order)`` clock.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

from ._backend import engine_class
from ._pykernel import (CORE, DATA, DELIVER, DROP_DROPTAIL, DROP_MISROUTE, DROP_UNMATCHED,
                        EDGE, EMITTED, FORWARD, HOST, N_CAUSES, PROBE_REP, PROBE_REQ)
from .residue import RouteId, modulo_forward
from .topology import Hop, NodeKind, Path, Topology, route_id_for_path
from .traffic import CBR, DEFAULT_WINDOW, FlowSpec, n_windows

log = logging.getLogger(__name__)

DEFAULT_MAX_PENDING = 10**8
LOSS_CAUSES = ("droptail", "unmatched", "misroute", "probe_lost")
PACKET_KINDS = {DATA: "data", PROBE_REQ: "probe_request", PROBE_REP: "probe_reply"}
TRACE_ACTIONS = {FORWARD: "forward", DELIVER: "deliver", DROP_DROPTAIL: "droptail",
                 DROP_UNMATCHED: "unmatched", DROP_MISROUTE: "misroute", EMITTED: "emit"}
_KIND_CODE = {NodeKind.HOST: HOST, NodeKind.EDGE: EDGE, NodeKind.CORE: CORE}


def serialization_delay(size_bytes: int, capacity_bps: float) -> float:
    return size_bytes * 8.0 / capacity_bps


def core_egress(route_field: int, core: str, topology: Topology) -> Optional[Hop]:
    """Where a core sends a frame; ``None`` means the residue names a dead port.

    Depends only on the frame's route field and the fixed topology: cores keep
    no per-flow state.
    """
    return topology.hop(core, modulo_forward(route_field, topology.modulus(core)))


def host_address(index: int) -> int:
    """Locally administered 48-bit address for the node at ``index``."""
    return 0x020000000000 | index


@dataclass(frozen=True)
class RuleChange:
    time: float
    node: str
    op: str  # install | remove
    table: str  # source | restore
    flow: str
    route: int
    cause: str
    reverse: bool = False


class TraceRecord(NamedTuple):
    time: float
    node: str
    in_link: Optional[tuple]  # (sender, sender port) of the link it arrived on
    flow: str
    reverse: bool
    seq: int
    kind: str
    src_field: int
    out_link: Optional[tuple]  # (node, port) it was queued on
    action: str


class Simulation:
    """One scenario run.

    Args:
        topology: validated fabric.
        flows: traffic sources; flow i is metric column i.
        duration: run length in seconds (metric windows cover [0, duration]).
        window: throughput/loss window width.
        backend: ``"compiled"``, ``"python"`` or ``None`` for the import-time default.
        trace: record every per-node packet decision (slow; for tests).
    """

    def __init__(self, topology: Topology, flows: Sequence[FlowSpec], *, duration: float,
                 window: float = DEFAULT_WINDOW, backend: Optional[str] = None,
                 trace: bool = False, max_pending: int = DEFAULT_MAX_PENDING):
        if duration <= 0:
            raise ValueError("duration must be positive")
        self.topology = topology
        self.flows = list(flows)
        self.flow_index = {f.id: i for i, f in enumerate(self.flows)}
        if len(self.flow_index) != len(self.flows):
            raise ValueError("duplicate flow id")
        self.duration = float(duration)
        self.window = float(window)
        self.n_windows = n_windows(duration, window)

        names = list(topology.nodes)
        self.node_names = names
        self.node_index = {n: i for i, n in enumerate(names)}
        port_base, port_count, port_queue = [], [], []
        self.queue_hops: list[Hop] = []
        self.queue_of: dict[tuple, int] = {}
        for name in names:
            node = topology.nodes[name]
            hops = [h for h in topology.hops_from(name) if h.peer in self.node_index]
            count = max((h.port for h in hops), default=-1) + 1
            if node.kind is NodeKind.CORE:
                count = max(count, node.modulus)
            table = [-1] * count
            for h in hops:
                q = len(self.queue_hops)
                self.queue_hops.append(h)
                self.queue_of[(name, h.port)] = q
                table[h.port] = q
            port_base.append(len(port_queue))
            port_count.append(count)
            port_queue.extend(table)

        chan_flow, chan_src, chan_dst, chan_reply = [], [], [], []
        self._fwd_chan, self._rev_chan = {}, {}
        for i, f in enumerate(self.flows):
            for h in (f.src, f.dst):
                if h not in topology.nodes or topology.kind(h) is not NodeKind.HOST:
                    raise ValueError(f"flow {f.id}: {h!r} is not a host")
            c = len(chan_flow)
            self._fwd_chan[f.id] = c
            chan_flow.append(i)
            chan_src.append(self.node_index[f.src])
            chan_dst.append(self.node_index[f.dst])
            chan_reply.append(-1)
            if f.kind != CBR:
                r = len(chan_flow)
                self._rev_chan[f.id] = r
                chan_reply[c] = r
                chan_flow.append(i)
                chan_src.append(self.node_index[f.dst])
                chan_dst.append(self.node_index[f.src])
                chan_reply.append(-1)

        cls = engine_class(backend)
        self.engine = cls(
            [_KIND_CODE[topology.nodes[n].kind] for n in names],
            [topology.nodes[n].modulus or 0 for n in names],
            port_base, port_count, port_queue,
            [self.node_index[h.node] for h in self.queue_hops],
            [self.node_index[h.peer] for h in self.queue_hops],
            [h.link.capacity for h in self.queue_hops],
            [h.link.delay for h in self.queue_hops],
            [h.link.buffer for h in self.queue_hops],
            chan_flow, chan_src, chan_dst, chan_reply,
            len(self.flows), self.n_windows, self.window, max_pending, trace)
        self.backend = self.engine.backend
        for f in self.flows:
            self.engine.add_generator(self._fwd_chan[f.id], 0 if f.kind == CBR else 1,
                                      f.interval, f.size, f.start, f.stop)
        self._controls: list[Callable[[float], None]] = []
        self.rule_log: list[RuleChange] = []

    # -- clock ----------------------------------------------------------
    @property
    def now(self) -> float:
        return self.engine.now

    def at(self, t: float, fn: Callable[[float], None]):
        """Run ``fn(now)`` at simulated time ``t`` (after events already queued for t)."""
        if t < self.now:
            raise ValueError(f"cannot schedule at {t} < now {self.now}")
        cid = len(self._controls)
        self._controls.append(fn)
        self.engine.schedule_control(float(t), cid)

    def run_until(self, t_end: Optional[float] = None):
        t_end = self.duration if t_end is None else float(t_end)
        while True:
            cid = self.engine.run(t_end)
            if cid < 0:
                return self
            self._controls[cid](self.engine.now)

    # -- rules ----------------------------------------------------------
    def _chan(self, flow: str, reverse: bool) -> int:
        table = self._rev_chan if reverse else self._fwd_chan
        if flow not in table:
            raise KeyError(f"flow {flow!r} has no {'reverse' if reverse else 'forward'} channel")
        return table[flow]

    def _log(self, node, op, table, flow, route, cause, reverse):
        rc = RuleChange(self.now, node, op, table, flow, route, cause, reverse)
        self.rule_log.append(rc)
        log.debug("rule %s", rc)

    def install_source_rule(self, flow: str, path: Path, route: Optional[RouteId] = None, *,
                            reverse: bool = False, cause: str = "register") -> RouteId:
        """Source edge stamps ``route`` into the address field of the flow's frames."""
        topo = self.topology
        if route is None:
            route = route_id_for_path(path, topo)
        if path.core_hops:
            port = topo.hop_between(path.src_edge, path.core_hops[0][0]).port
        else:
            port = topo.hop_between(path.src_edge, path.dst_host).port
        self.engine.set_source_rule(self._chan(flow, reverse), self.node_index[path.src_edge],
                                    route, port)
        self._log(path.src_edge, "install", "source", flow, route, cause, reverse)
        return route

    def remove_source_rule(self, flow: str, edge: str, route: RouteId, *,
                           reverse: bool = False, cause: str = "migrate"):
        self.engine.clear_source_rule(self._chan(flow, reverse))
        self._log(edge, "remove", "source", flow, route, cause, reverse)

    def install_restore_rule(self, flow: str, path: Path, route: Optional[RouteId] = None, *,
                             reverse: bool = False, cause: str = "register") -> RouteId:
        """Destination edge matches ``route`` and restores the sender's address."""
        topo = self.topology
        if route is None:
            route = route_id_for_path(path, topo)
        port = topo.hop_between(path.dst_edge, path.dst_host).port
        self.engine.add_restore_rule(self._chan(flow, reverse), self.node_index[path.dst_edge],
                                     route, port, host_address(self.node_index[path.src_host]))
        self._log(path.dst_edge, "install", "restore", flow, route, cause, reverse)
        return route

    def remove_restore_rule(self, flow: str, edge: str, route: RouteId, *,
                            reverse: bool = False, cause: str = "migrate") -> bool:
        ok = self.engine.remove_restore_rule(self._chan(flow, reverse), self.node_index[edge], route)
        if ok:
            self._log(edge, "remove", "restore", flow, route, cause, reverse)
        return ok

    def register(self, flow: str, path: Path, reverse_path: Optional[Path] = None):
        """Provision both edge rules for a flow (and its reply channel, for probes)."""
        route = self.install_restore_rule(flow, path)
        self.install_source_rule(flow, path, route)
        if flow in self._rev_chan:
            rp = reverse_path or self.topology.reverse(path)
            rr = self.install_restore_rule(flow, rp, reverse=True)
            self.install_source_rule(flow, rp, rr, reverse=True)
        return route

    # -- measurement ----------------------------------------------------
    def take_link_bytes(self) -> dict:
        raw = self.engine.take_link_bytes()
        return {(h.node, h.port): raw[q] for q, h in enumerate(self.queue_hops)}

    def take_flow_counts(self) -> dict:
        """Bytes/packets each flow pushed through its source rule since the last call."""
        b, p = self.engine.take_channel_counts()
        return {f: (b[c], p[c]) for f, c in self._fwd_chan.items()}

    def queue_occupancy(self) -> dict:
        occ = self.engine.queue_occupancy()
        return {(h.node, h.port): occ[q] for q, h in enumerate(self.queue_hops)}

    def link_tx(self) -> dict:
        b, p = self.engine.link_tx()
        return {(h.node, h.port): (b[q], p[q]) for q, h in enumerate(self.queue_hops)}

    def counters(self) -> dict:
        c = self.engine.counters()
        c["pending_arrivals"] = self.engine.pending_arrivals()
        return c

    def attributable_drops(self) -> dict:
        """Unmatched + misroute drops per flow (never caused by congestion)."""
        d = self.engine.attributable_drops()
        return {f.id: d[i] for i, f in enumerate(self.flows)}

    def throughput_rows(self) -> list:
        bits = self.engine.delivered_bits()
        nf = len(self.flows)
        return [(w * self.window, f.id, bits[w * nf + i] / self.window)
                for w in range(self.n_windows) for i, f in enumerate(self.flows)]

    def rtt_rows(self) -> list:
        rows = [(t0, self.flows[fi].id, rtt) for t0, fi, rtt in self.engine.rtt_samples()]
        order = {f.id: i for i, f in enumerate(self.flows)}
        rows.sort(key=lambda r: (r[0], order[r[1]]))
        return rows

    def loss_rows(self) -> list:
        raw = self.engine.loss_counts()
        nf = len(self.flows)
        rows = []
        for w in range(self.n_windows):
            for i, f in enumerate(self.flows):
                base = (w * nf + i) * N_CAUSES
                for c, cause in enumerate(LOSS_CAUSES):
                    if raw[base + c]:
                        rows.append((w * self.window, f.id, cause, raw[base + c]))
        return rows

    def latency_stats(self) -> dict:
        n, s, lo, hi = self.engine.latency_stats()
        return {f.id: {"count": n[i], "mean": s[i] / n[i] if n[i] else None,
                       "min": lo[i] if n[i] else None, "max": hi[i] if n[i] else None}
                for i, f in enumerate(self.flows)}

    def trace(self) -> list[TraceRecord]:
        out = []
        chan_info = {c: (f, False) for f, c in self._fwd_chan.items()}
        chan_info.update({c: (f, True) for f, c in self._rev_chan.items()})
        for t, node, in_q, chan, seq, kind, src, out_q, action in self.engine.trace_records():
            fl, rev = chan_info[chan]
            ih = self.queue_hops[in_q] if in_q >= 0 else None
            oh = self.queue_hops[out_q] if out_q >= 0 else None
            out.append(TraceRecord(t, self.node_names[node],
                                   (ih.node, ih.port) if ih else None, fl, rev, seq,
                                   PACKET_KINDS[kind], src,
                                   (oh.node, oh.port) if oh else None, TRACE_ACTIONS[action]))
        return out

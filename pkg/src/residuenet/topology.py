"""Fabric graph: hosts, programmable edge switches and modulo-forwarding cores."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import UnknownLink
from .residue import ROUTE_LIMIT, ResidueConstraint, RouteId, crt_solve

DEFAULT_MAX_CORE_HOPS = 6


class NodeKind(str, enum.Enum):
    HOST = "host"
    EDGE = "edge"
    CORE = "core"


@dataclass(frozen=True)
class Node:
    name: str
    kind: NodeKind
    modulus: Optional[int] = None
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Link:
    a: str
    a_port: int
    b: str
    b_port: int
    capacity: float  # bits/s
    delay: float  # seconds
    buffer: int  # packets per egress port
    line: Optional[int] = field(default=None, compare=False)

    def ends(self):
        return ((self.a, self.a_port, self.b, self.b_port),
                (self.b, self.b_port, self.a, self.a_port))


@dataclass(frozen=True)
class Hop:
    """One directed traversal: leave ``node`` by ``port`` towards ``peer``."""
    node: str
    port: int
    peer: str
    peer_port: int
    link: Link


@dataclass(frozen=True)
class Path:
    src_host: str
    src_edge: str
    core_hops: tuple  # ((core name, egress port), ...)
    dst_edge: str
    dst_host: str

    @property
    def cores(self) -> tuple:
        return tuple(c for c, _ in self.core_hops)

    def label(self) -> str:
        return ">".join(self.cores)

    def __str__(self):
        return "->".join((self.src_host, self.src_edge, *self.cores,
                          self.dst_edge, self.dst_host))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    line: Optional[int] = None


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


class Topology:
    """Mutable while being built; treat as read-only once validated.

    Construction never raises on malformed input (duplicate names, dangling
    link endpoints, reused ports); :func:`validate_topology` reports them.
    """

    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.links: list[Link] = []
        self._ports: dict[tuple[str, int], Hop] = {}
        self._dups: list[Violation] = []

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (list(self.nodes.values()) == list(other.nodes.values())
                and self.links == other.links)

    __hash__ = None

    # construction -----------------------------------------------------
    def _add(self, node: Node):
        if node.name in self.nodes:
            self._dups.append(Violation(
                "duplicate_name", f"node {node.name!r} declared twice", node.line))
            return
        self.nodes[node.name] = node

    def add_core(self, name: str, modulus: int, line=None):
        self._add(Node(name, NodeKind.CORE, modulus, line))
        return self

    def add_edge(self, name: str, line=None):
        self._add(Node(name, NodeKind.EDGE, None, line))
        return self

    def add_host(self, name: str, line=None):
        self._add(Node(name, NodeKind.HOST, None, line))
        return self

    def add_link(self, a: str, a_port: int, b: str, b_port: int, *,
                 capacity: float, delay: float, buffer: int, line=None):
        link = Link(a, a_port, b, b_port, capacity, delay, buffer, line)
        self.links.append(link)
        for node, port, peer, peer_port in link.ends():
            key = (node, port)
            if key in self._ports:
                self._dups.append(Violation(
                    "duplicate_port", f"port {node}:{port} used by more than one link", line))
                continue
            self._ports[key] = Hop(node, port, peer, peer_port, link)
        return self

    # queries ----------------------------------------------------------
    def kind(self, name: str) -> NodeKind:
        return self.nodes[name].kind

    def hop(self, node: str, port: int) -> Optional[Hop]:
        return self._ports.get((node, port))

    def hops_from(self, node: str) -> list[Hop]:
        return sorted((h for (n, _), h in self._ports.items() if n == node),
                      key=lambda h: h.port)

    def hops_between(self, a: str, b: str) -> list[Hop]:
        return [h for h in self.hops_from(a) if h.peer == b]

    def hop_between(self, a: str, b: str) -> Hop:
        hs = self.hops_between(a, b)
        if not hs:
            raise UnknownLink(f"no link between {a} and {b}")
        return hs[0]

    def edge_of(self, host: str) -> str:
        for h in self.hops_from(host):
            if h.peer in self.nodes and self.nodes[h.peer].kind is NodeKind.EDGE:
                return h.peer
        raise UnknownLink(f"host {host} is not attached to an edge switch")

    def cores(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind is NodeKind.CORE]

    def modulus(self, core: str) -> int:
        return self.nodes[core].modulus

    # path helpers -----------------------------------------------------
    def path(self, src_host: str, dst_host: str, cores=()) -> Path:
        """Build a Path from a core-name sequence, picking the lowest port on
        parallel links."""
        for n in (src_host, dst_host, *cores):
            if n not in self.nodes:
                raise UnknownLink(f"unknown node {n!r}")
        src_edge, dst_edge = self.edge_of(src_host), self.edge_of(dst_host)
        cores = tuple(cores)
        for c in cores:
            if self.nodes[c].kind is not NodeKind.CORE:
                raise UnknownLink(f"{c} is not a core switch")
        if not cores:
            if src_edge != dst_edge:
                raise UnknownLink(f"{src_edge} and {dst_edge} need at least one core hop")
            return Path(src_host, src_edge, (), dst_edge, dst_host)
        self.hop_between(src_edge, cores[0])
        nxt = (*cores[1:], dst_edge)
        hops = tuple((c, self.hop_between(c, n).port) for c, n in zip(cores, nxt))
        return Path(src_host, src_edge, hops, dst_edge, dst_host)

    def reverse(self, path: Path) -> Path:
        return self.path(path.dst_host, path.src_host, tuple(reversed(path.cores)))

    def path_hops(self, path: Path) -> list[Hop]:
        """Every directed link the path uses, host uplink to host downlink."""
        out = [self.hop_between(path.src_host, path.src_edge)]
        if path.core_hops:
            out.append(self.hop_between(path.src_edge, path.core_hops[0][0]))
            for core, port in path.core_hops:
                h = self.hop(core, port)
                if h is None:
                    raise UnknownLink(f"{core} has no link on port {port}")
                out.append(h)
            if out[-1].peer != path.dst_edge:
                raise UnknownLink(f"path does not end at {path.dst_edge}")
        out.append(self.hop_between(path.dst_edge, path.dst_host))
        return out


def is_core_link(topology: Topology, hop: Hop) -> bool:
    nodes = topology.nodes
    return (nodes[hop.node].kind is NodeKind.CORE
            and hop.peer in nodes and nodes[hop.peer].kind is NodeKind.CORE)


def validate_topology(topology: Topology) -> ValidationReport:
    v: list[Violation] = list(topology._dups)
    nodes = topology.nodes
    for link in topology.links:
        for name in (link.a, link.b):
            if name not in nodes:
                v.append(Violation("unknown_node", f"link references unknown node {name!r}", link.line))
        if link.a == link.b:
            v.append(Violation("self_loop", f"link {link.a}:{link.a_port} loops to itself", link.line))
        if not link.capacity > 0:
            v.append(Violation("bad_link", f"capacity must be > 0, got {link.capacity}", link.line))
        if not link.delay >= 0:
            v.append(Violation("bad_link", f"delay must be >= 0, got {link.delay}", link.line))
        if link.buffer < 1:
            v.append(Violation("bad_link", f"buffer must be >= 1, got {link.buffer}", link.line))
        for node, port, _, _ in link.ends():
            if port < 0:
                v.append(Violation("port_range", f"negative port {node}:{port}", link.line))
            n = nodes.get(node)
            if n is not None and n.kind is NodeKind.CORE and n.modulus is not None \
                    and port >= n.modulus:
                v.append(Violation(
                    "port_range",
                    f"port {port} on {node} is not below its modulus {n.modulus}", link.line))

    cores = topology.cores()
    for c in cores:
        if c.modulus is None or c.modulus < 2:
            v.append(Violation("bad_modulus", f"core {c.name} needs modulus >= 2", c.line))
    for i, a in enumerate(cores):
        for b in cores[i + 1:]:
            if a.modulus and b.modulus and a.modulus >= 2 and b.modulus >= 2:
                g = math.gcd(a.modulus, b.modulus)
                if g != 1:
                    v.append(Violation(
                        "not_coprime",
                        f"moduli of {a.name} ({a.modulus}) and {b.name} ({b.modulus}) "
                        f"share factor {g}", b.line))

    for n in nodes.values():
        if n.kind is NodeKind.HOST:
            hs = topology.hops_from(n.name)
            if len(hs) != 1 or hs[0].peer not in nodes \
                    or nodes[hs[0].peer].kind is not NodeKind.EDGE:
                v.append(Violation(
                    "host_attachment", f"host {n.name} must have exactly one link to an edge", n.line))
    return ValidationReport(v)


def path_to_constraints(path: Path, topology: Topology) -> list[ResidueConstraint]:
    out = []
    for core, port in path.core_hops:
        if topology.hop(core, port) is None:
            raise UnknownLink(f"{core} has no link on port {port}")
        out.append(ResidueConstraint(topology.modulus(core), port))
    return out


def route_id_for_path(path: Path, topology: Topology) -> RouteId:
    cs = path_to_constraints(path, topology)
    if not cs:
        return 0
    return crt_solve(cs)


def _path_key(path: Path, topology: Topology):
    return (tuple(topology.modulus(c) for c in path.cores),
            tuple(p for _, p in path.core_hops))


def _core_walks(topology: Topology, src_edge: str, dst_edge: str,
                length: int) -> Iterator[tuple]:
    nodes = topology.nodes

    def extend(walk, seen):
        here = walk[-1][0]
        if len(walk) == length:
            for h in topology.hops_between(here, dst_edge):
                yield walk[:-1] + ((here, h.port),)
            return
        for h in topology.hops_from(here):
            nxt = nodes.get(h.peer)
            if nxt is None or nxt.kind is not NodeKind.CORE or h.peer in seen:
                continue
            yield from extend(walk[:-1] + ((here, h.port), (h.peer, -1)), seen | {h.peer})

    firsts = []
    for h in topology.hops_from(src_edge):
        n = nodes.get(h.peer)
        if n is not None and n.kind is NodeKind.CORE and h.peer not in firsts:
            firsts.append(h.peer)
    for c in firsts:
        yield from extend(((c, -1),), {c})


def enumerate_equal_length_paths(topology: Topology, src_edge: str, dst_edge: str,
                                 current: Path,
                                 max_core_hops: int = DEFAULT_MAX_CORE_HOPS) -> list[Path]:
    """Loop-free alternatives to ``current`` with the same number of core hops.

    Sorted by core-modulus sequence, then by port sequence.
    """
    length = len(current.core_hops)
    if length == 0 or length > max_core_hops:
        return []
    found = []
    for hops in _core_walks(topology, src_edge, dst_edge, length):
        p = Path(current.src_host, src_edge, hops, dst_edge, current.dst_host)
        if p.core_hops != current.core_hops:
            found.append(p)
    found.sort(key=lambda p: _path_key(p, topology))
    return found


def path_route_fits(path: Path, topology: Topology) -> bool:
    return math.prod(topology.modulus(c) for c in path.cores) <= ROUTE_LIMIT


# Reconstructed experiment fabric.  Ports on the primary path are pinned so
# that VMS1 -> S11 -> S19 -> S17 -> VMD2 encodes as route 133.
FIG_HOST_CAPACITY = 10e9
FIG_CORE_CAPACITY = 930e6
FIG_DELAY = 50e-6
FIG_BUFFER = 1000


def fig_topology_lines(host_capacity=FIG_HOST_CAPACITY, core_capacity=FIG_CORE_CAPACITY,
                       delay=FIG_DELAY, buffer=FIG_BUFFER) -> list[str]:
    def link(a, b, cap):
        return f"link {a} {b} capacity={cap!r} delay={delay!r} buffer={buffer}"

    return [
        "core S11 modulus=11",
        "core S13 modulus=13",
        "core S17 modulus=17",
        "core S19 modulus=19",
        "edge E1",
        "edge E2",
        "host VMS1",
        "host VMS2",
        "host VMD1",
        "host VMD2",
        link("VMS1:0", "E1:1", host_capacity),
        link("VMS2:0", "E1:2", host_capacity),
        link("E1:0", "S11:0", host_capacity),
        link("S11:1", "S19:1", core_capacity),
        link("S11:2", "S13:1", core_capacity),
        link("S19:0", "S17:1", core_capacity),
        link("S13:2", "S17:2", core_capacity),
        link("S17:14", "E2:0", host_capacity),
        link("S19:2", "E2:1", host_capacity),
        link("E2:2", "VMD1:0", host_capacity),
        link("E2:3", "VMD2:0", host_capacity),
    ]


def build_fig_topology(**kw) -> Topology:
    from .scenario import parse_topology_lines
    return parse_topology_lines(fig_topology_lines(**kw))

"""OpenWiMesh-style SDN plane with a central controller.

Every node runs a graph client that reports its radio neighbourhood to the
controller once per interval. Backbone nodes are flow-table switches;
clients are plain hosts that send to their association point. Control
traffic rides in-band along a controller-rooted tree derived from the graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from ..radio import Frame, FrameKind, frame_size, received_power
from ..traffic import Packet
from .base import APP_KINDS, RoutingPlane

if TYPE_CHECKING:
    from ..engine import Event
    from ..network import Network

Match = tuple[int, int]


class NoPath(Exception):
    pass


@dataclass(frozen=True)
class SdnConfig:
    report_interval: float = 1.0
    staleness_intervals: int = 2
    report_base: int = 20
    report_per_neighbor: int = 10
    transport_header: int = 52
    report_acks: bool = True
    packet_in_size: int = 64
    flow_mod_size: int = 80
    arp_size: int = 28
    controller_delay: float = 0.02
    buffer_timeout: float = 3.0
    arp_timeout: float = 1.0
    arp_retries: int = 3
    mobility: bool = True
    idle_timeout: float = 30.0

    def __post_init__(self):
        if self.report_interval <= 0:
            raise ValueError("report_interval: must be positive")
        if self.staleness_intervals < 1:
            raise ValueError("staleness_intervals: must be >= 1")
        if self.controller_delay < 0 or self.buffer_timeout <= 0 or self.idle_timeout <= 0:
            raise ValueError("sdn delays must be non-negative and timeouts positive")


# graph ---------------------------------------------------------------------

class NetworkGraph:
    """Controller view: an edge exists while both endpoints' fresh reports list each other."""

    def __init__(self, staleness: float):
        self.staleness = staleness
        self.reports: dict[int, tuple[float, dict[int, float]]] = {}
        self.edges: dict[frozenset, float] = {}
        self.adjacency: dict[int, set[int]] = {}

    def report(self, reporter: int, observed: dict[int, float], at: float) -> None:
        if reporter in observed:
            raise ValueError("a node cannot report itself")
        self.reports[reporter] = (at, observed)

    def refresh(self, now: float) -> tuple[set[frozenset], set[frozenset]]:
        """Rebuild edges from the latest fresh reports; return (added, lost)."""
        fresh = {n: obs for n, (at, obs) in self.reports.items() if now - at <= self.staleness}
        edges = {}
        for a, obs in fresh.items():
            for b, signal in obs.items():
                if a < b and b in fresh and a in fresh[b]:
                    edges[frozenset((a, b))] = signal
        added = edges.keys() - self.edges.keys()
        lost = self.edges.keys() - edges.keys()
        self.edges = edges
        adjacency: dict[int, set[int]] = {n: set() for n in fresh}
        for e in edges:
            a, b = tuple(e)
            adjacency[a].add(b)
            adjacency[b].add(a)
        self.adjacency = adjacency
        return set(added), set(lost)

    def has_edge(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.edges


def compute_path_hc(adjacency: dict[int, set[int]], src: int, dst: int,
                    transit: Callable[[int], bool] | None = None) -> list[int]:
    """Minimum-hop path; ties go to the lexicographically smallest id sequence.

    ``transit`` restricts which nodes may relay (endpoints are always allowed).
    """
    if src not in adjacency or dst not in adjacency:
        raise NoPath(f"{src} or {dst} not in graph")
    if src == dst:
        return [src]
    parent = {src: None}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if v != src and transit is not None and not transit(v):
            continue
        for w in sorted(adjacency[v]):
            if w in parent:
                continue
            parent[w] = v
            if w == dst:
                path = [w]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(w)
    raise NoPath(f"no path {src} -> {dst}")


class PathStrategy:
    name = "abstract"

    def path(self, adjacency, src: int, dst: int, transit=None) -> list[int]:
        raise NotImplementedError


class HopCount(PathStrategy):
    name = "hc"

    def path(self, adjacency, src, dst, transit=None):
        return compute_path_hc(adjacency, src, dst, transit)


class Hlrb(PathStrategy):
    """Load-balancing strategy named by OpenWiMesh; not implemented here."""

    name = "hlrb"


class HlrbShc(PathStrategy):
    name = "hlrb-shc"


STRATEGIES = {s.name: s for s in (HopCount, Hlrb, HlrbShc)}


# switch and controller state -----------------------------------------------

@dataclass(slots=True)
class FlowEntry:
    next_hop: int
    installed_at: float
    last_used: float


@dataclass
class ActiveFlow:
    match: Match
    path: list[int]
    last_used: float
    suspended: bool = False

    def uses(self, edge: frozenset) -> bool:
        return any(frozenset(p) == edge for p in zip(self.path, self.path[1:]))


@dataclass
class ControlTree:
    parent: dict[int, int] = field(default_factory=dict)
    depth: dict[int, int] = field(default_factory=dict)


class SdnPlane(RoutingPlane):
    uses_arp = True

    def __init__(self, net: "Network", config: SdnConfig | None = None,
                 strategy: PathStrategy | None = None):
        cfg = config or SdnConfig()
        super().__init__(net, cfg.arp_size, cfg.arp_timeout, cfg.arp_retries)
        self.config = cfg
        self.strategy = strategy or HopCount()
        self.controller = net.central
        self.graph = NetworkGraph(cfg.staleness_intervals * cfg.report_interval)
        self.tables: dict[int, dict[Match, FlowEntry]] = {n: {} for n in net.nodes}
        self.buffers: dict[tuple[int, Match], list[Packet]] = {}
        self._buffer_expiry: dict[tuple[int, Match], "Event"] = {}
        self.intended: dict[tuple[int, Match], int] = {}
        self.registry: dict[Match, ActiveFlow] = {}
        self.gratuitous_sent = 0
        self._tree: ControlTree | None = None

    @property
    def name(self) -> str:
        return "sdn" if self.config.mobility else "sdn-no-mobility"

    def start(self) -> None:
        interval = self.config.report_interval
        for n in self.net.nodes:
            phase = self.net.rng.stream("sdn-phase", n).uniform(0, interval)
            self.periodic(n, interval, phase, self.graph_client_report, "report")

    def is_switch(self, node: int) -> bool:
        return not self.net.is_client(node)

    # control tree ------------------------------------------------------
    @property
    def tree(self) -> ControlTree:
        if self._tree is None:
            self._tree = self._build_tree()
        return self._tree

    def _build_tree(self) -> ControlTree:
        adjacency = self.graph.adjacency
        tree = ControlTree({}, {self.controller: 0})
        queue = deque([self.controller])
        while queue:
            v = queue.popleft()
            if v != self.controller and not self.is_switch(v):
                continue
            for w in sorted(adjacency.get(v, ())):
                if w not in tree.depth:
                    tree.depth[w] = tree.depth[v] + 1
                    tree.parent[w] = v
                    queue.append(w)
        return tree

    def association(self, node: int) -> int | None:
        if self.is_switch(node):
            return node
        return self.tree.parent.get(node)

    def _upward(self, node: int) -> int | None:
        tree = self.tree
        parent = tree.parent.get(node)
        if parent is not None and self.medium.link_up(node, parent):
            return parent
        best = None
        for n, _ in self.medium.neighbors(node):
            d = tree.depth.get(n)
            if d is None or not self.is_switch(n):
                continue
            if best is None or (d, n) < best:
                best = (d, n)
        return None if best is None else best[1]

    def _downward(self, node: int, dst: int) -> int | None:
        parent = self.tree.parent
        child = dst
        while child in parent:
            up = parent[child]
            if up == node:
                return child
            child = up
        try:
            path = self.strategy.path(self.graph.adjacency, node, dst, self.is_switch)
        except NoPath:
            return None
        return path[1]

    def send_routed(self, node: int, dst: int, kind: FrameKind, size: int, body) -> None:
        # in-band control rides a TCP/IP channel to the controller
        super().send_routed(node, dst, kind, frame_size(size + self.config.transport_header),
                            body)

    # graph client ------------------------------------------------------
    def report_size(self, n_neighbors: int) -> int:
        return self.config.report_base + self.config.report_per_neighbor * n_neighbors

    def graph_client_report(self, node: int) -> None:
        now = self.sim.now
        radio = self.medium.params
        observed = {n: received_power(radio, max(d, 1e-9)) for n, d in self.medium.neighbors(node)}
        self.send_routed(node, self.controller, FrameKind.GRAPH_REPORT,
                         self.report_size(len(observed)),
                         (node, observed, now))

    def on_routed_control(self, node: int, packet: Packet, sender: int) -> None:
        kind = packet.kind
        if node == self.controller:
            if kind == FrameKind.GRAPH_REPORT:
                self.update_graph(*packet.body)
                if self.config.report_acks and packet.src != node:
                    self.send_routed(node, packet.src, FrameKind.REPORT_ACK, 0, None)
                return
            if kind == FrameKind.PACKET_IN:
                self.sim.call_in(self.config.controller_delay, self.handle_packet_in,
                                 *packet.body, kind="packet-in", target=node)
                return
            if kind == FrameKind.ARP_REQUEST:
                self.sim.call_in(self.config.controller_delay, self.answer_arp,
                                 *packet.body, kind="arp-answer", target=node)
                return
        if kind == FrameKind.FLOW_MOD:
            self.apply_flow_mod(node, *packet.body)
        elif kind in (FrameKind.ARP_REPLY, FrameKind.GRATUITOUS_ARP):
            target, binding = packet.body
            if kind == FrameKind.GRATUITOUS_ARP:
                self.arp[node][target] = binding
            else:
                self.arp_resolved(node, target, binding)

    def update_graph(self, reporter: int, observed: dict[int, float], at: float) -> None:
        self.graph.report(reporter, observed, at)
        added, lost = self.graph.refresh(self.sim.now)
        if not added and not lost:
            return
        self._tree = None
        if self.config.mobility:
            for edge in sorted(lost, key=sorted):
                self.handle_disassociation(edge)
            for flow in [f for f in self.registry.values() if f.suspended]:
                self.reroute(flow, None)

    # routing -----------------------------------------------------------
    def flow_path(self, src: int, dst: int) -> list[int]:
        adjacency = self.graph.adjacency
        if self.is_switch(src):
            return self.strategy.path(adjacency, src, dst, self.is_switch)
        assoc = self.association(src)
        if assoc is None:
            raise NoPath(f"client {src} has no association point")
        return [src] + self.strategy.path(adjacency, assoc, dst, self.is_switch)

    def install_path(self, match: Match, path: list[int], force: int | None = None) -> None:
        # far end first, so downstream entries tend to land before released packets
        hops = list(zip(path, path[1:]))
        for u, v in reversed(hops):
            if not self.is_switch(u):
                continue
            if self.intended.get((u, match)) != v or u == force:
                self.intended[(u, match)] = v
                self._flow_mod(u, match, v)

    def _flow_mod(self, node: int, match: Match, next_hop: int | None) -> None:
        self.send_routed(self.controller, node, FrameKind.FLOW_MOD, self.config.flow_mod_size,
                         (match, next_hop))

    def handle_packet_in(self, ingress: int, match: Match) -> None:
        src, dst = match
        if dst not in self.graph.adjacency:
            return
        try:
            full = self.flow_path(src, dst)
        except NoPath:
            full = None
        if full is None or ingress not in full:
            try:
                self.install_path(match, self.strategy.path(
                    self.graph.adjacency, ingress, dst, self.is_switch), force=ingress)
            except NoPath:
                return
        if full is not None:
            self.install_path(match, full, force=ingress)
            flow = self.registry.get(match)
            if flow is None:
                self.registry[match] = ActiveFlow(match, full, self.sim.now)
            else:
                flow.path = full
                flow.suspended = False

    def handle_disassociation(self, lost_edge: frozenset) -> list[Match]:
        """Re-route every active flow whose path used ``lost_edge``."""
        affected = [f for f in self.registry.values() if not f.suspended and f.uses(lost_edge)]
        for flow in affected:
            self.reroute(flow, lost_edge)
        return [f.match for f in affected]

    def reroute(self, flow: ActiveFlow, lost_edge: frozenset | None) -> None:
        old = flow.path
        try:
            new = self.flow_path(*flow.match)
        except NoPath:
            flow.suspended = True
            return
        flow.suspended = False
        self.install_path(flow.match, new)
        keep = set(new[:-1])
        for u in old[:-1]:
            if u not in keep and self.is_switch(u) and (u, flow.match) in self.intended:
                del self.intended[(u, flow.match)]
                self._flow_mod(u, flow.match, None)
        flow.path = new
        # outbound repair: the mobile client learns its new association point
        src, dst = flow.match
        for client, peer in ((src, dst), (dst, src)):
            if self.is_switch(client):
                continue
            if lost_edge is not None and client not in lost_edge:
                continue
            assoc = self.association(client)
            if assoc is not None:
                self.gratuitous_sent += 1
                self.send_routed(self.controller, client, FrameKind.GRATUITOUS_ARP,
                                 self.config.arp_size, (peer, assoc))

    def apply_flow_mod(self, node: int, match: Match, next_hop: int | None) -> None:
        table = self.tables[node]
        if next_hop is None:
            table.pop(match, None)
            return
        now = self.sim.now
        table[match] = FlowEntry(next_hop, now, now)
        key = (node, match)
        queued = self.buffers.pop(key, None)
        expiry = self._buffer_expiry.pop(key, None)
        if expiry is not None:
            expiry.cancelled = True
        for packet in queued or ():
            self._switch(node, packet)

    # data plane --------------------------------------------------------
    def forward(self, node: int, packet: Packet) -> None:
        if packet.kind not in APP_KINDS:
            super().forward(node, packet)
            return
        packet.ttl -= 1
        if packet.ttl < 0:
            self.net.drop(packet, "ttl expired")
            return
        if self.is_switch(node):
            self._switch(node, packet)
            return
        if packet.src != node:
            self.net.drop(packet, "client does not relay")
            return
        nh = self.arp[node].get(packet.dst)
        if nh is None:
            self.net.drop(packet, "no arp binding")
            return
        self.transmit(node, nh, packet)

    def _switch(self, node: int, packet: Packet) -> None:
        match = (packet.src, packet.dst)
        now = self.sim.now
        entry = self.tables[node].get(match)
        if entry is not None and not self.config.mobility \
                and now - entry.last_used > self.config.idle_timeout:
            del self.tables[node][match]
            self.intended.pop((node, match), None)
            entry = None
        if entry is None:
            self._table_miss(node, match, packet)
            return
        kind = packet.kind
        frame = Frame(kind, node, entry.next_hop, packet.size, packet, packet.sent_at)
        if self.medium.unicast(node, entry.next_hop, frame) is not None:
            entry.last_used = now
            flow = self.registry.get(match)
            if flow is not None:
                flow.last_used = now

    def _table_miss(self, node: int, match: Match, packet: Packet) -> None:
        key = (node, match)
        queued = self.buffers.get(key)
        if queued is not None:
            queued.append(packet)
            return
        self.buffers[key] = [packet]
        self._buffer_expiry[key] = self.sim.call_in(
            self.config.buffer_timeout, self._expire_buffer, key, kind="buffer-timeout",
            target=node)
        self.send_routed(node, self.controller, FrameKind.PACKET_IN,
                         self.config.packet_in_size, (node, match))

    def _expire_buffer(self, key: tuple[int, Match]) -> None:
        self._buffer_expiry.pop(key, None)
        for packet in self.buffers.pop(key, ()):
            self.net.drop(packet, "buffer timeout")

    def next_hop(self, node: int, packet: Packet) -> int | None:
        # only control packets reach here; data uses the flow tables
        if packet.dst == self.controller:
            return self._upward(node)
        return self._downward(node, packet.dst)

    # ARP via the controller ---------------------------------------------
    def arp_request(self, node: int, target: int) -> None:
        self.send_routed(node, self.controller, FrameKind.ARP_REQUEST, self.arp_size,
                         (node, target))

    def answer_arp(self, requester: int, target: int) -> None:
        """Reply with the link-layer id the requester must send to.

        A client sends everything to its association point; a switch only
        needs the target's own association for bookkeeping.
        """
        if target not in self.graph.adjacency:
            return
        binding = self.association(requester if not self.is_switch(requester) else target)
        if binding is None:
            return
        self.send_routed(self.controller, requester, FrameKind.ARP_REPLY, self.arp_size,
                         (target, binding))

    # convergence -------------------------------------------------------
    def routing_signature(self):
        return frozenset(self.graph.edges)

    def reachability_complete(self) -> bool:
        nodes = self.net.nodes
        return (all(n in self.graph.reports for n in nodes)
                and all(n in self.tree.depth for n in nodes))

    def flow_walk(self, match: Match) -> list[int]:
        """Follow installed entries for ``match``; stops at the destination or a gap."""
        src, dst = match
        walk = [src]
        node = src
        if not self.is_switch(src):
            node = self.arp[src].get(dst)
            if node is None:
                return walk
            walk.append(node)
        while node != dst:
            entry = self.tables[node].get(match)
            if entry is None:
                break
            node = entry.next_hop
            if node in walk:
                raise RuntimeError(f"forwarding loop for {match}: {walk + [node]}")
            walk.append(node)
        return walk

"""Simplified OLSR: HELLO link sensing, MPR flooding of TC, hop-count routes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from ..radio import BROADCAST, Frame, FrameKind, frame_size
from ..traffic import Packet
from .base import RoutingPlane, shortest_routes

if TYPE_CHECKING:
    from ..network import Network

ASYM = "ASYM"
SYM = "SYM"


@dataclass(frozen=True)
class OlsrConfig:
    t_hello: float = 1.0
    t_tc: float = 1.0
    hold_time: float = 3.0
    top_hold: float = 3.0
    hello_base: int = 24
    hello_per_neighbor: int = 8
    tc_base: int = 20
    tc_per_selector: int = 4
    tc_ttl: int = 255

    def __post_init__(self):
        if min(self.t_hello, self.t_tc, self.hold_time, self.top_hold) <= 0:
            raise ValueError("olsr timers must be positive")
        if self.hold_time < 3 * self.t_hello:
            raise ValueError("hold_time: must be at least 3 * t_hello")


def select_mprs(one_hop: set[int], two_hop_map: dict[int, set[int]]) -> set[int]:
    """Greedy MPR cover: most uncovered two-hop nodes first, ties by lowest id."""
    uncovered = set().union(*two_hop_map.values()) if two_hop_map else set()
    mprs: set[int] = set()
    candidates = sorted(n for n in one_hop if two_hop_map.get(n))
    while uncovered:
        best, gain = None, 0
        for n in candidates:
            if n in mprs:
                continue
            g = len(two_hop_map[n] & uncovered)
            if g > gain:
                best, gain = n, g
        if best is None:
            break
        mprs.add(best)
        uncovered -= two_hop_map[best]
    return mprs


class OlsrNode:
    __slots__ = ("id", "heard", "sym", "two_hop", "mprs", "selectors", "last_selected",
                 "tc_seq", "topology", "retransmitted", "routes", "dirty", "next_expiry")

    def __init__(self, node: int):
        self.id = node
        self.heard: dict[int, float] = {}
        self.sym: dict[int, float] = {}
        # neighbor -> (its symmetric neighbors, valid until)
        self.two_hop: dict[int, tuple[frozenset, float]] = {}
        self.mprs: set[int] = set()
        self.selectors: dict[int, float] = {}
        self.last_selected = -math.inf
        self.tc_seq = 0
        # originator -> (seq, advertised selectors, valid until)
        self.topology: dict[int, tuple[int, frozenset, float]] = {}
        self.retransmitted: dict[int, int] = {}
        self.routes: dict[int, tuple[int, int]] = {}
        self.dirty = True
        self.next_expiry = -math.inf

    def sym_neighbors(self, now: float) -> set[int]:
        return {n for n, until in self.sym.items() if until > now}

    def current_selectors(self, now: float) -> set[int]:
        return {n for n, until in self.selectors.items() if until > now}


class OlsrPlane(RoutingPlane):
    name = "olsr"

    def __init__(self, net: "Network", config: OlsrConfig | None = None):
        super().__init__(net)
        self.config = config or OlsrConfig()
        self.state = {n: OlsrNode(n) for n in net.nodes}

    def start(self) -> None:
        cfg = self.config
        for n in self.net.nodes:
            rng = self.net.rng.stream("olsr-phase", n)
            self.periodic(n, cfg.t_hello, rng.uniform(0, cfg.t_hello), self.emit_hello, "hello")
            self.periodic(n, cfg.t_tc, rng.uniform(0, cfg.t_tc), self.emit_tc, "tc")

    def hello_size(self, n_neighbors: int) -> int:
        return self.config.hello_base + self.config.hello_per_neighbor * n_neighbors

    def tc_size(self, n_selectors: int) -> int:
        return self.config.tc_base + self.config.tc_per_selector * n_selectors

    # HELLO -------------------------------------------------------------
    def two_hop_map(self, st: OlsrNode, now: float) -> dict[int, set[int]]:
        one_hop = st.sym_neighbors(now)
        out = {}
        for n in one_hop:
            entry = st.two_hop.get(n)
            if entry is None or entry[1] <= now:
                continue
            strict = set(entry[0]) - one_hop - {st.id}
            if strict:
                out[n] = strict
        return out

    def emit_hello(self, node: int) -> None:
        st = self.state[node]
        now = self.sim.now
        one_hop = st.sym_neighbors(now)
        mprs = st.mprs = select_mprs(one_hop, self.two_hop_map(st, now))
        links = {n: (SYM if st.sym.get(n, -1.0) > now else ASYM)
                 for n, until in st.heard.items() if until > now}
        self.medium.broadcast(node, Frame(FrameKind.HELLO, node, BROADCAST,
                                          frame_size(self.hello_size(len(links))),
                                          (links, frozenset(mprs)), now))

    def process_hello(self, node: int, sender: int, payload) -> None:
        links, mprs = payload
        st = self.state[node]
        now = self.sim.now
        hold = now + self.config.hold_time
        was_sym = st.sym.get(sender, -1.0) > now
        st.heard[sender] = hold
        if node in links:
            st.sym[sender] = hold
        is_sym = st.sym.get(sender, -1.0) > now
        if is_sym != was_sym:
            st.dirty = True
        if is_sym:
            reach = frozenset(n for n, status in links.items() if status == SYM and n != node)
            old = st.two_hop.get(sender)
            if old is None or old[0] != reach or old[1] <= now:
                st.dirty = True
            st.two_hop[sender] = (reach, hold)
            if node in mprs:
                st.selectors[sender] = hold
                st.last_selected = now
            else:
                st.selectors.pop(sender, None)
        else:
            if st.two_hop.pop(sender, None) is not None:
                st.dirty = True
            st.selectors.pop(sender, None)

    # TC ----------------------------------------------------------------
    def emit_tc(self, node: int) -> None:
        st = self.state[node]
        now = self.sim.now
        selectors = st.current_selectors(now)
        if not selectors and now - st.last_selected > self.config.top_hold:
            return
        if selectors:
            st.last_selected = now
        st.tc_seq += 1
        size = frame_size(self.tc_size(len(selectors)))
        payload = (node, st.tc_seq, frozenset(selectors), self.config.tc_ttl)
        self.medium.broadcast(node, Frame(FrameKind.TC, node, BROADCAST, size, payload, now))

    def process_tc(self, node: int, sender: int, frame: Frame) -> str:
        """Merge a TC and decide whether to re-forward it."""
        orig, seq, adv, ttl = frame.payload
        st = self.state[node]
        now = self.sim.now
        if orig == node or st.sym.get(sender, -1.0) <= now:
            return "ignore"
        stored = st.topology.get(orig)
        if stored is not None and seq < stored[0]:
            return "old"
        if stored is None or seq > stored[0]:
            if stored is None or stored[1] != adv or stored[2] <= now:
                st.dirty = True
            st.topology[orig] = (seq, adv, now + self.config.top_hold)
        if st.retransmitted.get(orig, -1) >= seq:
            return "duplicate"
        if st.selectors.get(sender, -1.0) <= now or ttl <= 1:
            return "stored"
        st.retransmitted[orig] = seq
        self.medium.broadcast(node, Frame(FrameKind.TC, node, BROADCAST, frame.size,
                                          (orig, seq, adv, ttl - 1), frame.born_at))
        return "forwarded"

    def on_control(self, node: int, frame: Frame, sender: int) -> None:
        if frame.kind == FrameKind.HELLO:
            self.process_hello(node, sender, frame.payload)
        elif frame.kind == FrameKind.TC:
            self.process_tc(node, sender, frame)

    # routes ------------------------------------------------------------
    def compute_routes(self, node: int) -> dict[int, tuple[int, int]]:
        st = self.state[node]
        now = self.sim.now
        if not st.dirty and now < st.next_expiry:
            return st.routes
        expiry = math.inf
        adjacency: dict[int, set[int]] = {node: set()}
        for n, until in st.sym.items():
            if until > now:
                adjacency[node].add(n)
                expiry = min(expiry, until)
        for n in adjacency[node]:
            entry = st.two_hop.get(n)
            if entry is not None and entry[1] > now:
                adjacency.setdefault(n, set()).update(entry[0])
                expiry = min(expiry, entry[1])
        for orig, (_, adv, until) in st.topology.items():
            if until > now:
                adjacency.setdefault(orig, set()).update(adv)
                expiry = min(expiry, until)
        st.routes = shortest_routes(node, adjacency)
        st.dirty = False
        st.next_expiry = expiry
        return st.routes

    def next_hop(self, node: int, packet: Packet) -> int | None:
        route = self.compute_routes(node).get(packet.dst)
        return None if route is None else route[0]

    def routing_signature(self):
        return tuple(tuple(sorted(self.compute_routes(n).items())) for n in self.net.nodes)

    def reachability_complete(self) -> bool:
        total = len(self.net.nodes) - 1
        return all(len(self.compute_routes(n)) == total for n in self.net.nodes)

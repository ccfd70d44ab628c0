"""Simplified B.A.T.M.A.N.: first-arrival OGM adoption with a bidirectional check.

Hosts resolve addresses with a classic broadcast ARP, flooded hop by hop
through the mesh the way batman-adv carries layer-2 broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from ..radio import BROADCAST, Frame, FrameKind
from ..traffic import Packet
from .base import RoutingPlane

if TYPE_CHECKING:
    from ..network import Network

ADOPT = "adopt-and-rebroadcast"
DUPLICATE = "drop-duplicate"
ECHO = "drop-echo"
UNIDIRECTIONAL = "drop-unidirectional"


@dataclass(frozen=True)
class BatmanConfig:
    ogm_interval: float = 1.0
    ttl: int = 50
    ogm_size: int = 52
    purge_timeout: float = 5.0
    bidir_timeout: float = 3.0
    bcast_hop_delay: float = 0.1
    arp_size: int = 28
    arp_timeout: float = 1.0
    arp_retries: int = 3

    def __post_init__(self):
        if self.ogm_interval <= 0 or self.purge_timeout <= 0 or self.bidir_timeout <= 0:
            raise ValueError("batman timers must be positive")
        if self.ttl < 1:
            raise ValueError("ttl: must be >= 1")
        if self.bcast_hop_delay < 0:
            raise ValueError("bcast_hop_delay: must be >= 0")


@dataclass(frozen=True, slots=True)
class Ogm:
    originator: int
    sequence: int
    ttl: int
    direct: bool = False
    unidirectional: bool = False


class OriginatorEntry:
    __slots__ = ("next_hop", "last_seq", "last_updated")

    def __init__(self, next_hop: int, last_seq: int, last_updated: float):
        self.next_hop = next_hop
        self.last_seq = last_seq
        self.last_updated = last_updated


class BatmanNode:
    __slots__ = ("id", "seq", "bidir", "originators", "echoed", "arp_seen", "arp_id")

    def __init__(self, node: int):
        self.id = node
        self.seq = 0
        self.bidir: dict[int, float] = {}
        self.originators: dict[int, OriginatorEntry] = {}
        self.echoed: set[tuple[int, int]] = set()
        self.arp_seen: set[tuple[int, int]] = set()
        self.arp_id = 0


class BatmanPlane(RoutingPlane):
    name = "batman"
    uses_arp = True

    def __init__(self, net: "Network", config: BatmanConfig | None = None):
        cfg = config or BatmanConfig()
        super().__init__(net, cfg.arp_size, cfg.arp_timeout, cfg.arp_retries)
        self.config = cfg
        self.state = {n: BatmanNode(n) for n in net.nodes}

    def start(self) -> None:
        cfg = self.config
        for n in self.net.nodes:
            phase = self.net.rng.stream("batman-phase", n).uniform(0, cfg.ogm_interval)
            self.periodic(n, cfg.ogm_interval, phase, self.emit_ogm, "ogm")

    def emit_ogm(self, node: int) -> None:
        st = self.state[node]
        ogm = Ogm(node, st.seq, self.config.ttl)
        st.seq += 1
        self._send(node, ogm)

    def _send(self, node: int, ogm: Ogm) -> None:
        self.medium.broadcast(node, Frame(FrameKind.OGM, node, BROADCAST,
                                          self.config.ogm_size, ogm, self.sim.now))

    def handle_ogm(self, node: int, ogm: Ogm, sender: int) -> str:
        st = self.state[node]
        now = self.sim.now
        if ogm.originator == node:
            if ogm.direct:
                st.bidir[sender] = now + self.config.bidir_timeout
            return ECHO
        if ogm.unidirectional:
            return UNIDIRECTIONAL
        if st.bidir.get(sender, -1.0) <= now:
            if ogm.originator == sender and (sender, ogm.sequence) not in st.echoed:
                st.echoed.add((sender, ogm.sequence))
                self._send(node, Ogm(sender, ogm.sequence, ogm.ttl, True, True))
            return UNIDIRECTIONAL
        entry = st.originators.get(ogm.originator)
        if entry is not None and ogm.sequence <= entry.last_seq:
            return DUPLICATE
        if entry is None:
            st.originators[ogm.originator] = OriginatorEntry(sender, ogm.sequence, now)
        else:
            entry.next_hop = sender
            entry.last_seq = ogm.sequence
            entry.last_updated = now
        if ogm.ttl > 1:
            self._send(node, Ogm(ogm.originator, ogm.sequence, ogm.ttl - 1,
                                 sender == ogm.originator))
        return ADOPT

    def lookup_next_hop(self, node: int, destination: int) -> int | None:
        entry = self.state[node].originators.get(destination)
        if entry is None or self.sim.now - entry.last_updated > self.config.purge_timeout:
            return None
        return entry.next_hop

    def next_hop(self, node: int, packet: Packet) -> int | None:
        return self.lookup_next_hop(node, packet.dst)

    # broadcast ARP -----------------------------------------------------
    def arp_request(self, node: int, target: int) -> None:
        st = self.state[node]
        key = (node, st.arp_id)
        st.arp_id += 1
        st.arp_seen.add(key)
        self._flood_arp(node, (node, target, key[1]))

    def _flood_arp(self, node: int, body) -> None:
        frame = Frame(FrameKind.ARP_REQUEST, node, BROADCAST, self.arp_size, body, self.sim.now)
        self.sim.call_in(self.config.bcast_hop_delay, self.medium.broadcast, node, frame,
                         kind="arp-flood", target=node)

    def on_control(self, node: int, frame: Frame, sender: int) -> None:
        if frame.kind == FrameKind.OGM:
            self.handle_ogm(node, frame.payload, sender)
        elif frame.kind == FrameKind.ARP_REQUEST:
            requester, target, req_id = frame.payload
            st = self.state[node]
            if (requester, req_id) in st.arp_seen:
                return
            st.arp_seen.add((requester, req_id))
            if node == target:
                self.arp[node][requester] = requester
                self.send_routed(node, requester, FrameKind.ARP_REPLY, self.arp_size, node)
            else:
                self._flood_arp(node, frame.payload)

    def on_routed_control(self, node: int, packet: Packet, sender: int) -> None:
        if packet.kind == FrameKind.ARP_REPLY:
            self.arp_resolved(node, packet.body, packet.body)

    # convergence -------------------------------------------------------
    def routing_signature(self):
        return tuple(tuple((o, self.lookup_next_hop(n, o)) for o in sorted(st.originators))
                     for n, st in self.state.items())

    def reachability_complete(self) -> bool:
        nodes = self.net.nodes
        return all(self.lookup_next_hop(n, o) is not None
                   for n in nodes for o in nodes if o != n)

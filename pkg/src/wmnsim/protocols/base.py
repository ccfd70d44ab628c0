"""Shared forwarding and host ARP behaviour for the routing planes."""

from __future__ import annotations

from typing import TYPE_CHECKING

from ..radio import Frame, FrameKind
from ..traffic import Packet

if TYPE_CHECKING:
    from ..network import Network

APP_KINDS = (FrameKind.DATA, FrameKind.PROBE)


def shortest_routes(source: int, adjacency: dict[int, set[int]]) -> dict[int, tuple[int, int]]:
    """Hop-count routes from ``source``: destination -> (next hop, hops).

    Equal-length alternatives keep the lowest next-hop id.
    """
    routes: dict[int, tuple[int, int]] = {}
    frontier = []
    for n in sorted(adjacency.get(source, ())):
        if n != source:
            routes[n] = (n, 1)
            frontier.append(n)
    hops = 1
    while frontier:
        layer: dict[int, int] = {}
        for v in frontier:
            nh = routes[v][0]
            for w in adjacency.get(v, ()):
                if w == source or w in routes:
                    continue
                cur = layer.get(w)
                if cur is None or nh < cur:
                    layer[w] = nh
        hops += 1
        for w, nh in layer.items():
            routes[w] = (nh, hops)
        frontier = list(layer)
    return routes


class RoutingPlane:
    """Base class: per-hop forwarding plus an optional host ARP step.

    Subclasses implement ``next_hop`` and their control handlers. Planes
    that need address resolution set ``uses_arp`` and implement
    ``arp_request``; resolved packets then leave through ``forward``.
    """

    name = "base"
    uses_arp = False

    def __init__(self, net: "Network", arp_size: int = 28, arp_timeout: float = 1.0,
                 arp_retries: int = 3):
        self.net = net
        self.sim = net.sim
        self.medium = net.medium
        self.arp_size = arp_size
        self.arp_timeout = arp_timeout
        self.arp_retries = arp_retries
        self.arp: dict[int, dict[int, int]] = {n: {} for n in net.nodes}
        self._arp_queue: dict[tuple[int, int], list[Packet]] = {}
        self._arp_tries: dict[tuple[int, int], int] = {}

    # lifecycle ---------------------------------------------------------
    def start(self) -> None:
        raise NotImplementedError

    def routing_signature(self):
        """Hashable view of routing state, used for convergence detection."""
        raise NotImplementedError

    def reachability_complete(self) -> bool:
        return True

    # frames ------------------------------------------------------------
    def receive(self, node: int, frame: Frame, sender: int) -> None:
        if frame.kind in APP_KINDS or isinstance(frame.payload, Packet):
            self.on_packet(node, frame.payload, sender)
        else:
            self.on_control(node, frame, sender)

    def on_control(self, node: int, frame: Frame, sender: int) -> None:
        raise NotImplementedError

    def on_packet(self, node: int, packet: Packet, sender: int) -> None:
        if packet.dst == node:
            if packet.kind in APP_KINDS:
                self.net.deliver(node, packet)
            else:
                self.on_routed_control(node, packet, sender)
            return
        self.forward(node, packet)

    def on_routed_control(self, node: int, packet: Packet, sender: int) -> None:
        pass

    def on_app_delivery(self, node: int, packet: Packet) -> None:
        pass

    def next_hop(self, node: int, packet: Packet) -> int | None:
        raise NotImplementedError

    def forward(self, node: int, packet: Packet) -> None:
        packet.ttl -= 1
        if packet.ttl < 0:
            self.net.drop(packet, "ttl expired")
            return
        nh = self.next_hop(node, packet)
        if nh is None:
            self.net.drop(packet, "no route")
            return
        self.transmit(node, nh, packet)

    def transmit(self, node: int, nh: int, packet: Packet) -> None:
        self.medium.unicast(node, nh, Frame(packet.kind, node, nh, packet.size, packet,
                                            packet.sent_at))

    def send_routed(self, node: int, dst: int, kind: FrameKind, size: int, body) -> None:
        packet = Packet(-1, 0, node, dst, size, self.sim.now, kind, body=body)
        if dst == node:
            self.on_routed_control(node, packet, node)
        else:
            self.forward(node, packet)

    # host side ---------------------------------------------------------
    def originate(self, node: int, packet: Packet) -> None:
        if packet.dst == node:
            self.net.deliver(node, packet)
            return
        if not self.uses_arp or packet.dst in self.arp[node]:
            self.forward(node, packet)
            return
        key = (node, packet.dst)
        queue = self._arp_queue.get(key)
        if queue is not None:
            queue.append(packet)
            return
        self._arp_queue[key] = [packet]
        self._arp_tries[key] = 1
        self.arp_request(node, packet.dst)
        self.sim.call_in(self.arp_timeout, self._arp_expire, key, 1,
                         kind="arp-timeout", target=node)

    def arp_request(self, node: int, target: int) -> None:
        raise NotImplementedError

    def arp_resolved(self, node: int, target: int, binding: int) -> None:
        self.arp[node][target] = binding
        key = (node, target)
        queue = self._arp_queue.pop(key, None)
        self._arp_tries.pop(key, None)
        for packet in queue or ():
            self.forward(node, packet)

    def _arp_expire(self, key: tuple[int, int], attempt: int) -> None:
        if key not in self._arp_queue or self._arp_tries.get(key) != attempt:
            return
        if attempt >= self.arp_retries:
            for packet in self._arp_queue.pop(key):
                self.net.drop(packet, "arp timeout")
            self._arp_tries.pop(key, None)
            return
        self._arp_tries[key] = attempt + 1
        self.arp_request(*key)
        self.sim.call_in(self.arp_timeout, self._arp_expire, key, attempt + 1,
                         kind="arp-timeout", target=key[0])

    # helpers -----------------------------------------------------------
    def periodic(self, node: int, interval: float, phase: float, action, kind: str) -> None:
        """Run ``action(node)`` every ``interval`` seconds starting at ``phase``."""

        def tick(k: int) -> None:
            action(node)
            self.sim.call_at(phase + (k + 1) * interval, tick, k + 1, kind=kind, target=node)

        self.sim.call_at(phase, tick, 0, kind=kind, target=node)

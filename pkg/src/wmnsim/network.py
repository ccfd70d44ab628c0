"""A simulated mesh: scheduler, medium, node roles and one routing plane."""

from __future__ import annotations

from typing import TYPE_CHECKING, Callable

from .engine import RngStreams, Simulator
from .metrics import PacketRecord, RunLog
from .radio import Frame, FrameKind, Medium, RadioParams
from .traffic import Packet, Prober

if TYPE_CHECKING:
    from .protocols.base import RoutingPlane

BACKBONE = "backbone"
CLIENT = "client"


class Network:
    def __init__(self, roles: dict[int, str], position: Callable[[int, float], tuple[float, float]],
                 radio: RadioParams, seed: int, central: int, log_events: bool = False):
        self.sim = Simulator(log_events)
        self.rng = RngStreams(seed)
        self.log = RunLog()
        self.roles = dict(roles)
        self.nodes = sorted(roles)
        self.central = central
        self.position = position
        self.medium = Medium(self.sim, radio, position, self.nodes,
                             on_transmit=self.log.record_tx, on_drop=self._medium_drop,
                             static_nodes=getattr(position, "static", ()))
        self.records: dict[tuple[int, int], PacketRecord] = {}
        self.prober: Prober | None = None
        self.plane: RoutingPlane | None = None

    def is_client(self, node: int) -> bool:
        return self.roles[node] == CLIENT

    @property
    def clients(self) -> list[int]:
        return [n for n in self.nodes if self.roles[n] == CLIENT]

    @property
    def backbone(self) -> list[int]:
        return [n for n in self.nodes if self.roles[n] != CLIENT]

    def install(self, plane: "RoutingPlane") -> None:
        self.plane = plane
        for node in self.nodes:
            self.medium.attach(node, self._make_handler(node))

    def _make_handler(self, node: int):
        receive = self.plane.receive
        return lambda frame, sender: receive(node, frame, sender)

    def send_data(self, packet: Packet) -> None:
        record = PacketRecord(packet.flow_id, packet.seq, packet.sent_at, packet.size)
        self.records[(packet.flow_id, packet.seq)] = record
        self.plane.originate(packet.src, packet)

    def send_probe(self, packet: Packet) -> None:
        self.plane.originate(packet.src, packet)

    def deliver(self, node: int, packet: Packet) -> None:
        if packet.kind == FrameKind.DATA:
            record = self.records.get((packet.flow_id, packet.seq))
            if record is not None:
                record.deliver(self.sim.now)
            self.plane.on_app_delivery(node, packet)
        elif packet.kind == FrameKind.PROBE:
            if packet.body == "reply":
                if self.prober is not None and node == self.prober.source:
                    self.prober.on_reply(packet)
            else:
                reply = Packet(packet.flow_id, packet.seq, node, packet.src, packet.size,
                               self.sim.now, FrameKind.PROBE, body="reply")
                self.plane.originate(node, reply)

    def drop(self, packet: Packet, reason: str) -> None:
        if packet.kind == FrameKind.DATA:
            record = self.records.get((packet.flow_id, packet.seq))
            if record is not None:
                record.drop(self.sim.now, reason)
        elif packet.kind != FrameKind.PROBE:
            self.log.record_control_drop(reason)

    def _medium_drop(self, frame: Frame, reason: str) -> None:
        payload = frame.payload
        if isinstance(payload, Packet):
            self.drop(payload, reason)
        else:
            self.log.record_control_drop(reason)

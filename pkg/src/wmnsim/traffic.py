"""CBR/VBR flow generation and RTT probing."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

from .radio import FrameKind

if TYPE_CHECKING:
    from .network import Network


@dataclass(frozen=True)
class TrafficConfig:
    model: str = "CBR"
    rate_mean: float = 50.0
    packet_size: int = 1400
    vbr_size: tuple[int, int] = (64, 1400)
    start: float = 60.0
    stop: float = 180.0
    probe_count: int = 100
    probe_size: int = 64
    probe_interval: float = 0.1
    probe_timeout: float = 1.0

    def __post_init__(self):
        if self.model not in ("CBR", "VBR"):
            raise ValueError(f"model: unknown traffic model {self.model!r}")
        if self.rate_mean <= 0:
            raise ValueError("rate_mean: must be positive")
        if self.vbr_size[0] > self.vbr_size[1]:
            raise ValueError("vbr_size: min must not exceed max")
        if not self.start < self.stop:
            raise ValueError("start/stop: start must precede stop")
        if self.probe_count < 0:
            raise ValueError("probe_count: must be >= 0")


@dataclass(slots=True)
class Packet:
    flow_id: int
    seq: int
    src: int
    dst: int
    size: int
    sent_at: float
    kind: FrameKind = FrameKind.DATA
    ttl: int = 32
    body: Any = None


@dataclass(frozen=True)
class FlowSpec:
    flow_id: int
    src: int
    dst: int


def next_departure(config: TrafficConfig, rng: random.Random) -> tuple[float, int]:
    """Inter-departure time and size of the next packet."""
    if config.model == "CBR":
        return 1.0 / config.rate_mean, config.packet_size
    lo, hi = config.vbr_size
    return rng.expovariate(config.rate_mean), rng.randint(lo, hi)


def spawn_flows(source: int, clients: list[int]) -> list[FlowSpec]:
    """One unidirectional flow from the central node to every mobile client."""
    return [FlowSpec(i, source, c) for i, c in enumerate(clients)]


class FlowSource:
    """Drives one flow's departures between ``start`` and ``stop``.

    CBR departures land exactly on ``start + k / rate``; VBR accumulates
    exponential gaps.
    """

    def __init__(self, net: "Network", spec: FlowSpec, config: TrafficConfig,
                 rng: random.Random, start: float, stop: float):
        self.net = net
        self.spec = spec
        self.config = config
        self.rng = rng
        self.start = start
        self.stop = stop
        self.seq = 0
        self._next_size = config.packet_size

    def begin(self) -> None:
        if self.config.model == "VBR":
            lo, hi = self.config.vbr_size
            self._next_size = self.rng.randint(lo, hi)
        self.net.sim.call_at(self.start, self._depart, kind="traffic", target=self.spec.src)

    def _depart(self) -> None:
        now = self.net.sim.now
        spec = self.spec
        self.net.send_data(Packet(spec.flow_id, self.seq, spec.src, spec.dst,
                                  self._next_size, now))
        self.seq += 1
        if self.config.model == "CBR":
            at = self.start + self.seq / self.config.rate_mean
        else:
            idt, self._next_size = next_departure(self.config, self.rng)
            at = now + idt
        if at < self.stop:
            self.net.sim.call_at(at, self._depart, kind="traffic", target=spec.src)


class Prober:
    """Sequential request/response probes; sample i is the round trip of probe i.

    Probe i+1 leaves ``probe_interval`` after probe i was answered or timed
    out, so each sample sees the routing state left by the previous one.
    """

    FLOW_ID = -2

    def __init__(self, net: "Network", source: int, target: int, config: TrafficConfig,
                 start: float):
        self.net = net
        self.source = source
        self.target = target
        self.config = config
        self.start = start
        self.samples: list[float | None] = [None] * config.probe_count
        self._outstanding: tuple[int, float, Any] | None = None

    def begin(self) -> None:
        if self.config.probe_count:
            self.net.sim.call_at(self.start, self._send, 0, kind="probe", target=self.source)

    def _send(self, i: int) -> None:
        now = self.net.sim.now
        timer = self.net.sim.call_in(self.config.probe_timeout, self._expire, i,
                                     kind="probe-timeout", target=self.source)
        self._outstanding = (i, now, timer)
        self.net.send_probe(Packet(self.FLOW_ID, i, self.source, self.target,
                                   self.config.probe_size, now, FrameKind.PROBE))

    def _next(self, i: int) -> None:
        self._outstanding = None
        if i + 1 < self.config.probe_count:
            self.net.sim.call_in(self.config.probe_interval, self._send, i + 1,
                                 kind="probe", target=self.source)

    def _expire(self, i: int) -> None:
        if self._outstanding is not None and self._outstanding[0] == i:
            self._next(i)

    def on_reply(self, packet: Packet) -> None:
        if self._outstanding is None or self._outstanding[0] != packet.seq:
            return
        i, sent, timer = self._outstanding
        timer.cancelled = True
        self.samples[i] = self.net.sim.now - sent
        self._next(i)

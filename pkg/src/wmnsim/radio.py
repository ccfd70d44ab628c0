"""Link budget, frames and the idealized broadcast medium."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from .engine import Simulator

SPEED_OF_LIGHT = 2.998e8
BROADCAST = -1
MIN_FRAME_SIZE = 28


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = 20.0
    rx_sensitivity_dbm: float = -90.0
    gain_tx_dbi: float = 1.0
    gain_rx_dbi: float = 1.0
    frequency_hz: float = 2.4e9
    phy_rate_bps: float = 54e6
    range_override_m: float | None = 150.0

    def __post_init__(self):
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("tx_power_dbm must be finite")
        if not self.rx_sensitivity_dbm < self.tx_power_dbm:
            raise ValueError("rx_sensitivity_dbm must be below tx_power_dbm")
        if self.frequency_hz <= 0:
            raise ValueError("frequency_hz must be positive")
        if self.phy_rate_bps <= 0:
            raise ValueError("phy_rate_bps must be positive")
        if self.range_override_m is not None and self.range_override_m <= 0:
            raise ValueError("range_override_m must be positive")


class FrameKind(enum.IntEnum):
    HELLO = 0
    TC = 1
    OGM = 2
    GRAPH_REPORT = 3
    PACKET_IN = 4
    FLOW_MOD = 5
    GRATUITOUS_ARP = 6
    ARP_REQUEST = 7
    ARP_REPLY = 8
    DATA = 9
    PROBE = 10
    REPORT_ACK = 11

    @property
    def is_control(self) -> bool:
        return self not in (FrameKind.DATA, FrameKind.PROBE)


@dataclass(slots=True)
class Frame:
    kind: FrameKind
    src: int
    dst: int
    size: int
    payload: Any = None
    born_at: float = 0.0

    def __post_init__(self):
        if self.size < MIN_FRAME_SIZE:
            raise ValueError(f"frame size {self.size} below {MIN_FRAME_SIZE} bytes")


def frame_size(message_bytes: int) -> int:
    """On-air size of a protocol message, padded up to the minimal frame."""
    return max(message_bytes, MIN_FRAME_SIZE)


def fspl_db(distance_m: float, frequency_hz: float) -> float:
    """Free-space path loss in dB."""
    return (20 * math.log10(distance_m) + 20 * math.log10(frequency_hz)
            + 20 * math.log10(4 * math.pi / SPEED_OF_LIGHT))


def received_power(params: RadioParams, distance_m: float) -> float:
    if distance_m <= 0:
        raise ValueError("received power is undefined at distance <= 0")
    return (params.tx_power_dbm + params.gain_tx_dbi + params.gain_rx_dbi
            - fspl_db(distance_m, params.frequency_hz))


def fspl_range(params: RadioParams) -> float:
    """Distance at which the free-space budget meets the sensitivity."""
    budget = (params.tx_power_dbm + params.gain_tx_dbi + params.gain_rx_dbi
              - params.rx_sensitivity_dbm)
    exponent = (budget - 20 * math.log10(params.frequency_hz)
                - 20 * math.log10(4 * math.pi / SPEED_OF_LIGHT)) / 20
    return 10 ** exponent


def in_range(params: RadioParams, distance_m: float) -> bool:
    if params.range_override_m is not None:
        return distance_m <= params.range_override_m
    if distance_m <= 0:
        return True
    return received_power(params, distance_m) >= params.rx_sensitivity_dbm


def link_up(a: int, b: int, params: RadioParams,
            positions: Mapping[int, tuple[float, float]]) -> bool:
    if a == b:
        raise ValueError("link_up needs two distinct nodes")
    return in_range(params, math.dist(positions[a], positions[b]))


def tx_delay(params: RadioParams, size: int) -> float:
    return size * 8 / params.phy_rate_bps


class Medium:
    """Idealized shared channel: no contention, collisions or retransmission.

    Positions are sampled at transmission start. Each receiver gets the frame
    after serialization plus its own propagation delay.
    """

    def __init__(self, sim: Simulator, params: RadioParams,
                 position: Callable[[int, float], tuple[float, float]],
                 nodes: list[int],
                 on_transmit: Callable[[float, int, Frame], None] | None = None,
                 on_drop: Callable[[Frame, str], None] | None = None,
                 static_nodes: Iterable[int] = ()):
        self.sim = sim
        self.params = params
        self.position = position
        self.nodes = list(nodes)
        self.alive = set(nodes)
        self.handlers: dict[int, Callable[[Frame, int], None]] = {}
        self.on_transmit = on_transmit
        self.on_drop = on_drop
        self._range = params.range_override_m
        self.broadcasts = 0
        self.unicasts = 0
        # neighbour pairs among fixed nodes never change, so compute them once
        self._static = set(static_nodes) & set(self.nodes)
        self._mobile = [n for n in self.nodes if n not in self._static]
        self._static_links: dict[int, list[tuple[int, float]]] | None = None
        self._fixed: dict[int, tuple[float, float]] | None = None
        self._snap_t = math.nan
        self._snap: list[tuple[int, float, float]] = []

    def attach(self, node: int, handler: Callable[[Frame, int], None]) -> None:
        self.handlers[node] = handler

    def distance(self, a: int, b: int, t: float | None = None) -> float:
        t = self.sim.now if t is None else t
        return math.dist(self.position(a, t), self.position(b, t))

    def _up(self, d: float) -> bool:
        if self._range is not None:
            return d <= self._range
        return in_range(self.params, d)

    def link_up(self, a: int, b: int, t: float | None = None) -> bool:
        if a == b:
            raise ValueError("link_up needs two distinct nodes")
        if a not in self.alive or b not in self.alive:
            return False
        return self._up(self.distance(a, b, t))

    def _static_neighbors(self) -> dict[int, list[tuple[int, float]]]:
        if self._static_links is None:
            links = {n: [] for n in self._static}
            fixed = sorted(self._static)
            for i, a in enumerate(fixed):
                pa = self.position(a, 0.0)
                for b in fixed[i + 1:]:
                    d = math.dist(pa, self.position(b, 0.0))
                    if self._up(d):
                        links[a].append((b, d))
                        links[b].append((a, d))
            self._static_links = links
        return self._static_links

    def _static_positions(self) -> dict[int, tuple[float, float]]:
        if self._fixed is None:
            self._fixed = {n: self.position(n, 0.0) for n in sorted(self._static)}
        return self._fixed

    def _mobile_positions(self, t: float) -> list[tuple[int, float, float]]:
        if t != self._snap_t:
            many = getattr(self.position, "many", None)
            if many is not None:
                self._snap = many(self._mobile, t)
            else:
                position = self.position
                self._snap = [(n, *position(n, t)) for n in self._mobile]
            self._snap_t = t
        return self._snap

    def neighbors(self, a: int, t: float | None = None) -> list[tuple[int, float]]:
        t = self.sim.now if t is None else t
        alive = self.alive
        if a in self._static:
            out = [(n, d) for n, d in self._static_neighbors()[a] if n in alive]
        else:
            out = []
            ax, ay = self.position(a, t)
            for n, (bx, by) in self._static_positions().items():
                if n in alive:
                    d = math.hypot(ax - bx, ay - by)
                    if self._up(d):
                        out.append((n, d))
        if a in self._static:
            ax, ay = self.position(a, t)
        up = self._up
        for n, bx, by in self._mobile_positions(t):
            if n == a or n not in alive:
                continue
            d = math.hypot(ax - bx, ay - by)
            if up(d):
                out.append((n, d))
        return out

    def broadcast(self, src: int, frame: Frame) -> list[tuple[int, float]]:
        if src not in self.alive:
            raise ValueError(f"node {src} is not alive")
        now = self.sim.now
        if self.on_transmit is not None:
            self.on_transmit(now, src, frame)
        self.broadcasts += 1
        base = now + frame.size * 8 / self.params.phy_rate_bps
        deliveries = []
        call_at = self.sim.call_at
        for rx, d in self.neighbors(src, now):
            at = base + d / SPEED_OF_LIGHT
            call_at(at, self._deliver, rx, frame, src, kind=frame.kind.name, target=rx)
            deliveries.append((rx, at))
        return deliveries

    def unicast(self, src: int, next_hop: int, frame: Frame) -> float | None:
        if next_hop == src:
            raise ValueError("unicast to self is not a link")
        now = self.sim.now
        if self.on_transmit is not None:
            self.on_transmit(now, src, frame)
        self.unicasts += 1
        if next_hop not in self.alive or src not in self.alive:
            d = math.inf
        else:
            d = self.distance(src, next_hop, now)
        if not self._up(d):
            if self.on_drop is not None:
                self.on_drop(frame, "stale next hop")
            return None
        at = now + frame.size * 8 / self.params.phy_rate_bps + d / SPEED_OF_LIGHT
        self.sim.call_at(at, self._deliver, next_hop, frame, src,
                         kind=frame.kind.name, target=next_hop)
        return at

    def _deliver(self, rx: int, frame: Frame, sender: int) -> None:
        handler = self.handlers.get(rx)
        if handler is not None and rx in self.alive:
            handler(frame, sender)

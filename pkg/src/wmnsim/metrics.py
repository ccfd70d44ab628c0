"""Packet loss, control overhead, RTT split and Student-t intervals."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

from scipy import stats

from .radio import FrameKind

DELIVERED = "delivered"
DROPPED = "dropped"
IN_FLIGHT = "in_flight"


@dataclass(slots=True)
class PacketRecord:
    flow_id: int
    sequence: int
    sent_at: float
    size: int
    outcome: str = IN_FLIGHT
    at: float | None = None
    reason: str | None = None

    def deliver(self, at: float) -> None:
        if self.outcome == IN_FLIGHT:
            self.outcome = DELIVERED
            self.at = at

    def drop(self, at: float, reason: str) -> None:
        if self.outcome == IN_FLIGHT:
            self.outcome = DROPPED
            self.at = at
            self.reason = reason


@dataclass(frozen=True, slots=True)
class ControlTx:
    time: float
    node: int
    kind: FrameKind
    size: int


@dataclass
class RunLog:
    """Everything a run measures; metrics are recomputed from this alone."""

    control: list[ControlTx] = field(default_factory=list)
    packets: list[PacketRecord] = field(default_factory=list)
    rtt: list[float | None] = field(default_factory=list)
    arp_broadcasts: int = 0
    control_drops: dict[str, int] = field(default_factory=dict)

    def record_tx(self, time: float, node: int, frame) -> None:
        kind = frame.kind
        if kind.is_control:
            self.control.append(ControlTx(time, node, kind, frame.size))
            if kind == FrameKind.ARP_REQUEST and frame.dst < 0:
                self.arp_broadcasts += 1

    def record_control_drop(self, reason: str) -> None:
        self.control_drops[reason] = self.control_drops.get(reason, 0) + 1


def packet_loss(records: Iterable[PacketRecord]) -> float | None:
    delivered = dropped = 0
    for r in records:
        if r.outcome == DELIVERED:
            delivered += 1
        elif r.outcome == DROPPED:
            dropped += 1
    if delivered + dropped == 0:
        return None
    return 100.0 * dropped / (delivered + dropped)


def control_overhead(frames: Iterable[ControlTx], window: tuple[float, float]) -> float:
    """Aggregate control rate in kb/s over ``[start, end)``, every transmission counted."""
    start, end = window
    if not end > start:
        raise ValueError("control_overhead needs a non-empty window")
    bits = sum(f.size * 8 for f in frames if f.kind.is_control and start <= f.time < end)
    return bits / (end - start) / 1000.0


def rtt_split(samples: Sequence[float | None]) -> tuple[float | None, float | None]:
    """First sample is the slowpath; the rest average into the fastpath.

    ``None`` marks a timed-out probe and is left out of both figures.
    """
    if not samples or all(s is None for s in samples):
        return None, None
    slow = samples[0]
    rest = [s for s in samples[1:] if s is not None]
    fast = statistics.fmean(rest) if rest else None
    return slow, fast


@dataclass(frozen=True)
class CiResult:
    mean: float
    half_width: float | None
    n: int
    level: float = 0.95

    @property
    def low(self) -> float | None:
        return None if self.half_width is None else self.mean - self.half_width

    @property
    def high(self) -> float | None:
        return None if self.half_width is None else self.mean + self.half_width

    def overlaps(self, other: "CiResult") -> bool:
        return self.low <= other.high and other.low <= self.high


def confidence_interval(samples: Sequence[float], level: float = 0.95) -> CiResult:
    n = len(samples)
    if n < 2:
        raise ValueError("confidence_interval needs at least two samples")
    mean = statistics.fmean(samples)
    sd = statistics.stdev(samples)
    t = stats.t.ppf(0.5 + level / 2, n - 1)
    return CiResult(mean, t * sd / math.sqrt(n), n, level)


def summarize(samples: Sequence[float | None], level: float = 0.95) -> CiResult | None:
    """CI over the present values; n=1 gives a mean with no half-width."""
    values = [s for s in samples if s is not None]
    if not values:
        return None
    if len(values) == 1:
        return CiResult(values[0], None, 1, level)
    return confidence_interval(values, level)


@dataclass
class RunSummary:
    protocol: str
    topology: str
    mobility: str
    traffic: str
    seed: int
    loss_pct: float | None
    control_kbps: float
    slowpath_ms: float | None
    fastpath_ms: float | None

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

"""Deterministic discrete-event scheduler and seeded random streams."""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Any, Callable, Hashable

GLOBAL = -1


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class Event:
    """A pending callback.

    ``target`` is a node id (or ``GLOBAL``) and ``kind`` a short label; both
    only matter for the event log. Events with equal ``fire_at`` dispatch in
    ``sequence`` order, which the scheduler assigns on insertion.
    """

    __slots__ = ("fire_at", "sequence", "target", "kind", "action", "args", "cancelled")

    def __init__(self, fire_at: float, action: Callable[..., Any], args: tuple = (),
                 kind: str = "event", target: int = GLOBAL):
        self.fire_at = fire_at
        self.sequence = -1
        self.target = target
        self.kind = kind
        self.action = action
        self.args = args
        self.cancelled = False

    def __repr__(self) -> str:
        return f"Event({self.fire_at!r}, seq={self.sequence}, {self.kind}@{self.target})"


class Simulator:
    """Single-threaded event loop over continuous time in seconds."""

    def __init__(self, log_events: bool = False):
        self.now = 0.0
        self._queue: list[tuple[float, int, Event]] = []
        self._sequence = 0
        self.dispatched = 0
        self.log: list[str] | None = [] if log_events else None

    def schedule(self, event: Event) -> Event:
        if event.fire_at < self.now:
            raise SchedulingError(
                f"event {event.kind} at {event.fire_at} precedes clock {self.now}")
        event.sequence = self._sequence
        self._sequence += 1
        heapq.heappush(self._queue, (event.fire_at, event.sequence, event))
        return event

    def call_at(self, when: float, action: Callable[..., Any], *args,
                kind: str = "event", target: int = GLOBAL) -> Event:
        if when < self.now:
            raise SchedulingError(f"event {kind} at {when} precedes clock {self.now}")
        event = Event(when, action, args, kind, target)
        event.sequence = seq = self._sequence
        self._sequence = seq + 1
        heapq.heappush(self._queue, (when, seq, event))
        return event

    def call_in(self, delay: float, action: Callable[..., Any], *args,
                kind: str = "event", target: int = GLOBAL) -> Event:
        return self.call_at(self.now + delay, action, *args, kind=kind, target=target)

    @staticmethod
    def cancel(event: Event) -> None:
        event.cancelled = True

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def run_until(self, end: float) -> int:
        """Dispatch every event with ``fire_at <= end``; leave the clock at ``end``."""
        queue = self._queue
        log = self.log
        count = 0
        pop = heapq.heappop
        while queue and queue[0][0] <= end:
            fire_at, _, event = pop(queue)
            if event.cancelled:
                continue
            self.now = fire_at
            if log is not None:
                log.append(f"{fire_at:.9f} {event.sequence} {event.kind} {event.target}")
            event.action(*event.args)
            count += 1
        if end > self.now:
            self.now = end
        self.dispatched += count
        return count


def derive_seed(seed: int, label: str, node: Hashable = None) -> int:
    digest = hashlib.blake2b(f"{seed}|{label}|{node}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class RngStreams:
    """Independent ``random.Random`` streams keyed by (seed, purpose, node).

    Adding a new consumer never perturbs existing streams, so mobility and
    traffic draws stay paired across protocols for the same seed.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[tuple[str, Hashable], random.Random] = {}

    def stream(self, label: str, node: Hashable = None) -> random.Random:
        key = (label, node)
        rng = self._streams.get(key)
        if rng is None:
            rng = random.Random(derive_seed(self.seed, label, node))
            self._streams[key] = rng
        return rng

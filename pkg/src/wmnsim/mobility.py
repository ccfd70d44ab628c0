"""Random Waypoint and Reference Point Group mobility, plus trace replay.

Traces are piecewise linear: each node has waypoints ``(t, x, y)`` with
strictly increasing times. The text format is one line per node holding
whitespace-separated ``t x y`` triples, which is what BonnMotion writes
for its native movement files.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field

Waypoint = tuple[float, float, float]


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MobilityConfig:
    model: str = "RWP"
    min_speed: float = 2.0
    max_speed: float = 6.0
    pause: float = 0.0
    area: tuple[float, float] = (400.0, 360.0)
    warmup_discard: float = 900.0
    group_size_mean: float = 3.0
    group_deviation_radius: float = 30.0

    def __post_init__(self):
        if self.model not in ("RWP", "RPGM"):
            raise ValueError(f"model: unknown mobility model {self.model!r}")
        if not 0 < self.min_speed <= self.max_speed:
            raise ValueError("min_speed/max_speed: need 0 < min_speed <= max_speed")
        if self.pause < 0:
            raise ValueError("pause: must be >= 0")
        if self.warmup_discard < 0:
            raise ValueError("warmup_discard: must be >= 0")
        if self.group_size_mean < 1:
            raise ValueError("group_size_mean: must be >= 1")
        if self.group_deviation_radius < 0:
            raise ValueError("group_deviation_radius: must be >= 0")


@dataclass
class MobilityTrace:
    duration: float
    waypoints: dict[int, list[Waypoint]] = field(default_factory=dict)
    groups: list[list[int]] | None = None

    def __post_init__(self):
        self._times = {n: [w[0] for w in wps] for n, wps in self.waypoints.items()}

    @property
    def nodes(self) -> list[int]:
        return sorted(self.waypoints)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MobilityTrace):
            return NotImplemented
        return self.duration == other.duration and self.waypoints == other.waypoints

    def position_at(self, node: int, t: float) -> tuple[float, float]:
        return position_at(self, node, t)


def position_at(trace: MobilityTrace, node: int, t: float) -> tuple[float, float]:
    wps = trace.waypoints[node]
    if t < wps[0][0] or t > wps[-1][0]:
        raise ValueError(f"t={t} outside trace span [{wps[0][0]}, {wps[-1][0]}]")
    times = trace._times[node]
    i = bisect.bisect_right(times, t)
    if i >= len(wps):
        return wps[-1][1], wps[-1][2]
    t0, x0, y0 = wps[i - 1]
    t1, x1, y1 = wps[i]
    f = (t - t0) / (t1 - t0)
    return x0 + f * (x1 - x0), y0 + f * (y1 - y0)


def _uniform_point(rng: random.Random, area: tuple[float, float]) -> tuple[float, float]:
    return rng.uniform(0.0, area[0]), rng.uniform(0.0, area[1])


def _walk(rng: random.Random, config: MobilityConfig, horizon: float) -> list[Waypoint]:
    """One node's RWP path from t=0 until past ``horizon``."""
    x, y = _uniform_point(rng, config.area)
    t = 0.0
    path = [(t, x, y)]
    while t < horizon:
        dx, dy = _uniform_point(rng, config.area)
        speed = rng.uniform(config.min_speed, config.max_speed)
        dist = math.hypot(dx - x, dy - y)
        if dist == 0.0:
            continue
        t += dist / speed
        x, y = dx, dy
        path.append((t, x, y))
        if config.pause > 0:
            t += config.pause
            path.append((t, x, y))
    return path


def _cut(path: list[Waypoint], start: float, end: float) -> list[Waypoint]:
    """Restrict a path to [start, end] and re-base its clock to 0."""
    tmp = MobilityTrace(path[-1][0], {0: path})
    out = [(0.0, *tmp.position_at(0, start))]
    for t, x, y in path:
        if start < t < end:
            out.append((t - start, x, y))
    out.append((end - start, *tmp.position_at(0, end)))
    return out


def generate_rwp(config: MobilityConfig, n_nodes: int, duration: float,
                 rng: random.Random) -> MobilityTrace:
    if duration <= 0:
        raise ValueError("duration must be positive")
    horizon = config.warmup_discard + duration
    waypoints = {}
    for node in range(n_nodes):
        path = _walk(rng, config, horizon)
        waypoints[node] = _cut(path, config.warmup_discard, horizon)
    return MobilityTrace(duration, waypoints)


def partition_groups(n_nodes: int, mean: float, rng: random.Random) -> list[list[int]]:
    """Split nodes into groups with sizes drawn from {m-1, m, m+1}.

    A draw that would leave fewer than two nodes behind absorbs the rest, so
    no trailing singleton group is created.
    """
    m = max(1, round(mean))
    choices = [s for s in (m - 1, m, m + 1) if s >= 1]
    groups = []
    start = 0
    while start < n_nodes:
        size = rng.choice(choices)
        remaining = n_nodes - start
        if remaining - size < 2:
            size = remaining
        groups.append(list(range(start, start + size)))
        start += size
    return groups


def _offset(rng: random.Random, radius: float) -> tuple[float, float]:
    if radius == 0:
        return 0.0, 0.0
    r = radius * math.sqrt(rng.random())
    a = rng.uniform(0.0, 2 * math.pi)
    return r * math.cos(a), r * math.sin(a)


def generate_rpgm(config: MobilityConfig, n_nodes: int, duration: float,
                  rng: random.Random) -> MobilityTrace:
    if n_nodes < 1:
        raise ValueError("RPGM needs at least one node")
    if duration <= 0:
        raise ValueError("duration must be positive")
    horizon = config.warmup_discard + duration
    w, h = config.area
    groups = partition_groups(n_nodes, config.group_size_mean, rng)
    waypoints = {}
    for members in groups:
        reference = _cut(_walk(rng, config, horizon), config.warmup_discard, horizon)
        for node in members:
            path = []
            for t, x, y in reference:
                ox, oy = _offset(rng, config.group_deviation_radius)
                path.append((t, min(w, max(0.0, x + ox)), min(h, max(0.0, y + oy))))
            waypoints[node] = path
    return MobilityTrace(duration, waypoints, groups)


def generate(config: MobilityConfig, n_nodes: int, duration: float,
             rng: random.Random) -> MobilityTrace:
    if config.model == "RWP":
        return generate_rwp(config, n_nodes, duration, rng)
    return generate_rpgm(config, n_nodes, duration, rng)


def stationary_trace(positions: list[tuple[float, float]], duration: float) -> MobilityTrace:
    return MobilityTrace(duration, {
        i: [(0.0, x, y), (duration, x, y)] for i, (x, y) in enumerate(positions)})


def export_trace(trace: MobilityTrace) -> str:
    lines = []
    for node in trace.nodes:
        lines.append(" ".join(f"{t!r} {x!r} {y!r}" for t, x, y in trace.waypoints[node]))
    return "\n".join(lines) + "\n"


def import_trace(text: str) -> MobilityTrace:
    waypoints: dict[int, list[Waypoint]] = {}
    node = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or line.lstrip().startswith("#"):
            continue
        if len(fields) % 3:
            raise TraceFormatError(
                f"line {lineno}: expected repeating 't x y' triples, got {len(fields)} fields")
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        wps = [tuple(values[i:i + 3]) for i in range(0, len(values), 3)]
        if any(b[0] <= a[0] for a, b in zip(wps, wps[1:])):
            raise TraceFormatError(f"line {lineno}: waypoint times must strictly increase")
        if len(wps) == 1:
            raise TraceFormatError(f"line {lineno}: need at least two waypoints")
        waypoints[node] = wps
        node += 1
    if not waypoints:
        raise TraceFormatError("trace is empty")
    duration = max(w[-1][0] for w in waypoints.values())
    return MobilityTrace(duration, waypoints)


class NodePositions:
    """Where every node is at simulation time ``t``.

    Backbone nodes are fixed. Mobile nodes hold their trace's initial
    position until ``mobility_start``, follow the trace for its duration,
    then stay at the final waypoint.
    """

    def __init__(self, static: dict[int, tuple[float, float]],
                 trace: MobilityTrace | None = None,
                 trace_nodes: dict[int, int] | None = None):
        self.static = dict(static)
        self.trace = trace
        self.trace_nodes = trace_nodes or {}
        self.mobility_start = math.inf
        self._cursor: dict[int, int] = {}
        self._initial = {}
        self._paths = {}
        if trace is not None:
            for node, tnode in self.trace_nodes.items():
                t0, x, y = trace.waypoints[tnode][0]
                self._initial[node] = (x, y)
                self._paths[node] = trace.waypoints[tnode]

    def initial(self, node: int) -> tuple[float, float]:
        if node in self.static:
            return self.static[node]
        return self._initial[node]

    def __call__(self, node: int, t: float) -> tuple[float, float]:
        pos = self.static.get(node)
        if pos is not None:
            return pos
        tau = t - self.mobility_start
        if tau <= 0.0:
            return self._initial[node]
        return self._moving(node, tau)

    def many(self, nodes: list[int], t: float) -> list[tuple[int, float, float]]:
        """Positions of several mobile nodes at one instant."""
        tau = t - self.mobility_start
        if tau <= 0.0:
            initial = self._initial
            return [(n, *initial[n]) for n in nodes]
        out = []
        cursor = self._cursor
        for n in nodes:
            wps = self._paths[n]
            i = cursor.get(n, 1)
            if wps[i - 1][0] > tau:
                i = 1
            last = len(wps) - 1
            while i < last and wps[i][0] < tau:
                i += 1
            cursor[n] = i
            t0, x0, y0 = wps[i - 1]
            t1, x1, y1 = wps[i]
            if tau >= t1:
                out.append((n, x1, y1))
            else:
                f = (tau - t0) / (t1 - t0)
                out.append((n, x0 + f * (x1 - x0), y0 + f * (y1 - y0)))
        return out

    def _moving(self, node: int, tau: float) -> tuple[float, float]:
        wps = self.trace.waypoints[self.trace_nodes[node]]
        if tau >= wps[-1][0]:
            return wps[-1][1], wps[-1][2]
        cursor = self._cursor
        i = cursor.get(node, 1)
        if wps[i - 1][0] > tau:
            i = 1
        while wps[i][0] < tau:
            i += 1
        cursor[node] = i
        t0, x0, y0 = wps[i - 1]
        t1, x1, y1 = wps[i]
        f = (tau - t0) / (t1 - t0)
        return x0 + f * (x1 - x0), y0 + f * (y1 - y0)

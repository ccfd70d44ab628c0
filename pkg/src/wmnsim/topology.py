"""Backbone layouts for T1/T2/T3 and custom grids, plus geometry checks."""

from __future__ import annotations

import functools
import math
import random
from collections import deque
from dataclasses import dataclass


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    n_nodes: int
    area: tuple[float, float]
    backbone: tuple[tuple[float, float], ...]
    diameter: int


# Frozen backbone placements. Every layout keeps backbone links at most 135 m
# and non-links at least 165 m apart, so the hop structure is robust to small
# range changes around 150 m.
LAYOUTS = {
    "T1": Layout(10, (240.0, 360.0),
                 ((120, 0), (120, 90), (120, 180), (120, 270), (120, 360)), 4),
    "T2": Layout(20, (400.0, 360.0),
                 ((40, 200), (80, 100), (120, 360), (160, 20), (200, 360),
                  (240, 300), (280, 80), (300, 200), (320, 320), (360, 100)), 6),
    "T3": Layout(30, (560.0, 360.0),
                 ((0, 60), (0, 240), (40, 120), (80, 0), (120, 80), (120, 200),
                  (180, 280), (260, 360), (300, 280), (340, 0), (360, 180),
                  (380, 360), (440, 20), (460, 140), (480, 340)), 8),
}


@dataclass
class Topology:
    name: str
    area: tuple[float, float]
    backbone: list[tuple[float, float]]
    clients: list[tuple[float, float]]
    central: int
    radio_range: float

    @property
    def n_backbone(self) -> int:
        return len(self.backbone)

    @property
    def n_nodes(self) -> int:
        return len(self.backbone) + len(self.clients)

    @property
    def client_ids(self) -> list[int]:
        return list(range(self.n_backbone, self.n_nodes))

    def positions(self) -> dict[int, tuple[float, float]]:
        return dict(enumerate(self.backbone + self.clients))


def grid_layout(rows: int, cols: int, area: tuple[float, float]) -> list[tuple[float, float]]:
    """``rows`` x ``cols`` points spanning the area edge to edge."""
    if rows < 1 or cols < 1:
        raise TopologyError("grid needs at least one row and one column")
    w, h = area
    xs = [w / 2] if cols == 1 else [w * i / (cols - 1) for i in range(cols)]
    ys = [h / 2] if rows == 1 else [h * j / (rows - 1) for j in range(rows)]
    return [(x, y) for y in ys for x in xs]


def adjacency(points: list[tuple[float, float]], radio_range: float) -> dict[int, set[int]]:
    adj = {i: set() for i in range(len(points))}
    for i, p in enumerate(points):
        for j in range(i + 1, len(points)):
            if math.dist(p, points[j]) <= radio_range:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def hop_distances(adj: dict[int, set[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def diameter(adj: dict[int, set[int]]) -> int | None:
    """Hop diameter, or None when the graph is disconnected."""
    best = 0
    for v in adj:
        dist = hop_distances(adj, v)
        if len(dist) < len(adj):
            return None
        best = max(best, max(dist.values()))
    return best


def coverage_radius(points: list[tuple[float, float]], area: tuple[float, float],
                    step: float = 2.0) -> float:
    """Largest distance from a sampled area point to its nearest backbone node."""
    w, h = area
    nx, ny = int(w // step) + 1, int(h // step) + 1
    worst = 0.0
    for i in range(nx):
        x = min(w, i * step)
        for j in range(ny):
            y = min(h, j * step)
            worst = max(worst, min(math.dist((x, y), p) for p in points))
    return worst


def central_node(adj: dict[int, set[int]], points: list[tuple[float, float]],
                 area: tuple[float, float]) -> int:
    """Minimum eccentricity, then closest to the area centre, then lowest id."""
    centre = (area[0] / 2, area[1] / 2)
    return min(adj, key=lambda v: (max(hop_distances(adj, v).values()),
                                   math.dist(points[v], centre), v))


def check_backbone(points: list[tuple[float, float]], area: tuple[float, float],
                   radio_range: float, target_diameter: int | None = None) -> int:
    return _check_backbone(tuple(points), tuple(area), radio_range, target_diameter)


@functools.lru_cache(maxsize=64)
def _check_backbone(points, area, radio_range, target_diameter) -> int:
    adj = adjacency(list(points), radio_range)
    d = diameter(adj)
    if d is None:
        raise TopologyError("backbone graph is disconnected at this radio range")
    if target_diameter is not None and d != target_diameter:
        raise TopologyError(f"backbone diameter {d} differs from required {target_diameter}")
    if coverage_radius(points, area) > radio_range:
        raise TopologyError("backbone does not cover the whole area at this radio range")
    return d


def build_topology(name: str, radio_range: float, rng: random.Random,
                   n_nodes: int | None = None, area: tuple[float, float] | None = None,
                   backbone: list[tuple[float, float]] | None = None,
                   grid: tuple[int, int] | None = None,
                   target_diameter: int | None = None,
                   n_clients: int | None = None, central: int | None = None) -> Topology:
    """Backbone positions plus uniformly placed clients.

    Named layouts use ``LAYOUTS``. A custom topology gives either explicit
    ``backbone`` positions or a ``grid`` of (rows, cols). Half the nodes
    (rounded up) are backbone unless ``n_clients`` overrides the split.
    Explicit positions are only checked for connectivity (and the diameter
    when one is given), since they often describe a partial scene.
    """
    explicit = False
    if name in LAYOUTS:
        layout = LAYOUTS[name]
        n_nodes, area = layout.n_nodes, layout.area
        points = [tuple(map(float, p)) for p in layout.backbone]
        target_diameter = layout.diameter
    else:
        if area is None:
            raise TopologyError("custom topology needs an area")
        if backbone is not None:
            points = [tuple(map(float, p)) for p in backbone]
            explicit = True
        elif grid is not None:
            points = grid_layout(grid[0], grid[1], area)
        else:
            raise TopologyError("custom topology needs backbone positions or a grid")
        if n_nodes is None:
            n_nodes = 2 * len(points) if n_clients is None else len(points) + n_clients
    if n_clients is None:
        n_clients = n_nodes - math.ceil(n_nodes / 2)
        if len(points) != n_nodes - n_clients:
            raise TopologyError(
                f"{n_nodes} nodes need {n_nodes - n_clients} backbone nodes, got {len(points)}")
    if len(points) + n_clients != n_nodes:
        raise TopologyError("n_nodes must equal backbone plus clients")
    adj = adjacency(points, radio_range)
    if explicit:
        d = diameter(adj)
        if d is None:
            raise TopologyError("backbone graph is disconnected at this radio range")
        if target_diameter is not None and d != target_diameter:
            raise TopologyError(f"backbone diameter {d} differs from required {target_diameter}")
    else:
        check_backbone(points, area, radio_range, target_diameter)
    if central is None:
        central = central_node(adj, points, area)
    elif not 0 <= central < len(points):
        raise TopologyError(f"central node {central} is not a backbone node")
    clients = [(rng.uniform(0, area[0]), rng.uniform(0, area[1])) for _ in range(n_clients)]
    return Topology(name, area, points, clients, central, radio_range)

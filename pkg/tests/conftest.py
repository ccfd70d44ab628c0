"""Shared helpers for building small static meshes."""

from __future__ import annotations

import pytest

from wmnsim.mobility import NodePositions
from wmnsim.network import BACKBONE, CLIENT, Network
from wmnsim.radio import RadioParams


def make_net(backbone, clients=(), central=0, seed=1, radio_range=150.0, trace=None,
             trace_nodes=None):
    """A Network over fixed backbone points plus (optionally static) clients."""
    static = dict(enumerate(backbone))
    ids = list(range(len(backbone), len(backbone) + len(clients)))
    if trace is None:
        static.update(zip(ids, clients))
        positions = NodePositions(static)
    else:
        positions = NodePositions(static, trace, trace_nodes or dict(zip(ids, trace.nodes)))
    roles = {n: BACKBONE for n in range(len(backbone))}
    roles.update({n: CLIENT for n in ids})
    radio = RadioParams(range_override_m=radio_range)
    return Network(roles, positions, radio, seed, central)


def line(n, spacing=100.0):
    return [(i * spacing, 0.0) for i in range(n)]


@pytest.fixture
def line_net():
    return make_net(line(5))


def random_mesh(rng, max_nodes=12, side=400.0, radio_range=150.0):
    """Random connected unit-disc placement with 2..max_nodes nodes."""
    import networkx as nx

    from wmnsim.topology import adjacency

    while True:
        n = rng.randint(2, max_nodes)
        pts = [(rng.uniform(0, side), rng.uniform(0, side)) for _ in range(n)]
        graph = nx.Graph(adjacency(pts, radio_range))
        if nx.is_connected(graph):
            return pts, graph


def converge(net, plane, until=12.0):
    net.install(plane)
    plane.start()
    net.sim.run_until(until)
    return plane


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        terminalreporter.write_line(verdicts[number])

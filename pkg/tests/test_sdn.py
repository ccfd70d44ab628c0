import random

import networkx as nx
import pytest

from wmnsim.protocols.sdn import (STRATEGIES, ActiveFlow, HopCount, NetworkGraph, NoPath,
                                  SdnConfig, SdnPlane, compute_path_hc)
from wmnsim.radio import FrameKind
from wmnsim.traffic import Packet

from conftest import converge, line, make_net, random_mesh


def test_graph_edges_need_both_fresh_reports():
    g = NetworkGraph(staleness=2.0)
    g.report(1, {2: -50.0}, 0.0)
    assert g.refresh(0.0) == (set(), set())
    g.report(2, {1: -51.0}, 0.5)
    added, lost = g.refresh(0.5)
    assert added == {frozenset((1, 2))} and not lost
    assert g.has_edge(2, 1)
    g.report(2, {1: -51.0}, 2.0)
    added, lost = g.refresh(2.6)  # node 1's report is now stale
    assert lost == {frozenset((1, 2))}
    assert 1 not in g.adjacency
    with pytest.raises(ValueError):
        g.report(3, {3: 0.0}, 0.0)


def test_path_matches_bfs_and_breaks_ties_lexicographically():
    adj = {0: {1, 2}, 1: {0, 3}, 2: {0, 3}, 3: {1, 2}}
    assert compute_path_hc(adj, 0, 3) == [0, 1, 3]
    assert compute_path_hc(adj, 0, 3, transit=lambda n: n != 1) == [0, 2, 3]
    assert compute_path_hc(adj, 2, 2) == [2]
    with pytest.raises(NoPath):
        compute_path_hc(adj, 0, 3, transit=lambda n: False)
    with pytest.raises(NoPath):
        compute_path_hc(adj, 0, 9)
    rng = random.Random(1)
    for _ in range(100):
        g = nx.gnp_random_graph(12, 0.25, seed=rng.randrange(10 ** 6))
        adj = {n: set(g[n]) for n in g}
        for d in g:
            if nx.has_path(g, 0, d):
                path = compute_path_hc(adj, 0, d)
                assert len(path) - 1 == nx.shortest_path_length(g, 0, d)
                assert all(b in adj[a] for a, b in zip(path, path[1:]))


def test_only_hop_count_strategy_is_implemented():
    assert isinstance(STRATEGIES["hc"](), HopCount)
    with pytest.raises(NotImplementedError):
        STRATEGIES["hlrb"]().path({}, 0, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        SdnConfig(report_interval=0)
    with pytest.raises(ValueError):
        SdnConfig(staleness_intervals=0)


def _mesh_with_clients():
    # backbone line 0-1-2-3; client 4 near 0, client 5 near 3
    return make_net(line(4, 140.0), clients=[(-100.0, 0.0), (520.0, 0.0)], central=1)


def test_controller_learns_the_true_graph_and_tree():
    net = _mesh_with_clients()
    plane = converge(net, SdnPlane(net), until=6.0)
    assert plane.reachability_complete()
    truth = {frozenset((a, b)) for a in net.nodes for b, _ in net.medium.neighbors(a)}
    assert set(plane.graph.edges) == truth
    assert plane.tree.depth[1] == 0 and plane.tree.depth[3] == 2
    assert plane.association(4) == 0 and plane.association(5) == 3


def test_clients_never_relay():
    net = _mesh_with_clients()
    plane = converge(net, SdnPlane(net), until=6.0)
    path = plane.flow_path(4, 5)
    assert path == [4, 0, 1, 2, 3, 5]
    assert all(plane.is_switch(n) for n in path[1:-1])


def test_data_between_clients_without_broadcast_arp():
    net = _mesh_with_clients()
    plane = converge(net, SdnPlane(net), until=6.0)
    t0 = net.sim.now
    for i in range(20):
        net.sim.call_at(t0 + 0.02 * i, net.send_data, Packet(0, i, 4, 5, 500, t0 + 0.02 * i))
    net.sim.run_until(t0 + 3.0)
    assert all(r.outcome == "delivered" for r in net.records.values())
    assert net.log.arp_broadcasts == 0
    kinds = {c.kind for c in net.log.control}
    assert FrameKind.PACKET_IN in kinds and FrameKind.FLOW_MOD in kinds
    assert plane.flow_walk((4, 5)) == [4, 0, 1, 2, 3, 5]
    assert (4, 5) in plane.registry


def test_disassociation_reroutes_affected_flows():
    net = _mesh_with_clients()
    plane = converge(net, SdnPlane(net), until=6.0)
    plane.registry[(1, 5)] = ActiveFlow((1, 5), [1, 2, 3, 5], net.sim.now)
    plane.registry[(1, 4)] = ActiveFlow((1, 4), [1, 0, 4], net.sim.now)
    assert plane.handle_disassociation(frozenset((3, 5))) == [(1, 5)]
    assert plane.gratuitous_sent == 1


def test_ablation_expires_idle_entries():
    net = make_net(line(3), central=0)
    plane = converge(net, SdnPlane(net, SdnConfig(mobility=False, idle_timeout=2.0)), 6.0)
    assert plane.name == "sdn-no-mobility"
    net.send_data(Packet(0, 0, 0, 2, 100, net.sim.now))
    net.sim.run_until(net.sim.now + 1.0)
    assert (0, 2) in plane.tables[0]
    net.sim.run_until(net.sim.now + 5.0)
    net.send_data(Packet(0, 1, 0, 2, 100, net.sim.now))
    net.sim.run_until(net.sim.now + 1.0)
    # the stale entry was dropped on use, which costs a fresh packet-in
    assert sum(c.kind == FrameKind.PACKET_IN for c in net.log.control) >= 2
    assert net.records[(0, 1)].outcome == "delivered"


def test_hop_counts_match_bfs_on_random_meshes():
    rng = random.Random(9)
    for _ in range(15):
        pts, graph = random_mesh(rng)
        net = make_net(pts)
        plane = converge(net, SdnPlane(net), until=6.0)
        dist = dict(nx.all_pairs_shortest_path_length(graph))
        for s in graph:
            for d in graph:
                assert len(plane.flow_path(s, d)) - 1 == dist[s][d]

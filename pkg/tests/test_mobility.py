import math
import random

import pytest

from wmnsim.mobility import (MobilityConfig, MobilityTrace, NodePositions, TraceFormatError,
                             export_trace, generate, generate_rpgm, generate_rwp,
                             import_trace, partition_groups, position_at, stationary_trace)


def _speeds(trace, node):
    wps = trace.waypoints[node]
    for (t0, x0, y0), (t1, x1, y1) in zip(wps, wps[1:]):
        yield math.hypot(x1 - x0, y1 - y0) / (t1 - t0)


def test_rwp_stays_in_area_with_bounded_speed():
    cfg = MobilityConfig(area=(400.0, 360.0), min_speed=2.0, max_speed=6.0)
    trace = generate_rwp(cfg, 10, 120.0, random.Random(3))
    assert trace.nodes == list(range(10))
    for n in trace.nodes:
        wps = trace.waypoints[n]
        assert wps[0][0] == 0.0 and wps[-1][0] == pytest.approx(120.0)
        assert all(0 <= x <= 400 and 0 <= y <= 360 for _, x, y in wps)
        assert all(s <= 6.0 + 1e-9 for s in _speeds(trace, n))
        # interior legs are whole waypoint legs, so their speed is drawn in range
        assert all(s >= 2.0 - 1e-9 for s in list(_speeds(trace, n))[1:-1])


def test_rwp_is_seed_deterministic():
    cfg = MobilityConfig()
    assert generate(cfg, 5, 60.0, random.Random(1)) == generate(cfg, 5, 60.0, random.Random(1))
    assert generate(cfg, 5, 60.0, random.Random(1)) != generate(cfg, 5, 60.0, random.Random(2))


def test_rwp_with_pause_holds_position():
    cfg = MobilityConfig(pause=5.0, warmup_discard=0.0)
    trace = generate_rwp(cfg, 1, 200.0, random.Random(0))
    wps = trace.waypoints[0]
    assert any((a[1], a[2]) == (b[1], b[2]) and b[0] > a[0] for a, b in zip(wps, wps[1:]))


def test_partition_groups_covers_all_nodes_without_singletons():
    rng = random.Random(5)
    for n in range(2, 40):
        groups = partition_groups(n, 3.0, rng)
        assert sorted(x for g in groups for x in g) == list(range(n))
        assert all(len(g) >= 2 for g in groups)


def test_rpgm_members_stay_near_their_reference():
    cfg = MobilityConfig(model="RPGM", group_deviation_radius=30.0)
    trace = generate_rpgm(cfg, 10, 120.0, random.Random(2))
    assert trace.groups is not None
    for group in trace.groups:
        first = trace.waypoints[group[0]]
        for other in group[1:]:
            wps = trace.waypoints[other]
            assert [w[0] for w in wps] == [w[0] for w in first]
            # two offsets of radius <= 30 put members at most 60 m apart
            assert all(math.dist(a[1:], b[1:]) <= 60.0 + 1e-9 for a, b in zip(first, wps))


def test_invalid_mobility_config_rejected():
    with pytest.raises(ValueError, match="model"):
        MobilityConfig(model="Manhattan")
    with pytest.raises(ValueError, match="min_speed"):
        MobilityConfig(min_speed=0.0)
    with pytest.raises(ValueError):
        generate_rwp(MobilityConfig(), 3, 0.0, random.Random(0))


def test_trace_round_trip_is_exact():
    trace = generate(MobilityConfig(), 4, 30.0, random.Random(9))
    again = import_trace(export_trace(trace))
    assert again == trace


def test_import_rejects_malformed_lines():
    with pytest.raises(TraceFormatError, match="line 1"):
        import_trace("0 1 2 3\n")
    with pytest.raises(TraceFormatError, match="increase"):
        import_trace("0 0 0 5 1 1 5 2 2\n")
    with pytest.raises(TraceFormatError):
        import_trace("0 a 0 1 1 1\n")
    with pytest.raises(TraceFormatError):
        import_trace("# only a comment\n")


def test_position_interpolates_linearly():
    trace = MobilityTrace(10.0, {0: [(0.0, 0.0, 0.0), (10.0, 100.0, 50.0)]})
    assert position_at(trace, 0, 5.0) == (50.0, 25.0)
    with pytest.raises(ValueError):
        position_at(trace, 0, 11.0)


def test_node_positions_hold_then_follow_then_stop():
    trace = MobilityTrace(10.0, {0: [(0.0, 0.0, 0.0), (10.0, 100.0, 0.0)]})
    pos = NodePositions({0: (5.0, 5.0)}, trace, {1: 0})
    pos.mobility_start = 20.0
    assert pos(0, 100.0) == (5.0, 5.0)
    assert pos(1, 0.0) == (0.0, 0.0)
    assert pos(1, 25.0) == (50.0, 0.0)
    assert pos(1, 99.0) == (100.0, 0.0)
    # the batched lookup agrees with the scalar one, including going back in time
    for t in (21.0, 29.0, 22.5, 40.0, 10.0):
        assert pos.many([1], t) == [(1, *pos(1, t))]


def test_stationary_trace():
    trace = stationary_trace([(1.0, 2.0)], 30.0)
    assert position_at(trace, 0, 17.0) == (1.0, 2.0)

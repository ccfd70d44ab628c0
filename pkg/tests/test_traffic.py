import random

import pytest

from wmnsim.protocols.olsr import OlsrPlane
from wmnsim.traffic import (FlowSource, FlowSpec, Prober, TrafficConfig, next_departure,
                            spawn_flows)

from conftest import converge, line, make_net


def test_cbr_is_constant():
    cfg = TrafficConfig()
    assert next_departure(cfg, random.Random(0)) == (0.02, 1400)


def test_vbr_draws_exponential_gaps_and_uniform_sizes():
    cfg = TrafficConfig(model="VBR", rate_mean=50.0, vbr_size=(64, 1400))
    rng = random.Random(1)
    draws = [next_departure(cfg, rng) for _ in range(20000)]
    gaps = [g for g, _ in draws]
    sizes = [s for _, s in draws]
    assert sum(gaps) / len(gaps) == pytest.approx(0.02, rel=0.03)
    assert min(sizes) >= 64 and max(sizes) <= 1400
    assert sum(sizes) / len(sizes) == pytest.approx(732, rel=0.02)


def test_config_validation():
    with pytest.raises(ValueError, match="model"):
        TrafficConfig(model="poisson")
    with pytest.raises(ValueError, match="start"):
        TrafficConfig(start=10.0, stop=5.0)
    with pytest.raises(ValueError):
        TrafficConfig(vbr_size=(100, 10))


def test_one_flow_per_client():
    assert spawn_flows(3, [7, 8]) == [FlowSpec(0, 3, 7), FlowSpec(1, 3, 8)]


def test_cbr_source_emits_rate_times_duration_packets():
    net = make_net(line(2))
    converge(net, OlsrPlane(net), until=5.0)
    src = FlowSource(net, FlowSpec(0, 0, 1), TrafficConfig(), random.Random(0), 10.0, 12.0)
    src.begin()
    net.sim.run_until(20.0)
    assert src.seq == 100
    sent = sorted(r.sent_at for r in net.records.values())
    assert sent[0] == 10.0 and sent[1] == pytest.approx(10.02)
    assert all(r.outcome == "delivered" for r in net.records.values())


def test_prober_is_sequential_and_records_every_sample():
    net = make_net(line(3))
    converge(net, OlsrPlane(net), until=5.0)
    cfg = TrafficConfig(probe_count=5)
    net.prober = Prober(net, 0, 2, cfg, 6.0)
    net.prober.begin()
    net.sim.run_until(10.0)
    samples = net.prober.samples
    assert all(s is not None and 0 < s < 0.01 for s in samples)


def test_prober_times_out_and_moves_on():
    net = make_net(line(2))
    converge(net, OlsrPlane(net), until=5.0)
    net.medium.handlers.pop(1)
    cfg = TrafficConfig(probe_count=3, probe_timeout=0.5)
    net.prober = Prober(net, 0, 1, cfg, 6.0)
    net.prober.begin()
    net.sim.run_until(8.0)
    assert net.prober.samples == [None, None, None]

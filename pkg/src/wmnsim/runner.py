"""Single runs, replication sweeps and CSV output."""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .config import ScenarioConfig
from .engine import RngStreams
from .metrics import RunLog, RunSummary, control_overhead, packet_loss, rtt_split, summarize
from .mobility import NodePositions, generate, import_trace
from .network import BACKBONE, CLIENT, Network
from .protocols.base import RoutingPlane
from .protocols.batman import BatmanPlane
from .protocols.olsr import OlsrPlane
from .protocols.sdn import SdnPlane
from .topology import Topology, build_topology
from .traffic import FlowSource, Prober, spawn_flows

log = logging.getLogger(__name__)

METRICS = ("loss_pct", "control_kbps", "slowpath_ms", "fastpath_ms")
STABLE_CHECKS = {"olsr": 3, "batman": 3, "sdn": 2, "sdn-no-mobility": 2}


@dataclass
class RunResult:
    summary: RunSummary
    log: RunLog
    converged: bool
    epoch: float
    plane: RoutingPlane | None = None
    net: Network | None = None
    events: list[str] | None = None


def make_plane(protocol: str, net: Network, config: ScenarioConfig) -> RoutingPlane:
    if protocol == "olsr":
        return OlsrPlane(net, config.olsr)
    if protocol == "batman":
        return BatmanPlane(net, config.batman)
    if protocol == "sdn":
        return SdnPlane(net, replace(config.sdn, mobility=True))
    if protocol == "sdn-no-mobility":
        return SdnPlane(net, replace(config.sdn, mobility=False))
    raise ValueError(f"unknown protocol {protocol!r}")


def scenario_topology(config: ScenarioConfig, seed: int) -> Topology:
    spec = config.topology
    radio_range = config.radio.range_override_m
    if radio_range is None:
        from .radio import fspl_range
        radio_range = fspl_range(config.radio)
    return build_topology(spec.name, radio_range, RngStreams(seed).stream("placement"),
                          n_nodes=spec.n_nodes, area=spec.area, backbone=spec.backbone,
                          grid=spec.grid, target_diameter=spec.diameter,
                          n_clients=spec.n_clients, central=spec.central)


def scenario_positions(config: ScenarioConfig, topo: Topology, seed: int) -> NodePositions:
    static = dict(enumerate(topo.backbone))
    clients = topo.client_ids
    if config.trace_file is not None:
        trace = import_trace(Path(config.trace_file).read_text())
        if len(trace.nodes) < len(clients):
            raise ValueError(f"trace has {len(trace.nodes)} nodes, scenario needs {len(clients)}")
    elif config.mobility is not None:
        trace = generate(config.mobility, len(clients), config.timings.mobility,
                         RngStreams(seed).stream("mobility"))
    else:
        static.update(zip(clients, topo.clients))
        return NodePositions(static)
    return NodePositions(static, trace, dict(zip(clients, trace.nodes)))


def wait_convergence(net: Network, plane: RoutingPlane, protocol: str,
                     config: ScenarioConfig) -> float | None:
    """First check time at which routing state held still for the required checks."""
    need = STABLE_CHECKS[protocol]
    step = config.timings.convergence_interval
    prev = None
    stable = 0
    k = 1
    while k * step <= config.timings.convergence_cap + 1e-9:
        t = k * step
        net.sim.run_until(t)
        sig = plane.routing_signature()
        if sig == prev and plane.reachability_complete():
            stable += 1
        else:
            stable = 1 if plane.reachability_complete() else 0
        prev = sig
        if stable >= need:
            return t
        k += 1
    return None


def run_single(config: ScenarioConfig, protocol: str, seed: int,
               log_events: bool = False) -> RunResult:
    topo = scenario_topology(config, seed)
    positions = scenario_positions(config, topo, seed)
    roles = {n: BACKBONE for n in range(topo.n_backbone)}
    roles.update({n: CLIENT for n in topo.client_ids})
    net = Network(roles, positions, config.radio, seed, topo.central, log_events)
    plane = make_plane(protocol, net, config)
    net.install(plane)
    plane.start()

    timings = config.timings
    t_conv = wait_convergence(net, plane, protocol, config)
    epoch = timings.convergence_cap if t_conv is None else t_conv
    start = epoch + timings.monotone
    stop = start + timings.mobility
    positions.mobility_start = start

    clients = topo.client_ids
    if clients and config.traffic.probe_count > 0:
        net.prober = Prober(net, topo.central, clients[0], config.traffic, start)
        net.prober.begin()
    for spec in spawn_flows(topo.central, clients):
        FlowSource(net, spec, config.traffic, net.rng.stream("traffic", spec.flow_id),
                   start, stop).begin()
    net.sim.run_until(stop)

    run_log = net.log
    run_log.packets = sorted(net.records.values(), key=lambda r: (r.flow_id, r.sequence))
    run_log.rtt = list(net.prober.samples) if net.prober else []
    slow, fast = rtt_split(run_log.rtt)
    summary = RunSummary(
        protocol=protocol, topology=config.topology.name, mobility=config.mobility_label,
        traffic=config.traffic.model, seed=seed, loss_pct=packet_loss(run_log.packets),
        control_kbps=control_overhead(run_log.control, (epoch, epoch + timings.monotone)),
        slowpath_ms=None if slow is None else slow * 1000.0,
        fastpath_ms=None if fast is None else fast * 1000.0)
    return RunResult(summary, run_log, t_conv is not None, epoch, plane, net, net.sim.log)


# sweeps ----------------------------------------------------------------------

def _job(args) -> tuple[RunSummary, bool, list[str] | None]:
    config, protocol, seed, log_events = args
    result = run_single(config, protocol, seed, log_events)
    return result.summary, result.converged, result.events


def seeds_for(config: ScenarioConfig) -> list[int]:
    return list(range(config.base_seed, config.base_seed + config.replications))


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def results_csv(rows: list[RunSummary]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RunSummary.header())
    for row in rows:
        writer.writerow(format_value(v) for v in asdict(row).values())
    return out.getvalue()


AGGREGATE_HEADER = ["protocol", "topology", "mobility", "traffic", "n"] + [
    f"{m}_{part}" for m in METRICS for part in ("mean", "ci95")]


def aggregate_csv(rows: list[RunSummary]) -> str:
    groups: dict[tuple, list[RunSummary]] = {}
    for row in rows:
        groups.setdefault((row.protocol, row.topology, row.mobility, row.traffic), []).append(row)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(AGGREGATE_HEADER)
    for key, members in groups.items():
        line = list(key) + [str(len(members))]
        for metric in METRICS:
            ci = summarize([getattr(r, metric) for r in members])
            line += [format_value(None if ci is None else ci.mean),
                     format_value(None if ci is None else ci.half_width)]
        writer.writerow(line)
    return out.getvalue()


def read_results(path: str | Path) -> list[RunSummary]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            values = {}
            for name in RunSummary.header():
                raw = rec[name]
                if name in METRICS:
                    values[name] = float(raw) if raw != "" else None
                elif name == "seed":
                    values[name] = int(raw)
                else:
                    values[name] = raw
            rows.append(RunSummary(**values))
    return rows


def run_experiment(config: ScenarioConfig, out_dir: str | Path, jobs: int = 1,
                   log_events: bool = False) -> list[RunSummary]:
    """Run every (protocol, seed) pair and write results, aggregate and exclusions."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(config, p, s, log_events) for p in config.protocols for s in seeds_for(config)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_job, tasks))
    else:
        outcomes = [_job(t) for t in tasks]
    rows, excluded = [], []
    for (_, protocol, seed, _), (summary, converged, events) in zip(tasks, outcomes):
        if converged:
            rows.append(summary)
        else:
            log.warning("%s seed %d did not converge within %.0f s; excluded",
                        protocol, seed, config.timings.convergence_cap)
            excluded.append((protocol, seed))
        if events is not None:
            (out / f"events_{protocol}_{seed}.log").write_text("\n".join(events) + "\n")
    (out / "results.csv").write_text(results_csv(rows))
    (out / "aggregate.csv").write_text(aggregate_csv(rows))
    lines = ["protocol,seed"] + [f"{p},{s}" for p, s in excluded]
    (out / "excluded.csv").write_text("\n".join(lines) + "\n")
    return rows

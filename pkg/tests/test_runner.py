import csv
from dataclasses import replace
from pathlib import Path

import pytest

from wmnsim import cli
from wmnsim.config import parse_config
from wmnsim.metrics import RunSummary, control_overhead, packet_loss, rtt_split
from wmnsim.mobility import import_trace
from wmnsim.runner import (AGGREGATE_HEADER, aggregate_csv, read_results, results_csv,
                           run_experiment, run_single, scenario_positions, scenario_topology)

SMALL = """
[scenario]
name = small
protocol = {protocols}
replications = {reps}
[topology]
name = T1
[mobility]
model = RWP
[traffic]
probe_count = 10
[timings]
monotone = 5
mobility = 10
convergence_cap = 20
"""

HEADER = "protocol,topology,mobility,traffic,seed,loss_pct,control_kbps,slowpath_ms,fastpath_ms"


def small(protocols="olsr", reps=2):
    return parse_config(SMALL.format(protocols=protocols, reps=reps))


@pytest.mark.parametrize("protocol", ["olsr", "batman", "sdn", "sdn-no-mobility"])
def test_single_run_produces_a_summary(protocol):
    result = run_single(small(protocol), protocol, 1)
    s = result.summary
    assert result.converged
    assert s.protocol == protocol and s.topology == "T1" and s.mobility == "RWP"
    assert 0 <= s.loss_pct <= 100
    assert s.control_kbps > 0
    assert s.slowpath_ms is not None and s.fastpath_ms is not None
    # metrics recompute exactly from the persisted log
    log = result.log
    assert packet_loss(log.packets) == s.loss_pct
    assert control_overhead(log.control, (result.epoch, result.epoch + 5.0)) == s.control_kbps
    assert rtt_split(log.rtt)[0] * 1000.0 == s.slowpath_ms
    # every client gets one CBR flow of rate x duration packets
    assert len(log.packets) == 5 * 50 * 10


def test_paired_seeds_share_mobility_and_clients():
    cfg = small()
    topo = scenario_topology(cfg, 3)
    a = scenario_positions(cfg, topo, 3)
    b = scenario_positions(replace(cfg, protocols=("sdn",)), scenario_topology(cfg, 3), 3)
    assert a.trace == b.trace
    assert scenario_topology(cfg, 3).clients == topo.clients


def test_experiment_writes_results_aggregate_and_exclusions(tmp_path):
    rows = run_experiment(small("olsr,sdn", 2), tmp_path, log_events=True)
    assert len(rows) == 4
    text = (tmp_path / "results.csv").read_text()
    assert text.splitlines()[0] == HEADER
    assert len(text.splitlines()) == 5
    agg = list(csv.DictReader((tmp_path / "aggregate.csv").open()))
    assert [r["protocol"] for r in agg] == ["olsr", "sdn"]
    assert all(r["n"] == "2" and r["loss_pct_ci95"] != "" for r in agg)
    assert (tmp_path / "excluded.csv").read_text() == "protocol,seed\n"
    assert (tmp_path / "events_sdn_2.log").read_text().count("\n") > 1000
    assert results_csv(read_results(tmp_path / "results.csv")) == text


def test_single_replication_has_no_interval():
    row = RunSummary("olsr", "T1", "RWP", "CBR", 1, 0.0, 1.0, 2.0, 3.0)
    agg = list(csv.DictReader(aggregate_csv([row]).splitlines()))
    assert list(agg[0]) == AGGREGATE_HEADER
    assert agg[0]["loss_pct_mean"] == "0.000000" and agg[0]["loss_pct_ci95"] == ""


def test_absent_values_are_empty_fields():
    row = RunSummary("batman", "T2", "RWP", "CBR", 4, None, 1.5, None, 2.0)
    assert results_csv([row]).splitlines()[1] == "batman,T2,RWP,CBR,4,,1.500000,,2.000000"


def test_unconverged_runs_are_excluded(tmp_path):
    cfg = small("olsr", 1)
    cfg = replace(cfg, timings=replace(cfg.timings, convergence_cap=1.0))
    assert run_experiment(cfg, tmp_path) == []
    assert (tmp_path / "excluded.csv").read_text() == "protocol,seed\nolsr,1\n"


def test_cli_run_report_and_gen_mobility(tmp_path, capsys):
    ini = tmp_path / "small.ini"
    ini.write_text(SMALL.format(protocols="olsr", reps=5))
    out = tmp_path / "out"
    assert cli.main(["run", str(ini), "--seed", "4", "--replications", "2",
                     "--out-dir", str(out)]) == 0
    seeds = [r.seed for r in read_results(out / "results.csv")]
    assert seeds == [4, 5]
    (out / "aggregate.csv").unlink()
    assert cli.main(["report", str(out)]) == 0
    assert capsys.readouterr().out.endswith((out / "aggregate.csv").read_text())
    traces = tmp_path / "traces"
    assert cli.main(["gen-mobility", str(ini), "--replications", "1",
                     "--out-dir", str(traces)]) == 0
    trace = import_trace((traces / "mobility_small_1.trace").read_text())
    assert len(trace.nodes) == 5 and trace.duration == pytest.approx(10.0)


def test_cli_reports_config_errors(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[traffic]\nrate_mean = -3\n")
    assert cli.main(["run", str(ini), "--out-dir", str(tmp_path)]) == 2
    assert "traffic.rate_mean" in capsys.readouterr().err
    assert cli.main(["report", str(tmp_path / "missing")]) == 2
    static = tmp_path / "static.ini"
    static.write_text("[mobility]\nmodel = none\n")
    assert cli.main(["gen-mobility", str(static)]) == 2


def test_determinism_byte_identical(tmp_path):
    cfg = small("olsr,batman,sdn", 1)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("results.csv", "aggregate.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

"""Command line: ``run``, ``gen-mobility`` and ``report``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .engine import RngStreams
from .mobility import export_trace, generate
from .runner import aggregate_csv, read_results, run_experiment, scenario_topology, seeds_for


def _apply_overrides(config, args):
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.replications is not None:
        if args.replications < 1:
            raise ConfigError("--replications: must be >= 1")
        changes["replications"] = args.replications
    return dataclasses.replace(config, **changes) if changes else config


def cmd_run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    if args.protocol:
        config = dataclasses.replace(config, protocols=tuple(args.protocol))
    out = Path(args.out_dir)
    rows = run_experiment(config, out, jobs=args.jobs, log_events=args.log_events)
    print(f"{len(rows)} runs written to {out / 'results.csv'}")
    return 0


def cmd_gen_mobility(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    if config.mobility is None:
        raise ConfigError("mobility.model: scenario is static, nothing to generate")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in seeds_for(config):
        n_clients = len(scenario_topology(config, seed).clients)
        trace = generate(config.mobility, n_clients, config.timings.mobility,
                         RngStreams(seed).stream("mobility"))
        path = out / f"mobility_{config.name}_{seed}.trace"
        path.write_text(export_trace(trace))
        print(path)
    return 0


def cmd_report(args) -> int:
    results = Path(args.results_dir) / "results.csv"
    if not results.exists():
        raise ConfigError(f"{results}: no results file")
    table = aggregate_csv(read_results(results))
    (Path(args.results_dir) / "aggregate.csv").write_text(table)
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wmnsim", description="Wireless mesh routing simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario file")
        p.add_argument("--seed", type=int, help="first replication seed")
        p.add_argument("--replications", type=int, help="number of replications")
        p.add_argument("--out-dir", default="results", help="output directory")

    run = sub.add_parser("run", help="run a scenario")
    common(run)
    run.add_argument("--log-events", action="store_true", help="write per-run event logs")
    run.add_argument("--jobs", type=int, default=1, help="parallel replications")
    run.add_argument("--protocol", action="append",
                     help="restrict to this protocol (repeatable)")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen-mobility", help="write mobility traces for a scenario")
    common(gen)
    gen.set_defaults(func=cmd_gen_mobility)

    rep = sub.add_parser("report", help="aggregate a results directory")
    rep.add_argument("results_dir")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

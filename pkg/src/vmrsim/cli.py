"""Command-line entry points.

Subcommands:
  generate-trace  write a job trace for a scenario
  run             simulate one or more schedulers over a shared trace+placement
  compare         normalized per-profile turnaround across report files
  report          re-emit a report's metric rows as CSV

Exit codes: 0 success, 1 configuration error, 2 simulation error.

Environment fallbacks (used when the flag is absent): VMRSIM_CONFIG,
VMRSIM_SCHEDULER, VMRSIM_SEED_PLACEMENT, VMRSIM_SEED_WORKLOAD, VMRSIM_OUT.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

from .classify import FpRegistry
from .cluster import build_cluster
from .config import ConfigError, ScenarioConfig, load_scenario
from .engine import Simulation, place_trace, warm_registry
from .metrics import (build_report, load_report, normalized_jtt, rows_csv_text,
                      write_csv, write_json)
from .sched_baselines import CapacityScheduler, FairScheduler, FifoScheduler
from .sched_joss import JossScheduler
from .workload import TraceFormatError, generate_trace, load_trace, save_trace

SCHEDULER_NAMES = ("joss-t", "joss-j", "fifo", "fair", "capacity")


class _Parser(argparse.ArgumentParser):
    # Usage problems are configuration errors: exit 1, not argparse's 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        sys.exit(1)


def _env(name: str) -> Optional[str]:
    return os.environ.get("VMRSIM_" + name)


def _env_int(name: str) -> Optional[int]:
    raw = _env(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError("VMRSIM_%s: expected integer, got %r"
                          % (name, raw)) from None


def make_scheduler(name: str, topology, registry: FpRegistry,
                   cfg: ScenarioConfig):
    if name == "joss-t":
        return JossScheduler(topology, registry, assigner="task")
    if name == "joss-j":
        return JossScheduler(topology, registry, assigner="job")
    if name == "fifo":
        return FifoScheduler()
    if name == "fair":
        return FairScheduler()
    if name == "capacity":
        return CapacityScheduler(cfg.capacity_queues)
    raise ConfigError("unknown scheduler %r (choose from %s)"
                      % (name, ", ".join(SCHEDULER_NAMES)))


def _resolve_config(args) -> str:
    ref = args.config or _env("CONFIG")
    if not ref:
        raise ConfigError("no scenario given: pass --config or set VMRSIM_CONFIG")
    return ref


def _resolve_seed(flag_value, env_name: str, cfg_value: int) -> int:
    if flag_value is not None:
        return flag_value
    env_value = _env_int(env_name)
    return cfg_value if env_value is None else env_value


def cmd_generate_trace(args) -> int:
    cfg = load_scenario(_resolve_config(args))
    seed = _resolve_seed(args.seed_workload, "SEED_WORKLOAD", cfg.seed_workload)
    trace = generate_trace(cfg.workload, cfg.profiles, seed, cfg.block_size)
    save_trace(trace, args.out)
    mix = {}
    for job in trace.jobs:
        mix[job.profile] = mix.get(job.profile, 0) + 1
    gaps = [b.arrival_time - a.arrival_time
            for a, b in zip(trace.jobs, trace.jobs[1:])]
    mean_gap = (trace.jobs[0].arrival_time + sum(gaps)) / len(trace.jobs)
    print("trace %r: %d jobs, mean interval %.2fs, mix %s"
          % (trace.name, len(trace.jobs), mean_gap,
             " ".join("%s=%d" % kv for kv in sorted(mix.items()))))
    return 0


def cmd_run(args) -> int:
    cfg = load_scenario(_resolve_config(args))
    seed_w = _resolve_seed(args.seed_workload, "SEED_WORKLOAD", cfg.seed_workload)
    seed_p = _resolve_seed(args.seed_placement, "SEED_PLACEMENT", cfg.seed_placement)
    names_raw = args.scheduler or _env("SCHEDULER") or "joss-t"
    names = [n.strip() for n in names_raw.split(",") if n.strip()]
    for name in names:
        if name not in SCHEDULER_NAMES:
            raise ConfigError("unknown scheduler %r (choose from %s)"
                              % (name, ", ".join(SCHEDULER_NAMES)))
    topology = build_cluster(cfg.vps_counts, cfg.map_slots, cfg.reduce_slots)
    if args.trace:
        trace = load_trace(args.trace)
    else:
        trace = generate_trace(cfg.workload, cfg.profiles, seed_w, cfg.block_size)
    out_dir = args.out or _env("OUT") or "."
    os.makedirs(out_dir, exist_ok=True)
    save_trace(trace, os.path.join(out_dir, "trace.txt"))
    placement = place_trace(topology, trace, seed_p, cfg.replication)

    for name in names:
        if args.registry:
            registry = FpRegistry.load(args.registry)
        elif args.warm:
            registry = warm_registry(cfg.profiles)
        else:
            registry = FpRegistry()
        scheduler = make_scheduler(name, topology, registry, cfg)
        sim = Simulation(topology, cfg.cost, cfg.profiles, trace, scheduler,
                         registry, seed_p, cfg.replication,
                         placement=placement,
                         keep_event_log=bool(args.event_log))
        result = sim.run()
        report = build_report(result)
        write_json(report, os.path.join(out_dir, name + ".json"))
        write_csv(report["rows"], os.path.join(out_dir, name + ".csv"))
        if args.event_log:
            with open(os.path.join(out_dir, name + ".events.txt"), "w") as fh:
                fh.write("\n".join(result.event_log) + "\n")
        if args.registry_out:
            registry.dump(os.path.join(out_dir, name + ".registry.txt"))
        s = report["summary"]
        print("%s: jobs=%d wtt=%.1fs mean_jtt=%.1fs int=%.0fB vps_rate=%.3f"
              % (name, s["jobs"], s["wtt_s"], s["mean_jtt_s"] or 0.0,
                 s["int_bytes"], s["vps_rate"] or 0.0))
    return 0


def cmd_compare(args) -> int:
    reports = [load_report(path) for path in args.reports]
    rows = normalized_jtt(reports)
    lines = ["profile,scheduler,mean_jtt_s,normalized_jtt"]
    lines += ["%s,%s,%r,%r" % (r["profile"], r["scheduler"], r["mean_jtt_s"],
                               r["normalized_jtt"]) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    report = load_report(args.report)
    text = rows_csv_text(report["rows"])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vmrsim",
                     description="Discrete-event simulator of MapReduce "
                                 "scheduling over multi-datacenter VPS clusters.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-trace", help="write a job trace for a scenario")
    p.add_argument("--config", help="scenario path or preset name (small, mixed)")
    p.add_argument("--seed-workload", type=int, default=None)
    p.add_argument("--out", required=True, help="trace file to write")
    p.set_defaults(func=cmd_generate_trace)

    p = sub.add_parser("run", help="simulate schedulers over one trace")
    p.add_argument("--config", help="scenario path or preset name (small, mixed)")
    p.add_argument("--scheduler",
                   help="comma-separated names: %s" % ", ".join(SCHEDULER_NAMES))
    p.add_argument("--trace", help="pre-generated trace file (default: generate)")
    p.add_argument("--seed-workload", type=int, default=None)
    p.add_argument("--seed-placement", type=int, default=None)
    p.add_argument("--out", help="output directory (default '.')")
    p.add_argument("--event-log", action="store_true",
                   help="also write per-scheduler event logs")
    p.add_argument("--warm", action="store_true",
                   help="preload the registry with declared profile means")
    p.add_argument("--registry", help="load a dumped registry before the run")
    p.add_argument("--registry-out", action="store_true",
                   help="dump each run's learned registry next to its report")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="normalized turnaround across reports")
    p.add_argument("reports", nargs="+", help="report JSON files from `run`")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="re-emit a report's metric rows as CSV")
    p.add_argument("report", help="report JSON file")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceFormatError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print("simulation error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

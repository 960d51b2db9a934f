"""Command-line front end.

Subcommands walk the pipeline end to end:

    hmpt analyze <trace>                 grouping table and footprint
    hmpt plan <trace> --hbm 0,1          write a site-to-pool plan file
    hmpt simulate --workload W ...       one placement through the model
    hmpt campaign --trace T ... -n N     measure every placement
    hmpt report <campaign dir>           stats, views, figures, headline row

Exit status: 0 on success, 1 on usage errors (bad flags, missing files),
2 on data errors (malformed traces, plans, or inconsistent inputs).
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from . import analysis, figures, views
from .analysis import build_report, compute_speedups, report_to_json, stats_to_csv, summarize
from .configspace import enumerate_placements, placement_label, validate_capacity
from .grouping import GroupingConfig, alias_sites, apply_manual_rules, rules_from_json
from .harness import (
    ExternalExecutor,
    SimulatedExecutor,
    load_campaign_dir,
    run_campaign,
    save_campaign_dir,
    save_plan,
    write_plan,
)
from .perfmodel import (
    BANDWIDTH_BOUND,
    default_machine,
    load_machine,
    load_workload,
    simulate_workload,
)
from .trace import attribute_samples, footprint, parse_trace

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="hmpt", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grouping_flags(p):
        p.add_argument("--size-threshold", type=int, default=None,
                       help="ignore sites below this many bytes")
        p.add_argument("--top-k", type=int, default=None,
                       help="number of singleton groups before the rest group")
        p.add_argument("--rules", help="manual grouping rules JSON file")

    p = sub.add_parser("analyze", help="print grouping and footprint of a trace")
    p.add_argument("trace")
    add_grouping_flags(p)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("plan", help="write a site-to-pool plan file")
    p.add_argument("trace")
    p.add_argument("--hbm", default="",
                   help="comma-separated group ids for the fast pool (may be empty)")
    p.add_argument("--fast-pool", type=int, default=1)
    p.add_argument("--default-pool", type=int, default=0)
    p.add_argument("-o", "--out", default="plan.json")
    add_grouping_flags(p)

    p = sub.add_parser("simulate", help="simulate a workload under one placement")
    p.add_argument("--machine", help="machine JSON (defaults to the built-in model)")
    p.add_argument("--workload", required=True, help="workload JSON file")
    p.add_argument("--placement", default="",
                   help="comma-separated group=pool pairs, e.g. 0=1,2=1")
    p.add_argument("--default-pool", type=int, default=0)

    p = sub.add_parser("campaign", help="measure every placement of a trace's groups")
    p.add_argument("--trace", required=True)
    p.add_argument("--machine", help="machine JSON (defaults to the built-in model)")
    p.add_argument("--workload", help="workload JSON for the simulated executor")
    p.add_argument("--exec", dest="exec_argv", nargs=argparse.REMAINDER,
                   help="external command to run per measurement (terminal flag)")
    p.add_argument("-n", type=int, default=None, help="runs per placement")
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--out", required=True, help="campaign output directory")
    add_grouping_flags(p)

    p = sub.add_parser("report", help="write stats, views, and figures for a campaign")
    p.add_argument("measurements", help="campaign directory (or its measurements.csv)")
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--expected-mode", choices=analysis.EXPECTED_MODES,
                   default=analysis.ADDITIVE)
    p.add_argument("--out", help="output directory (defaults to the campaign dir)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering PNG figures")
    return parser


def _grouping_config(args) -> GroupingConfig:
    kwargs = {}
    if args.size_threshold is not None:
        kwargs["size_threshold"] = args.size_threshold
    if args.top_k is not None:
        kwargs["top_k"] = args.top_k
    return GroupingConfig(**kwargs)


def _load_trace_groups(args):
    with open(args.trace) as fp:
        bundle = attribute_samples(parse_trace(fp))
    aliased = alias_sites(bundle)
    cfg = _grouping_config(args)
    if args.rules:
        with open(args.rules) as fp:
            rules = rules_from_json(json.load(fp))
        groups = apply_manual_rules(aliased, rules, cfg)
    else:
        groups = apply_manual_rules(aliased, [], cfg)
    return bundle, groups


def _machine(args):
    return load_machine(args.machine) if args.machine else default_machine()


def _cmd_analyze(args) -> int:
    bundle, groups = _load_trace_groups(args)
    total = footprint(bundle)
    if args.format == "json":
        payload = {
            "footprint_bytes": total,
            "samples": len(bundle.samples),
            "unattributed_samples": bundle.unattributed_samples,
            "groups": [
                {
                    "id": g.group_id,
                    "label": g.label(),
                    "sites": ["%016x" % s for s in g.member_sites],
                    "bytes": g.total_bytes,
                    "sample_share": g.sample_share,
                    "is_rest": g.is_rest_group,
                }
                for g in groups
            ],
        }
        print(json.dumps(payload, indent=2))
        return 0
    print("footprint: %d bytes (%.2f GB)" % (total, total / 1e9))
    print("samples: %d (%d unattributed)"
          % (len(bundle.samples), bundle.unattributed_samples))
    print("%-4s %-10s %6s %14s %8s" % ("id", "label", "sites", "bytes", "share"))
    for g in groups:
        print("%-4d %-10s %6d %14d %7.1f%%"
              % (g.group_id, g.label(), len(g.member_sites), g.total_bytes,
                 100 * g.sample_share))
    return 0


def _cmd_plan(args) -> int:
    _, groups = _load_trace_groups(args)
    try:
        fast_ids = sorted(int(g) for g in args.hbm.split(",") if g != "")
    except ValueError:
        raise UsageError("--hbm wants comma-separated group ids")
    known = {g.group_id for g in groups}
    unknown = [g for g in fast_ids if g not in known]
    if unknown:
        raise ValueError("unknown group ids in --hbm: %r" % unknown)

    from .configspace import Placement

    assignment = {}
    per_pool = {}
    for g in groups:
        pool = args.fast_pool if g.group_id in fast_ids else args.default_pool
        assignment[g.group_id] = pool
        per_pool[pool] = per_pool.get(pool, 0) + g.total_bytes
    placement = Placement(tuple(sorted(assignment.items())),
                          tuple(sorted(per_pool.items())))
    plan = write_plan(placement, groups, default_pool=args.default_pool)
    save_plan(plan, args.out)
    print("wrote %s (%d sites, %d fast-pool groups)"
          % (args.out, len(plan.assignments), len(fast_ids)))
    return 0


def _parse_placement(text: str, group_ids, default_pool: int):
    assignment = {g: default_pool for g in group_ids}
    if text:
        for piece in text.split(","):
            try:
                group, pool = piece.split("=")
                assignment[int(group)] = int(pool)
            except ValueError:
                raise UsageError("--placement wants group=pool pairs, got %r" % piece)
    return assignment


def _cmd_simulate(args) -> int:
    machine = _machine(args)
    workload = load_workload(args.workload)
    group_ids = workload.group_ids()
    assignment = _parse_placement(args.placement, group_ids, args.default_pool)
    seconds = simulate_workload(workload, assignment, machine)
    print("%.9g s" % seconds)
    moved = sum(
        s.bytes * reps
        for kernel, reps in workload.kernels
        for s in kernel.streams
        if kernel.mode == BANDWIDTH_BOUND
    )
    if moved and seconds > 0:
        print("%d bytes moved, %.6g GB/s" % (moved, moved / seconds / 1e9))
    return 0


def _cmd_campaign(args) -> int:
    bundle, groups = _load_trace_groups(args)
    machine = _machine(args)
    space = enumerate_placements(groups, machine.pools)
    crowded = sum(1 for p in space.placements if validate_capacity(p, machine))
    if crowded:
        print("note: %d of %d placements exceed a pool capacity"
              % (crowded, len(space.placements)))
    if args.exec_argv:
        executor = ExternalExecutor(args.exec_argv, groups, timeout=args.timeout)
    elif args.workload:
        executor = SimulatedExecutor(load_workload(args.workload), machine)
    else:
        raise UsageError("campaign needs --workload (simulated) or --exec (external)")
    n = args.n if args.n is not None else executor.default_runs
    measurements = run_campaign(space, executor, n)
    save_campaign_dir(args.out, groups, machine.pools, measurements, n, executor.kind)
    ok = sum(1 for m in measurements if m.ok)
    print("campaign: %d placements x %d runs (%d ok) -> %s"
          % (len(space.placements), n, ok, args.out))
    return 0


def _cmd_report(args) -> int:
    groups, pools, measurements, meta = load_campaign_dir(args.measurements)
    space = enumerate_placements(groups, pools)
    stats = compute_speedups(measurements, space, expected_mode=args.expected_mode)
    report = build_report(stats, space, args.threshold)
    row = summarize(report)

    out_dir = args.out or (args.measurements if os.path.isdir(args.measurements)
                           else os.path.dirname(args.measurements) or ".")
    os.makedirs(out_dir, exist_ok=True)

    with open(os.path.join(out_dir, "report.json"), "w") as fp:
        json.dump(report_to_json(report), fp, indent=2)
        fp.write("\n")
    with open(os.path.join(out_dir, "stats.csv"), "w", newline="") as fp:
        stats_to_csv(report.stats, fp)

    detailed, summary = views.emit_views(report)
    with open(os.path.join(out_dir, "detailed_view.csv"), "w", newline="") as fp:
        views.detailed_to_csv(detailed, fp)
    with open(os.path.join(out_dir, "summary_view.csv"), "w", newline="") as fp:
        views.summary_to_csv(summary, fp)
    with open(os.path.join(out_dir, "detailed_view.json"), "w") as fp:
        json.dump(views.detailed_to_json(detailed), fp, indent=2)
        fp.write("\n")
    with open(os.path.join(out_dir, "summary_view.json"), "w") as fp:
        json.dump(views.summary_to_json(summary), fp, indent=2)
        fp.write("\n")

    if not args.no_figures:
        figures.render_detailed_view(
            report, os.path.join(out_dir, "detailed_view.png"))
        figures.render_summary_view(
            report, os.path.join(out_dir, "summary_view.png"))

    best_label = placement_label(
        space.placements[report.threshold_placement], report.fast_pool_id)
    if args.format == "json":
        print(json.dumps({
            "max_speedup": row.max_speedup,
            "all_fast_speedup": row.all_fast_speedup,
            "threshold_data_percent": row.threshold_data_percent,
            "threshold_placement": best_label,
        }))
    else:
        print("max speedup:        %.6g" % row.max_speedup)
        if row.all_fast_speedup is not None:
            print("all-fast speedup:   %.6g" % row.all_fast_speedup)
        print("%.0f%% target:         placement %s with %.6g%% of data in fast pool"
              % (report.threshold * 100, best_label, row.threshold_data_percent))
    return 0


_COMMANDS = {
    "analyze": _cmd_analyze,
    "plan": _cmd_plan,
    "simulate": _cmd_simulate,
    "campaign": _cmd_campaign,
    "report": _cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return USAGE_ERROR
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print("error: missing file: %s" % exc.filename, file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())

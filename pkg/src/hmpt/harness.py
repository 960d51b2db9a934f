"""Measurement campaign driver and placement plan files.

A campaign executes the fixed workload once per run for every placement in
a configuration space (2^k * n executions for k groups, two pools, and n
runs each).  The executor is either the built-in simulator or an external
command launched with a plan file describing which site goes to which
pool; external runs never overlap in time.
"""

import csv
import json
import logging
import os
import statistics
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Dict, IO, List, Optional, Sequence, Tuple, Union

from .configspace import ConfigurationSpace, Placement
from .grouping import AllocationGroup
from .perfmodel import MachineModel, WorkloadSpec, simulate_workload

log = logging.getLogger("hmpt.harness")

PLAN_VERSION = 1
ENV_PLAN = "HMPT_PLAN"
ENV_TRACE_OUT = "HMPT_TRACE_OUT"
ENV_DEFAULT_POOL = "HMPT_DEFAULT_POOL"


class PlanError(ValueError):
    pass


class RunFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class PlanFile:
    """Site-to-pool assignments consumed by the allocation shim."""

    default_pool: int = 0
    assignments: Tuple[Tuple[int, int], ...] = ()  # (site_id, pool_id), site-sorted
    version: int = PLAN_VERSION

    def pool_of(self, site_id: int) -> int:
        for site, pool in self.assignments:
            if site == site_id:
                return pool
        return self.default_pool


def write_plan(placement: Placement, groups: Sequence[AllocationGroup],
               default_pool: int = 0) -> PlanFile:
    """Expand a group-to-pool placement into per-site assignments."""
    assignment = placement.as_dict()
    site_pools: Dict[int, int] = {}
    for group in groups:
        if group.group_id not in assignment:
            raise PlanError("placement does not cover group %d" % group.group_id)
        for site in group.member_sites:
            site_pools[site] = assignment[group.group_id]
    return PlanFile(default_pool, tuple(sorted(site_pools.items())))


def plan_to_json(plan: PlanFile) -> dict:
    return {
        "version": plan.version,
        "default_pool": plan.default_pool,
        "assignments": {"%016x" % site: pool for site, pool in plan.assignments},
    }


def save_plan(plan: PlanFile, path: str) -> None:
    with open(path, "w") as fp:
        json.dump(plan_to_json(plan), fp, indent=2, sort_keys=True)
        fp.write("\n")


def read_plan(source: Union[str, IO[str]],
              known_sites: Optional[Sequence[int]] = None) -> PlanFile:
    """Load a plan file, checking version and (optionally) site identity."""
    if isinstance(source, str):
        with open(source) as fp:
            data = json.load(fp)
    else:
        data = json.load(source)
    version = data.get("version")
    if version != PLAN_VERSION:
        raise PlanError("unsupported plan version %r" % version)
    assignments = []
    for site_text, pool in data.get("assignments", {}).items():
        try:
            site = int(site_text, 16)
        except ValueError:
            raise PlanError("bad site id %r in plan" % site_text)
        assignments.append((site, int(pool)))
    if known_sites is not None:
        known = set(known_sites)
        for site, _ in assignments:
            if site not in known:
                raise PlanError("plan references unknown site %016x" % site)
    return PlanFile(int(data.get("default_pool", 0)), tuple(sorted(assignments)))


@dataclass
class MeasurementSet:
    """Runtimes collected for one placement."""

    placement_index: int
    runs: List[float] = field(default_factory=list)
    failures: int = 0

    @property
    def ok(self) -> bool:
        return len(self.runs) > 0

    @property
    def mean(self) -> float:
        if not self.runs:
            raise ValueError("no successful runs for placement %d" % self.placement_index)
        return sum(self.runs) / len(self.runs)

    @property
    def stddev(self) -> float:
        if not self.runs:
            return 0.0
        return statistics.pstdev(self.runs)


class SimulatedExecutor:
    """Runs the workload through the deterministic machine model."""

    kind = "simulated"
    default_runs = 1

    def __init__(self, workload: WorkloadSpec, machine: MachineModel):
        self.workload = workload
        self.machine = machine

    def run(self, placement: Placement) -> float:
        return simulate_workload(self.workload, placement, self.machine)


class ExternalExecutor:
    """Runs an external command once per measurement, strictly serially.

    The plan file path is substituted for "{plan}" in the argv template and
    also exported as HMPT_PLAN; wall-clock time of the process is the
    measurement.  Non-zero exit or timeout marks the run failed.
    """

    kind = "external"
    default_runs = 3

    def __init__(self, argv: Sequence[str], groups: Sequence[AllocationGroup],
                 env: Optional[Dict[str, str]] = None,
                 timeout: Optional[float] = None,
                 default_pool: int = 0,
                 workdir: Optional[str] = None,
                 trace_out_dir: Optional[str] = None):
        if not argv:
            raise ValueError("external executor needs a command")
        self.argv = list(argv)
        self.groups = list(groups)
        self.env = dict(env or {})
        self.timeout = timeout
        self.default_pool = default_pool
        self.workdir = workdir
        self.trace_out_dir = trace_out_dir
        self.runs_started = 0
        self.history: List[Tuple[float, float]] = []  # (start, end) monotonic

    def run(self, placement: Placement) -> float:
        plan = write_plan(placement, self.groups, self.default_pool)
        with tempfile.NamedTemporaryFile("w", suffix=".plan.json", delete=False) as fp:
            json.dump(plan_to_json(plan), fp)
            plan_path = fp.name
        try:
            argv = [arg.replace("{plan}", plan_path) for arg in self.argv]
            env = dict(os.environ)
            env.update(self.env)
            env[ENV_PLAN] = plan_path
            env[ENV_DEFAULT_POOL] = str(self.default_pool)
            if self.trace_out_dir is not None:
                os.makedirs(self.trace_out_dir, exist_ok=True)
                env[ENV_TRACE_OUT] = os.path.join(
                    self.trace_out_dir, "run%05d.trace" % self.runs_started)
            self.runs_started += 1
            start = time.perf_counter()
            try:
                proc = subprocess.run(
                    argv, env=env, cwd=self.workdir, timeout=self.timeout,
                    stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
            except subprocess.TimeoutExpired:
                self.history.append((start, time.perf_counter()))
                raise RunFailure("timed out: %s" % " ".join(argv))
            end = time.perf_counter()
            self.history.append((start, end))
            if proc.returncode != 0:
                raise RunFailure("exit %d: %s" % (proc.returncode, " ".join(argv)))
            return end - start
        finally:
            try:
                os.unlink(plan_path)
            except OSError:
                pass


Executor = Union[SimulatedExecutor, ExternalExecutor]


def run_campaign(space: ConfigurationSpace, executor: Executor,
                 n: Optional[int] = None,
                 log_path: Optional[str] = None) -> List[MeasurementSet]:
    """Measure every placement n times; failures are recorded, not fatal."""
    if n is None:
        n = executor.default_runs
    if n < 1:
        raise ValueError("need at least one run per placement")

    rows = []
    results = []
    for index, placement in enumerate(space.placements):
        mset = MeasurementSet(index)
        for run_index in range(n):
            try:
                seconds = executor.run(placement)
            except RunFailure as exc:
                mset.failures += 1
                rows.append((index, run_index, "", "failed"))
                log.warning("placement %d run %d failed: %s", index, run_index, exc)
                continue
            if seconds < 0:
                raise RunFailure("executor returned negative runtime")
            mset.runs.append(seconds)
            rows.append((index, run_index, repr(seconds), "ok"))
        if not mset.ok:
            log.warning("placement %d: all %d runs failed; excluded from analysis",
                        index, n)
        results.append(mset)

    if log_path is not None:
        _write_log(rows, log_path)
    return results


def _write_log(rows, path: str) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["placement_index", "run_index", "seconds", "status"])
        writer.writerows(rows)


def write_measurements_csv(measurements: Sequence[MeasurementSet], path: str) -> None:
    """Campaign log: one row per run, repr'd seconds so floats round-trip."""
    rows = []
    for mset in measurements:
        for run_index, seconds in enumerate(mset.runs):
            rows.append((mset.placement_index, run_index, repr(seconds), "ok"))
        for i in range(mset.failures):
            rows.append((mset.placement_index, len(mset.runs) + i, "", "failed"))
    _write_log(rows, path)


def read_measurements_csv(path: str) -> List[MeasurementSet]:
    by_index: Dict[int, MeasurementSet] = {}
    with open(path, newline="") as fp:
        reader = csv.DictReader(fp)
        for row in reader:
            index = int(row["placement_index"])
            mset = by_index.setdefault(index, MeasurementSet(index))
            if row["status"] == "ok":
                mset.runs.append(float(row["seconds"]))
            else:
                mset.failures += 1
    return [by_index[i] for i in sorted(by_index)]


CAMPAIGN_META = "campaign.json"
CAMPAIGN_MEASUREMENTS = "measurements.csv"


def save_campaign_dir(directory: str, groups: Sequence[AllocationGroup],
                      pools, measurements: Sequence[MeasurementSet],
                      n: int, executor_kind: str) -> None:
    """Persist a campaign: metadata JSON plus the per-run measurement CSV."""
    from .perfmodel import pool_to_json  # local import to avoid a cycle

    os.makedirs(directory, exist_ok=True)
    meta = {
        "version": 1,
        "n": n,
        "executor": executor_kind,
        "pools": [pool_to_json(p) for p in pools],
        "groups": [
            {
                "id": g.group_id,
                "sites": ["%016x" % s for s in g.member_sites],
                "bytes": g.total_bytes,
                "sample_share": g.sample_share,
                "is_rest": g.is_rest_group,
                "name": g.name,
            }
            for g in groups
        ],
    }
    with open(os.path.join(directory, CAMPAIGN_META), "w") as fp:
        json.dump(meta, fp, indent=2)
        fp.write("\n")
    write_measurements_csv(measurements,
                           os.path.join(directory, CAMPAIGN_MEASUREMENTS))


def load_campaign_dir(directory: str):
    """Load (groups, pools, measurements, meta) written by save_campaign_dir."""
    from .perfmodel import pool_from_json

    if directory.endswith(".csv"):
        directory = os.path.dirname(directory) or "."
    with open(os.path.join(directory, CAMPAIGN_META)) as fp:
        meta = json.load(fp)
    if meta.get("version") != 1:
        raise PlanError("unsupported campaign version %r" % meta.get("version"))
    pools = tuple(pool_from_json(entry) for entry in meta["pools"])
    groups = [
        AllocationGroup(
            group_id=int(entry["id"]),
            member_sites=tuple(int(s, 16) for s in entry["sites"]),
            total_bytes=int(entry["bytes"]),
            sample_share=float(entry["sample_share"]),
            is_rest_group=bool(entry.get("is_rest", False)),
            name=str(entry.get("name", "")),
        )
        for entry in meta["groups"]
    ]
    measurements = read_measurements_csv(
        os.path.join(directory, CAMPAIGN_MEASUREMENTS))
    return groups, pools, measurements, meta

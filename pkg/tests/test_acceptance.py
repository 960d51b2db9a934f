"""Acceptance suite: one test per exit criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v` (or `-s` to see the verdict
lines).  Tolerances are pinned here and nowhere else.
"""

import itertools
import random
import time

import pytest

from hmpt import synthdata
from hmpt.analysis import (
    TIME_SAVINGS,
    build_report,
    compute_speedups,
    expected_speedup,
    find_threshold_placement,
    summarize,
)
from hmpt.configspace import enumerate_placements
from hmpt.grouping import AllocationGroup
from hmpt.harness import (
    MeasurementSet,
    PlanFile,
    SimulatedExecutor,
    read_plan,
    run_campaign,
    save_plan,
)
from hmpt.perfmodel import (
    BANDWIDTH_BOUND,
    LATENCY_BOUND,
    READ,
    WRITE,
    KernelSpec,
    MachineModel,
    StreamSpec,
    WorkloadSpec,
    default_machine,
    simulate_kernel,
    stream_bandwidth,
    stream_table,
)
from hmpt.trace import parse_trace, serialize_trace

from test_trace import _random_bundle

GB = 1_000_000_000
MACHINE = default_machine()


def _groups(sizes, shares=None):
    shares = shares or [0.0] * len(sizes)
    return [AllocationGroup(i, (i,), s, shares[i]) for i, s in enumerate(sizes)]


def _ok(name):
    print("ACCEPTANCE %-24s PASS" % name)


def test_enumeration_counts_and_bijection():
    rng = random.Random(0)
    for k in range(1, 13):
        sizes = [rng.randint(1, 64) * GB for _ in range(k)]
        space = enumerate_placements(_groups(sizes), MACHINE.pools)
        assert len(space.placements) == 2 ** k
        assert len({p.assignment for p in space.placements}) == 2 ** k
        # bijection with subsets: every placement is (fast set, complement)
        subsets = {p.groups_in(1) for p in space.placements}
        expected = {
            tuple(sorted(c))
            for r in range(k + 1)
            for c in itertools.combinations(range(k), r)
        }
        assert subsets == expected
        for p in space.placements:
            fast, slow = set(p.groups_in(1)), set(p.groups_in(0))
            assert fast | slow == set(range(k)) and not fast & slow

    start = time.perf_counter()
    space = enumerate_placements(_groups([GB] * 16), MACHINE.pools)
    elapsed = time.perf_counter() - start
    assert len(space.placements) == 65536
    assert elapsed < 1.0, "k=16 enumeration took %.2fs" % elapsed
    _ok("enumeration")


def test_independence_oracle_separable_workload():
    k = 8
    rng = random.Random(1)
    sizes = [rng.randint(4, 40) * GB for _ in range(k)]
    workload = WorkloadSpec(tuple(
        (KernelSpec("k%d" % g, BANDWIDTH_BOUND, (StreamSpec(g, READ, sizes[g]),)), 1)
        for g in range(k)
    ))
    space = enumerate_placements(_groups(sizes), MACHINE.pools)
    measurements = run_campaign(space, SimulatedExecutor(workload, MACHINE), n=1)
    stats = compute_speedups(measurements, space)
    singletons = {
        s.fast_groups[0]: s.speedup for s in stats if len(s.fast_groups) == 1
    }
    for s in stats:
        if len(s.fast_groups) < 2:
            continue
        predicted = expected_speedup(singletons, s.fast_groups, TIME_SAVINGS)
        assert abs(s.speedup - predicted) / predicted <= 1e-9, s.fast_groups
    assert len(stats) == 2 ** k
    _ok("independence-oracle")


def test_threshold_selection_matches_bruteforce_oracle():
    rng = random.Random(2)
    for table in range(200):
        k = rng.randint(1, 12)
        # discrete pools of values force plenty of exact ties
        speed_choices = [1.0, 1.1, 1.1, 1.5, 1.5, 2.0, 2.5]
        frac_choices = [0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 1.0]
        from hmpt.analysis import PlacementStat

        stats = [
            PlacementStat(
                index=i,
                speedup=1.0 if i == 0 else rng.choice(speed_choices),
                expected_speedup=None,
                hbm_data_fraction=0.0 if i == 0 else rng.choice(frac_choices),
                hbm_access_fraction=0.0,
                fast_groups=(),
            )
            for i in range(min(2 ** k, 64))
        ]
        threshold = rng.choice([0.5, 0.9, 0.95, 1.0])
        got = find_threshold_placement(stats, threshold)

        max_speedup = max(s.speedup for s in stats)
        best = None
        for s in stats:
            if s.speedup < threshold * max_speedup:
                continue
            key = (s.hbm_data_fraction, -s.speedup, s.index)
            if best is None or key < best[0]:
                best = (key, s)
        assert got == (best[1].index, best[1].hbm_data_fraction)
    _ok("threshold-selection")


def test_simulator_calibration():
    rows = stream_table(MACHINE)
    assert stream_bandwidth(rows, "copy", ("DDR", "DDR")) == 200 * GB
    assert stream_bandwidth(rows, "copy", ("HBM", "HBM")) == 700 * GB
    assert stream_bandwidth(rows, "copy", ("HBM", "HBM")) \
        / stream_bandwidth(rows, "copy", ("DDR", "DDR")) == 3.5

    copy = KernelSpec("copy", BANDWIDTH_BOUND,
                      (StreamSpec(0, READ, 16 * GB), StreamSpec(1, WRITE, 16 * GB)))
    unpenalized = MachineModel(MACHINE.pools, MACHINE.cores, MACHINE.clock_hz,
                               MACHINE.flops_per_cycle, 1.0)
    t_pen = simulate_kernel(copy, {0: 1, 1: 0}, MACHINE)
    t_raw = simulate_kernel(copy, {0: 1, 1: 0}, unpenalized)
    assert MACHINE.cross_write_penalty == 1.0 / 0.65
    assert t_pen == t_raw * MACHINE.cross_write_penalty

    chase = KernelSpec("chase", LATENCY_BOUND, (StreamSpec(0, READ, 8),),
                       dependent_accesses=10 ** 9)
    ratio = simulate_kernel(chase, {0: 1}, MACHINE) / simulate_kernel(chase, {0: 0}, MACHINE)
    assert abs(ratio - 1.20) <= 1e-12
    _ok("simulator-calibration")


def test_stream_qualitative_checks():
    rows = stream_table(MACHINE)
    add_fast = stream_bandwidth(rows, "add", ("HBM", "HBM", "HBM"))
    mixed = stream_bandwidth(rows, "add", ("HBM", "DDR", "HBM"))
    assert abs(mixed - add_fast) / add_fast <= 0.05

    hhd = stream_bandwidth(rows, "add", ("HBM", "HBM", "DDR"))
    ddh = stream_bandwidth(rows, "add", ("DDR", "DDR", "HBM"))
    assert abs(hhd - ddh) / ddh <= 0.10
    _ok("stream-qualitative")


def test_pipeline_reproduction_all_benchmarks():
    # flagship campaign first: exact summary plus the headline relationships
    mg = synthdata.benchmark("mg")
    report = synthdata.report_for(mg)
    row = summarize(report)
    assert (row.max_speedup, row.all_fast_speedup, row.threshold_data_percent) \
        == (2.27, 2.26, 69.6)
    by_groups = {s.fast_groups: s for s in report.stats}
    assert by_groups[(0,)].speedup > 1.6
    assert by_groups[(1,)].speedup > 1.6
    assert by_groups[(0, 1)].speedup > 2.2
    assert by_groups[(0, 1)].hbm_access_fraction >= 0.90

    for name, bench in synthdata.BENCHMARKS.items():
        got = summarize(synthdata.report_for(bench))
        assert (got.max_speedup, got.all_fast_speedup, got.threshold_data_percent) \
            == bench.summary, name
    _ok("pipeline-reproduction")


def test_trace_roundtrip_fuzz():
    rng = random.Random(3)
    for _ in range(1000):
        text = serialize_trace(_random_bundle(rng))
        assert serialize_trace(parse_trace(text)) == text
    _ok("trace-roundtrip")


def test_plan_roundtrip_fuzz(tmp_path):
    rng = random.Random(4)
    path = str(tmp_path / "plan.json")
    for _ in range(1000):
        sites = rng.sample(range(1, 1 << 60), rng.randint(1, 16))
        plan = PlanFile(
            default_pool=rng.randint(0, 3),
            assignments=tuple(sorted((s, rng.randint(0, 3)) for s in sites)),
        )
        save_plan(plan, path)
        assert read_plan(path) == plan
    _ok("plan-roundtrip")

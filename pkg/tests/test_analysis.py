import random

import pytest

from hmpt.analysis import (
    ADDITIVE,
    TIME_SAVINGS,
    AnalysisError,
    build_report,
    compute_speedups,
    expected_speedup,
    find_threshold_placement,
    report_to_json,
    stats_to_csv,
    summarize,
)
from hmpt.configspace import enumerate_placements
from hmpt.grouping import AllocationGroup
from hmpt.harness import MeasurementSet
from hmpt.perfmodel import default_machine
from hmpt import synthdata

GB = 1_000_000_000
POOLS = default_machine().pools


def _space(sizes, shares=None):
    shares = shares or [0.0] * len(sizes)
    groups = [AllocationGroup(i, (i,), s, shares[i]) for i, s in enumerate(sizes)]
    return enumerate_placements(groups, POOLS)


def _measurements(times):
    return [MeasurementSet(i, runs=[float(t)]) for i, t in enumerate(times)]


def test_speedup_is_reference_over_config():
    space = _space([GB])
    stats = compute_speedups(_measurements([100.0, 44.05]), space)
    assert stats[0].speedup == 1.0
    assert stats[1].speedup == pytest.approx(2.27, abs=5e-3)


def test_reference_speedup_is_exactly_one():
    space = _space([GB, GB])
    stats = compute_speedups(_measurements([123.0, 60.0, 70.0, 40.0]), space)
    assert stats[0].speedup == 1.0
    assert all(s.speedup > 0 for s in stats)


def test_missing_reference_rejected():
    space = _space([GB])
    failed_ref = [MeasurementSet(0, runs=[], failures=3), MeasurementSet(1, runs=[1.0])]
    with pytest.raises(AnalysisError, match="no reference measurement"):
        compute_speedups(failed_ref, space)


def test_failed_placements_are_excluded():
    space = _space([GB, GB])
    measurements = _measurements([100.0, 50.0, 80.0, 25.0])
    measurements[2] = MeasurementSet(2, runs=[], failures=1)
    stats = compute_speedups(measurements, space)
    assert [s.index for s in stats] == [0, 1, 3]


def test_fractions_attached_from_space_and_shares():
    space = _space([3 * GB, GB], shares=[0.6, 0.3])
    stats = compute_speedups(_measurements([100.0, 50.0, 80.0, 25.0]), space)
    by_index = {s.index: s for s in stats}
    assert by_index[1].hbm_data_fraction == 0.75
    assert by_index[1].hbm_access_fraction == 0.6
    assert by_index[3].hbm_data_fraction == 1.0
    assert by_index[3].hbm_access_fraction == pytest.approx(0.9)


def test_expected_speedup_empty_subset():
    assert expected_speedup({}, ()) == 1.0


def test_expected_speedup_additive_arithmetic():
    singletons = {0: 1.65, 1: 1.62}
    assert expected_speedup(singletons, (0, 1)) == pytest.approx(2.27, abs=1e-12)


def test_expected_speedup_two_fast_groups_compose_above_2_2():
    singletons = {0: 1.65, 1: 1.62}
    assert expected_speedup(singletons, (0, 1)) > 2.2


def test_expected_speedup_time_savings_mode():
    import math

    # each singleton saves a quarter of the runtime; together half remains
    singletons = {0: 4 / 3, 1: 4 / 3}
    assert expected_speedup(singletons, (0, 1), TIME_SAVINGS) == pytest.approx(2.0, rel=1e-12)
    # degenerate: the combined savings covering the entire runtime
    assert math.isinf(expected_speedup({0: 2.0, 1: 2.0}, (0, 1), TIME_SAVINGS))


def test_expected_speedup_missing_singleton():
    with pytest.raises(AnalysisError, match="missing singleton"):
        expected_speedup({0: 1.5}, (0, 1))


def test_expected_attached_only_to_combinations():
    space = _space([GB, GB])
    stats = compute_speedups(_measurements([100.0, 50.0, 80.0, 25.0]), space)
    by_index = {s.index: s for s in stats}
    assert by_index[0].expected_speedup is None
    assert by_index[1].expected_speedup is None
    assert by_index[3].expected_speedup == pytest.approx(1.0 + 1.0 + 0.25)


def test_find_threshold_placement_threshold_one_returns_max():
    space = _space([GB, GB])
    stats = compute_speedups(_measurements([100.0, 50.0, 80.0, 25.0]), space)
    index, fraction = find_threshold_placement(stats, threshold=1.0)
    assert index == 3
    assert fraction == 1.0


def test_find_threshold_placement_mg_campaign():
    report = synthdata.report_for(synthdata.benchmark("mg"))
    assert report.max_speedup == 2.27
    assert report.threshold_placement == 0b011
    placement = report.space.placements[report.threshold_placement]
    assert placement.groups_in(report.fast_pool_id) == (0, 1)


def test_lu_campaign_single_group_story():
    bench = synthdata.benchmark("lu")
    report = synthdata.report_for(bench)
    stats = {s.fast_groups: s for s in report.stats}
    single = stats[(0,)]
    # one ~25%-footprint group delivers most of the peak on its own,
    # but just misses the 90% cut
    assert single.hbm_data_fraction == pytest.approx(0.25, abs=1e-9)
    assert single.speedup > 1.1
    assert single.speedup < 0.9 * report.max_speedup
    assert summarize(report).threshold_data_percent == 58.8


def test_find_threshold_matches_bruteforce_oracle():
    rng = random.Random(5)
    for _ in range(100):
        k = rng.randint(1, 4)
        space = _space([rng.randint(1, 8) * GB for _ in range(k)])
        times = [100.0] + [
            rng.choice([20.0, 25.0, 40.0, 50.0, 80.0])
            for _ in range(2 ** k - 1)
        ]
        stats = compute_speedups(_measurements(times), space)
        threshold = rng.choice([0.5, 0.9, 1.0])
        got_index, got_fraction = find_threshold_placement(stats, threshold)

        max_speedup = max(s.speedup for s in stats)
        qualifying = [s for s in stats if s.speedup >= threshold * max_speedup]
        best = None
        for s in qualifying:
            key = (s.hbm_data_fraction, -s.speedup, s.index)
            if best is None or key < best[0]:
                best = (key, s)
        assert got_index == best[1].index
        assert got_fraction == best[1].hbm_data_fraction


def test_threshold_fraction_monotone_in_threshold():
    rng = random.Random(6)
    for _ in range(30):
        k = rng.randint(1, 4)
        space = _space([rng.randint(1, 8) * GB for _ in range(k)])
        times = [100.0] + [rng.uniform(20, 99) for _ in range(2 ** k - 1)]
        stats = compute_speedups(_measurements(times), space)
        fractions = [
            find_threshold_placement(stats, t)[1]
            for t in (1.0, 0.95, 0.9, 0.7, 0.5, 0.0)
        ]
        assert fractions == sorted(fractions, reverse=True)


def test_summary_rows_for_bundled_campaigns():
    for name, expected in [
        ("mg", (2.27, 2.26, 69.6)),
        ("is", (2.21, 2.18, 60.0)),
    ]:
        report = synthdata.report_for(synthdata.benchmark(name))
        row = summarize(report)
        assert (row.max_speedup, row.all_fast_speedup, row.threshold_data_percent) == expected


def test_single_group_double_speed_summary():
    space = _space([GB])
    stats = compute_speedups(_measurements([100.0, 50.0]), space)
    report = build_report(stats, space)
    row = summarize(report)
    assert row == (2.0, 2.0, 100.0)


def test_report_json_and_csv_exports(tmp_path):
    report = synthdata.report_for(synthdata.benchmark("mg"))
    data = report_to_json(report)
    assert data["max_speedup"] == 2.27
    assert data["threshold_data_percent"] == 69.6
    assert len(data["stats"]) == 8

    import io

    buf = io.StringIO()
    stats_to_csv(report.stats, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 9
    assert lines[0].startswith("index,fast_groups,speedup")
    # repr'd floats parse back exactly
    first = lines[1].split(",")
    assert float(first[2]) == report.stats[0].speedup


def test_mg_singleton_speedups_exceed_1_6():
    report = synthdata.report_for(synthdata.benchmark("mg"))
    stats = {s.fast_groups: s for s in report.stats}
    assert stats[(0,)].speedup > 1.6
    assert stats[(1,)].speedup > 1.6
    assert stats[(0, 1)].speedup > 2.2
    assert stats[(0, 1)].hbm_access_fraction >= 0.90

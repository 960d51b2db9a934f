"""Speedup statistics over a measured configuration space.

Speedups are relative to the all-slow reference placement.  Expected
speedups for group combinations are predicted from singleton measurements
under an independence assumption; two composition rules are provided:

* additive (default): 1 + sum(S_g - 1) over the combined groups
* time_savings: combine each group's saved runtime fraction instead,
  1 / (1 + sum(1/S_g - 1)), which is exact when the workload is a
  sequential sum of per-group kernels

The headline result of a campaign is the placement that reaches a given
share (default 90%) of the maximum speedup with the least data in the
fast pool.
"""

import csv
import math
from dataclasses import dataclass
from typing import Dict, IO, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .configspace import ConfigurationSpace, Placement, data_fraction, data_percent
from .harness import MeasurementSet

ADDITIVE = "additive"
TIME_SAVINGS = "time_savings"
EXPECTED_MODES = (ADDITIVE, TIME_SAVINGS)


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class PlacementStat:
    index: int
    speedup: float
    expected_speedup: Optional[float]
    hbm_data_fraction: float
    hbm_access_fraction: float
    fast_groups: Tuple[int, ...]


@dataclass
class AnalysisReport:
    space: ConfigurationSpace
    fast_pool_id: int
    stats: List[PlacementStat]
    threshold: float
    max_speedup: float
    best_placement: int
    all_fast_speedup: Optional[float]
    threshold_placement: int
    threshold_data_fraction: float


class SummaryRow(NamedTuple):
    max_speedup: float
    all_fast_speedup: Optional[float]
    threshold_data_percent: float


def fast_pool_id(space: ConfigurationSpace) -> int:
    """The non-reference pool with the highest read bandwidth."""
    candidates = [p for p in space.pools if p.pool_id != 0]
    if not candidates:
        raise AnalysisError("configuration space has no fast pool")
    return max(candidates, key=lambda p: p.read_bandwidth).pool_id


def expected_speedup(singletons: Dict[int, float], subset: Iterable[int],
                     mode: str = ADDITIVE) -> float:
    """Speedup predicted for a combination of groups from their singletons."""
    if mode not in EXPECTED_MODES:
        raise AnalysisError("unknown expected-speedup mode %r" % mode)
    subset = tuple(subset)
    missing = [g for g in subset if g not in singletons]
    if missing:
        raise AnalysisError("missing singleton speedup for groups %r" % (missing,))
    if mode == ADDITIVE:
        return 1.0 + sum(singletons[g] - 1.0 for g in subset)
    remaining = 1.0 + sum(1.0 / singletons[g] - 1.0 for g in subset)
    if remaining <= 0.0:
        return math.inf  # singleton savings already cover the whole runtime
    return 1.0 / remaining


def compute_speedups(measurements: Sequence[MeasurementSet],
                     space: ConfigurationSpace,
                     reference_index: int = 0,
                     fast_pool: Optional[int] = None,
                     expected_mode: str = ADDITIVE) -> List[PlacementStat]:
    """Per-placement speedups with data/access fractions attached.

    Placements with no successful runs are dropped.  Expected speedups are
    filled in for every combination of two or more groups whose singleton
    placements were all measured.
    """
    if fast_pool is None:
        fast_pool = fast_pool_id(space)
    by_index = {m.placement_index: m for m in measurements if m.ok}
    reference = by_index.get(reference_index)
    if reference is None:
        raise AnalysisError("no reference measurement")
    ref_mean = reference.mean
    if ref_mean <= 0:
        raise AnalysisError("reference runtime must be positive")

    share_by_group = {g.group_id: g.sample_share for g in space.groups}
    singletons: Dict[int, float] = {}
    prelim: List[Tuple[int, float, Placement, Tuple[int, ...]]] = []
    for index in sorted(by_index):
        placement = space.placements[index]
        speedup = ref_mean / by_index[index].mean
        fast = placement.groups_in(fast_pool)
        if len(fast) == 1:
            singletons[fast[0]] = speedup
        prelim.append((index, speedup, placement, fast))

    stats = []
    for index, speedup, placement, fast in prelim:
        expected = None
        if len(fast) >= 2 and all(g in singletons for g in fast):
            expected = expected_speedup(singletons, fast, expected_mode)
        stats.append(
            PlacementStat(
                index=index,
                speedup=speedup,
                expected_speedup=expected,
                hbm_data_fraction=data_fraction(placement, fast_pool),
                hbm_access_fraction=sum(share_by_group[g] for g in fast),
                fast_groups=fast,
            )
        )
    return stats


def find_threshold_placement(stats: Sequence[PlacementStat],
                             threshold: float = 0.9) -> Tuple[int, float]:
    """Cheapest placement (least fast-pool data) at >= threshold * max speedup.

    Ties prefer higher speedup, then lower placement index.  The maximum
    placement always qualifies, so a result always exists.
    """
    if not stats:
        raise AnalysisError("no placement statistics")
    max_speedup = max(s.speedup for s in stats)
    cutoff = threshold * max_speedup
    best = min(
        (s for s in stats if s.speedup >= cutoff),
        key=lambda s: (s.hbm_data_fraction, -s.speedup, s.index),
    )
    return best.index, best.hbm_data_fraction


def build_report(stats: Sequence[PlacementStat], space: ConfigurationSpace,
                 threshold: float = 0.9,
                 fast_pool: Optional[int] = None) -> AnalysisReport:
    if fast_pool is None:
        fast_pool = fast_pool_id(space)
    if not stats:
        raise AnalysisError("no placement statistics")
    best = max(stats, key=lambda s: (s.speedup, -s.index))
    all_fast = None
    k = len(space.groups)
    for s in stats:
        if len(s.fast_groups) == k:
            all_fast = s.speedup
    t_index, t_fraction = find_threshold_placement(stats, threshold)
    return AnalysisReport(
        space=space,
        fast_pool_id=fast_pool,
        stats=list(stats),
        threshold=threshold,
        max_speedup=best.speedup,
        best_placement=best.index,
        all_fast_speedup=all_fast,
        threshold_placement=t_index,
        threshold_data_fraction=t_fraction,
    )


def summarize(report: AnalysisReport) -> SummaryRow:
    """Headline tuple: max speedup, all-fast speedup, threshold data percent."""
    placement = report.space.placements[report.threshold_placement]
    percent = data_percent(placement, report.fast_pool_id)
    return SummaryRow(report.max_speedup, report.all_fast_speedup, percent)


def report_to_json(report: AnalysisReport) -> dict:
    summary = summarize(report)
    return {
        "threshold": report.threshold,
        "fast_pool_id": report.fast_pool_id,
        "max_speedup": report.max_speedup,
        "best_placement": report.best_placement,
        "all_fast_speedup": report.all_fast_speedup,
        "threshold_placement": report.threshold_placement,
        "threshold_data_fraction": report.threshold_data_fraction,
        "threshold_data_percent": summary.threshold_data_percent,
        "stats": [
            {
                "index": s.index,
                "fast_groups": list(s.fast_groups),
                "speedup": s.speedup,
                "expected_speedup": s.expected_speedup,
                "hbm_data_fraction": s.hbm_data_fraction,
                "hbm_access_fraction": s.hbm_access_fraction,
            }
            for s in report.stats
        ],
    }


def stats_to_csv(stats: Sequence[PlacementStat], fp: IO[str]) -> None:
    writer = csv.writer(fp)
    writer.writerow([
        "index", "fast_groups", "speedup", "expected_speedup",
        "hbm_data_fraction", "hbm_access_fraction",
    ])
    for s in stats:
        writer.writerow([
            s.index,
            "+".join(str(g) for g in s.fast_groups) or "ref",
            repr(s.speedup),
            "" if s.expected_speedup is None else repr(s.expected_speedup),
            repr(s.hbm_data_fraction),
            repr(s.hbm_access_fraction),
        ])

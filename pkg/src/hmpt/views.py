"""Plot-ready tables derived from an analysis report.

The detailed view lists every placement (reference first, then singletons,
pairs, and larger combinations) with measured and expected speedups plus
the fast-pool data and access fractions.  The summary view flattens the
same report into scatter points relating fast-pool data fraction to
speedup, with separate marker classes for singleton placements,
combinations, and expected values.
"""

import csv
from typing import IO, List, NamedTuple, Optional, Tuple

from .analysis import AnalysisReport

MARKER_SINGLETON = "singleton"
MARKER_COMBINATION = "combination"
MARKER_EXPECTED = "expected"


class DetailedViewRow(NamedTuple):
    label: str                    # "ref", "0", "0+1", ...
    cardinality: int              # number of fast-pool groups
    measured_speedup: float
    expected_speedup: Optional[float]
    hbm_data_fraction: float
    hbm_access_fraction: float


class SummaryViewRow(NamedTuple):
    hbm_data_fraction: float
    speedup: float
    marker: str


def emit_views(report: AnalysisReport) -> Tuple[List[DetailedViewRow], List[SummaryViewRow]]:
    """Detailed rows grouped by subset cardinality, plus summary scatter rows."""
    ordered = sorted(report.stats, key=lambda s: (len(s.fast_groups), s.fast_groups))
    detailed = []
    summary = []
    for stat in ordered:
        label = "+".join(str(g) for g in stat.fast_groups) or "ref"
        detailed.append(
            DetailedViewRow(
                label=label,
                cardinality=len(stat.fast_groups),
                measured_speedup=stat.speedup,
                expected_speedup=stat.expected_speedup,
                hbm_data_fraction=stat.hbm_data_fraction,
                hbm_access_fraction=stat.hbm_access_fraction,
            )
        )
        marker = MARKER_SINGLETON if len(stat.fast_groups) <= 1 else MARKER_COMBINATION
        summary.append(SummaryViewRow(stat.hbm_data_fraction, stat.speedup, marker))
        if stat.expected_speedup is not None:
            summary.append(
                SummaryViewRow(stat.hbm_data_fraction, stat.expected_speedup,
                               MARKER_EXPECTED))
    return detailed, summary


def detailed_to_csv(rows: List[DetailedViewRow], fp: IO[str]) -> None:
    writer = csv.writer(fp)
    writer.writerow([
        "placement", "fast_group_count", "measured_speedup", "expected_speedup",
        "hbm_data_fraction", "hbm_access_fraction",
    ])
    for row in rows:
        writer.writerow([
            row.label, row.cardinality, repr(row.measured_speedup),
            "" if row.expected_speedup is None else repr(row.expected_speedup),
            repr(row.hbm_data_fraction), repr(row.hbm_access_fraction),
        ])


def detailed_from_csv(fp: IO[str]) -> List[DetailedViewRow]:
    rows = []
    for record in csv.DictReader(fp):
        expected = record["expected_speedup"]
        rows.append(
            DetailedViewRow(
                label=record["placement"],
                cardinality=int(record["fast_group_count"]),
                measured_speedup=float(record["measured_speedup"]),
                expected_speedup=float(expected) if expected else None,
                hbm_data_fraction=float(record["hbm_data_fraction"]),
                hbm_access_fraction=float(record["hbm_access_fraction"]),
            )
        )
    return rows


def summary_to_csv(rows: List[SummaryViewRow], fp: IO[str]) -> None:
    writer = csv.writer(fp)
    writer.writerow(["hbm_data_fraction", "speedup", "marker"])
    for row in rows:
        writer.writerow([repr(row.hbm_data_fraction), repr(row.speedup), row.marker])


def summary_from_csv(fp: IO[str]) -> List[SummaryViewRow]:
    return [
        SummaryViewRow(float(r["hbm_data_fraction"]), float(r["speedup"]), r["marker"])
        for r in csv.DictReader(fp)
    ]


def detailed_to_json(rows: List[DetailedViewRow]) -> List[dict]:
    return [row._asdict() for row in rows]


def summary_to_json(rows: List[SummaryViewRow]) -> List[dict]:
    return [row._asdict() for row in rows]


def detailed_from_json(data: List[dict]) -> List[DetailedViewRow]:
    return [DetailedViewRow(**entry) for entry in data]


def summary_from_json(data: List[dict]) -> List[SummaryViewRow]:
    return [SummaryViewRow(**entry) for entry in data]

"""Bundled synthetic benchmark campaigns.

Each campaign is a deterministic, self-contained fixture: a trace whose
sites, sizes, and access densities mimic a well-known HPC workload on a
two-pool (DDR+HBM-style) machine, plus a measurement table covering every
group placement.  Byte sizes and runtimes are integers chosen so that the
headline statistics (speedup ratios, fast-pool data percentages) come out
bit-exact in double arithmetic, which the test-suite relies on.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from . import grouping
from .analysis import AnalysisReport, build_report, compute_speedups
from .configspace import ConfigurationSpace, enumerate_placements
from .grouping import AllocationGroup, GroupingConfig, alias_sites
from .harness import MeasurementSet
from .perfmodel import default_machine
from .trace import TraceBundle, attribute_samples, parse_trace, site_hash

Subset = Tuple[int, ...]


@dataclass(frozen=True)
class SyntheticBenchmark:
    """One bundled campaign: group layout, access densities, runtimes."""

    name: str
    description: str
    group_bytes: Tuple[int, ...]
    sample_counts: Tuple[int, ...]
    unattributed_count: int
    runtimes: Dict[Subset, int]  # fast-pool group subset -> seconds
    summary: Tuple[float, float, float]  # max, all-fast, threshold data %

    @property
    def footprint(self) -> int:
        return sum(self.group_bytes)

    @property
    def total_samples(self) -> int:
        return sum(self.sample_counts) + self.unattributed_count


def _runtimes(table: Dict[str, int]) -> Dict[Subset, int]:
    out: Dict[Subset, int] = {}
    for key, seconds in table.items():
        subset = () if key == "ref" else tuple(int(g) for g in key.split("+"))
        out[subset] = seconds
    return out


BENCHMARKS: Dict[str, SyntheticBenchmark] = {
    "mg": SyntheticBenchmark(
        name="mg",
        description="multi-grid solver: three near-equal arrays, two of them hot",
        group_bytes=(9_208_080_000, 9_208_080_000, 8_043_840_000),
        sample_counts=(480, 432, 78),
        unattributed_count=10,
        runtimes=_runtimes({
            "ref": 51302, "0": 31092, "1": 31668, "2": 45805,
            "0+1": 22600, "0+2": 28822, "1+2": 29484, "0+1+2": 22700,
        }),
        summary=(2.27, 2.26, 69.6),
    ),
    "bt": SyntheticBenchmark(
        name="bt",
        description="block tri-diagonal solver: modest bandwidth sensitivity",
        group_bytes=(3_204_000_000, 2_670_000_000, 2_670_000_000, 2_136_000_000),
        sample_counts=(400, 300, 200, 80),
        unattributed_count=20,
        runtimes=_runtimes({
            "ref": 13110, "0": 12728, "1": 12850, "2": 12860, "3": 12980,
            "0+1": 11500, "0+2": 12730, "0+3": 12750, "1+2": 12740,
            "1+3": 12900, "2+3": 12910,
            "0+1+2": 11400, "0+1+3": 11480, "0+2+3": 12600, "1+2+3": 12650,
            "0+1+2+3": 11500,
        }),
        summary=(1.15, 1.14, 55.0),
    ),
    "lu": SyntheticBenchmark(
        name="lu",
        description="lower-upper solver: one quarter-footprint array carries most impact",
        group_bytes=(2_162_500_000, 2_923_700_000, 2_006_800_000, 1_557_000_000),
        sample_counts=(500, 250, 150, 80),
        unattributed_count=20,
        runtimes=_runtimes({
            "ref": 12700, "0": 11140, "1": 11650, "2": 12200, "3": 12450,
            "0+1": 10079, "0+2": 11150, "0+3": 11250, "1+2": 11400,
            "1+3": 11500, "2+3": 12100,
            "0+1+2": 10090, "0+1+3": 10100, "0+2+3": 11100, "1+2+3": 11390,
            "0+1+2+3": 10000,
        }),
        summary=(1.27, 1.27, 58.8),
    ),
    "sp": SyntheticBenchmark(
        name="sp",
        description="scalar penta-diagonal solver",
        group_bytes=(3_916_500_000, 3_782_220_000, 1_812_780_000, 1_678_500_000),
        sample_counts=(420, 330, 150, 60),
        unattributed_count=40,
        runtimes=_runtimes({
            "ref": 30430, "0": 22050, "1": 22540, "2": 27660, "3": 28430,
            "0+1": 17000, "0+2": 20990, "0+3": 21130, "1+2": 21430,
            "1+3": 21580, "2+3": 27000,
            "0+1+2": 17390, "0+1+3": 17490, "0+2+3": 20560, "1+2+3": 20840,
            "0+1+2+3": 17900,
        }),
        summary=(1.79, 1.70, 68.8),
    ),
    "ua": SyntheticBenchmark(
        name="ua",
        description="unstructured adaptive mesh: low arithmetic intensity",
        group_bytes=(2_537_500_000, 2_450_500_000, 1_174_500_000, 1_087_500_000),
        sample_counts=(450, 350, 120, 60),
        unattributed_count=20,
        runtimes=_runtimes({
            "ref": 14900, "0": 11920, "1": 12020, "2": 14060, "3": 14190,
            "0+1": 10070, "0+2": 11460, "0+3": 11550, "1+2": 11640,
            "1+3": 11730, "2+3": 13420,
            "0+1+2": 10068, "0+1+3": 10140, "0+2+3": 11200, "1+2+3": 11290,
            "0+1+2+3": 10000,
        }),
        summary=(1.49, 1.49, 68.8),
    ),
    "is": SyntheticBenchmark(
        name="is",
        description="integer sort with blocking disabled: random access at scale",
        group_bytes=(6_400_000_000, 5_600_000_000, 4_400_000_000, 3_600_000_000),
        sample_counts=(450, 300, 150, 70),
        unattributed_count=30,
        runtimes=_runtimes({
            "ref": 48178, "0": 31080, "1": 32550, "2": 35690, "3": 38540,
            "0+1": 21800, "0+2": 26040, "0+3": 27070, "1+2": 27530,
            "1+3": 28680, "2+3": 31700,
            "0+1+2": 21900, "0+1+3": 22000, "0+2+3": 24700, "1+2+3": 25350,
            "0+1+2+3": 22100,
        }),
        summary=(2.21, 2.18, 60.0),
    ),
    "kwave": SyntheticBenchmark(
        name="kwave",
        description="spectral wave solver: FFT work arrays dominate",
        group_bytes=(3_916_000_000, 3_602_720_000, 1_292_280_000, 979_000_000),
        sample_counts=(500, 300, 120, 50),
        unattributed_count=30,
        runtimes=_runtimes({
            "ref": 13200, "0": 11380, "1": 11790, "2": 12570, "3": 12820,
            "0+1": 10150, "0+2": 11280, "0+3": 11290, "1+2": 11480,
            "1+3": 11580, "2+3": 12340,
            "0+1+2": 10080, "0+1+3": 10090, "0+2+3": 11180, "1+2+3": 11280,
            "0+1+2+3": 10000,
        }),
        summary=(1.32, 1.32, 76.8),
    ),
}


def benchmark(name: str) -> SyntheticBenchmark:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError("unknown synthetic benchmark %r (have: %s)"
                       % (name, ", ".join(sorted(BENCHMARKS))))


def site_frames(bench: SyntheticBenchmark, group: int) -> Tuple[str, str]:
    return ("%s_kernel+0x%x" % (bench.name, 0x1000 + 0x40 * group), "main+0x2c")


def trace_text(bench: SyntheticBenchmark) -> str:
    """Deterministic trace: one long-lived block per group, spread samples."""
    lines = ["# synthetic campaign trace: %s" % bench.name]
    bases = []
    site_ids = []
    for i, size in enumerate(bench.group_bytes):
        frames = site_frames(bench, i)
        sid = site_hash(frames)
        site_ids.append(sid)
        for frame in frames:
            lines.append("K %016x %s" % (sid, frame))
        base = 0x1_0000_0000 * (4 * i + 1)
        bases.append(base)
        lines.append("A %d %016x 0x%x %d" % (1_000 + i, sid, base, size))

    ts = 100_000
    for i, count in enumerate(bench.sample_counts):
        size = bench.group_bytes[i]
        for j in range(count):
            offset = (j * 99_991) % size
            lines.append("S %d 0x%x %d L" % (ts, bases[i] + offset, 80 + (j % 40)))
            ts += 7
    for j in range(bench.unattributed_count):
        lines.append("S %d 0x%x %d L" % (ts, 0x100 + 16 * j, 200))
        ts += 7

    for i in range(len(bench.group_bytes)):
        lines.append("F %d 0x%x" % (50_000_000 + i, bases[i]))
    return "\n".join(lines) + "\n"


def trace_bundle(bench: SyntheticBenchmark) -> TraceBundle:
    return attribute_samples(parse_trace(trace_text(bench)))


def groups_for(bench: SyntheticBenchmark,
               bundle: TraceBundle = None) -> List[AllocationGroup]:
    if bundle is None:
        bundle = trace_bundle(bench)
    return grouping.form_groups(alias_sites(bundle), GroupingConfig())


def space_for(bench: SyntheticBenchmark,
              groups: List[AllocationGroup] = None) -> ConfigurationSpace:
    if groups is None:
        groups = groups_for(bench)
    return enumerate_placements(groups, default_machine().pools)


def measurements_for(bench: SyntheticBenchmark) -> List[MeasurementSet]:
    """Measurement table keyed by placement index (group 0 varies fastest)."""
    out = []
    for subset, seconds in sorted(
            bench.runtimes.items(), key=lambda item: sum(1 << g for g in item[0])):
        index = sum(1 << g for g in subset)
        out.append(MeasurementSet(index, runs=[float(seconds)]))
    return out


def report_for(bench: SyntheticBenchmark, threshold: float = 0.9) -> AnalysisReport:
    """Full pipeline: trace -> groups -> space -> stats -> report."""
    bundle = trace_bundle(bench)
    groups = groups_for(bench, bundle)
    space = space_for(bench, groups)
    stats = compute_speedups(measurements_for(bench), space)
    return build_report(stats, space, threshold)

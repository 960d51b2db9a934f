"""Matplotlib rendering of the detailed view, summary view, and roofline.

Figures are rendered headlessly and written next to the delimited report
output; every plot consumes the same rows the CSV/JSON emitters use, so
the two stay in agreement by construction.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import AnalysisReport
from .perfmodel import MachineModel
from .views import MARKER_COMBINATION, MARKER_EXPECTED, MARKER_SINGLETON, emit_views

_BAR_MEASURED = "#3465a4"
_BAR_EXPECTED = "#f57900"


def render_detailed_view(report: AnalysisReport, path: str, title: str = "") -> str:
    """Grouped bars of measured/expected speedup with fraction markers."""
    detailed, _ = emit_views(report)
    x = np.arange(len(detailed))
    measured = [row.measured_speedup for row in detailed]

    fig, ax = plt.subplots(figsize=(max(6.0, 0.85 * len(detailed)), 4.2))
    ax.bar(x - 0.2, measured, width=0.4, color=_BAR_MEASURED, label="measured speedup")
    expected_x = [i for i, row in enumerate(detailed) if row.expected_speedup is not None]
    expected_y = [detailed[i].expected_speedup for i in expected_x]
    if expected_x:
        ax.bar(np.array(expected_x) + 0.2, expected_y, width=0.4,
               color=_BAR_EXPECTED, label="expected speedup")
    ax.set_xticks(x)
    ax.set_xticklabels([row.label for row in detailed], rotation=45, ha="right")
    ax.set_ylabel("speedup vs all-slow")
    ax.set_xlabel("fast-pool placement")
    ax.grid(True, axis="y", alpha=0.3)

    # separators between cardinality sections (singletons | pairs | ...)
    for i in range(1, len(detailed)):
        if detailed[i].cardinality > detailed[i - 1].cardinality > 0:
            ax.axvline(i - 0.5, color="gray", linestyle=":", linewidth=0.8)

    ax2 = ax.twinx()
    ax2.plot(x, [row.hbm_data_fraction for row in detailed], "o", color="crimson",
             label="data fraction in fast pool")
    ax2.plot(x, [row.hbm_access_fraction for row in detailed], "x", color="navy",
             label="access fraction in fast pool")
    ax2.set_ylim(0.0, 1.05)
    ax2.set_ylabel("fraction")

    lines1, labels1 = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines1 + lines2, labels1 + labels2, loc="upper left", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_summary_view(report: AnalysisReport, path: str, title: str = "") -> str:
    """Speedup vs fast-pool data fraction scatter with threshold lines."""
    _, summary = emit_views(report)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))

    def pick(marker):
        return ([r.hbm_data_fraction for r in summary if r.marker == marker],
                [r.speedup for r in summary if r.marker == marker])

    singles = pick(MARKER_SINGLETON)
    combos = pick(MARKER_COMBINATION)
    expected = pick(MARKER_EXPECTED)
    ax.scatter(*singles, marker="s", color="gold", edgecolor="black", zorder=3,
               label="single group (and reference)")
    ax.scatter(*combos, marker="o", color=_BAR_MEASURED, zorder=3,
               label="group combination")
    ax.scatter(*expected, marker="x", color="gray", zorder=2, label="expected")

    ax.axhline(report.max_speedup, color="red", linestyle="-", linewidth=1.0,
               label="maximum")
    ax.axhline(report.threshold * report.max_speedup, color=_BAR_EXPECTED,
               linestyle="-.", linewidth=1.0,
               label="%d%% of maximum" % round(report.threshold * 100))

    ax.set_xlabel("fraction of data in fast pool")
    ax.set_ylabel("speedup vs all-slow")
    ax.set_xlim(-0.03, 1.03)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, loc="lower right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_roofline(machine: MachineModel, path: str,
                    intensity_range=(2 ** -6, 2 ** 6), points=None) -> str:
    """Per-pool roofline lines on log-log axes, optional workload points.

    points: iterable of (label, intensity, flops_per_second) markers.
    """
    lo, hi = intensity_range
    intensities = np.logspace(np.log2(lo), np.log2(hi), 256, base=2.0)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for pool in machine.pools:
        attainable = np.minimum(machine.peak_compute,
                                intensities * pool.read_bandwidth)
        ax.plot(intensities, attainable, label="%s (%.0f GB/s)" %
                (pool.label, pool.read_bandwidth / 1e9))
    ax.axhline(machine.peak_compute, color="black", linestyle=":", linewidth=0.9,
               label="peak compute")
    if points:
        for label, intensity, flops in points:
            ax.plot([intensity], [flops], "D", markersize=5)
            ax.annotate(label, (intensity, flops), textcoords="offset points",
                        xytext=(4, 4), fontsize=8)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("arithmetic intensity (flops/byte)")
    ax.set_ylabel("attainable flops/s")
    ax.grid(True, which="both", alpha=0.25)
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path

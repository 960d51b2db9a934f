"""Heterogeneous memory pool tuning toolkit.

Pipeline: parse an allocation/access trace, alias and group allocation
sites, enumerate group-to-pool placements, measure every placement with a
simulator or an external command, then report speedup curves and the
cheapest placement reaching a speedup threshold.
"""

__version__ = "0.1.0"

from . import (  # noqa: F401
    analysis,
    configspace,
    grouping,
    harness,
    perfmodel,
    synthdata,
    trace,
    views,
)

"""Site aliasing and allocation-group formation.

Stack-trace instrumentation cannot tell apart allocations made from the
same call site in different loop iterations, so all events sharing a site
are aliased into one logical allocation.  Aliased sites are then filtered
(tiny, cache-resident allocations are noise) and folded into a bounded
number of placement groups: the top-k sites by impact each form their own
group and everything else lands in a single rest group.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .trace import TraceBundle

DEFAULT_SIZE_THRESHOLD = 64 << 20  # L2/L3-scale allocations are ignored
DEFAULT_TOP_K = 7


class GroupingError(ValueError):
    pass


class SiteSummary(NamedTuple):
    site_id: int
    total_bytes: int      # peak concurrent live bytes of the site's events
    sample_share: float   # fraction of all access samples hitting the site


@dataclass(frozen=True)
class ManualRule:
    """Named set of sites that must be placed together (e.g. one vector field)."""

    name: str
    sites: Tuple[int, ...]


@dataclass(frozen=True)
class GroupingConfig:
    size_threshold: int = DEFAULT_SIZE_THRESHOLD
    top_k: int = DEFAULT_TOP_K
    impact_scores: Optional[Dict[int, float]] = None
    manual_rules: Tuple[ManualRule, ...] = ()

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.size_threshold < 0:
            raise ValueError("size_threshold must be non-negative")


@dataclass(frozen=True)
class AllocationGroup:
    """A set of sites treated as one placement unit."""

    group_id: int
    member_sites: Tuple[int, ...]
    total_bytes: int
    sample_share: float
    is_rest_group: bool = False
    name: str = ""

    def label(self) -> str:
        return self.name or ("rest" if self.is_rest_group else str(self.group_id))


def alias_sites(bundle: TraceBundle) -> List[SiteSummary]:
    """Merge events per site: peak concurrent bytes plus sample share."""
    per_site_deltas: Dict[int, List[Tuple[int, int, int]]] = {}
    for ev in bundle.events:
        deltas = per_site_deltas.setdefault(ev.site_id, [])
        deltas.append((ev.timestamp, 1, ev.size))
        if ev.free_timestamp is not None:
            deltas.append((ev.free_timestamp, 0, -ev.size))

    total_samples = len(bundle.samples)
    out = []
    for site_id in sorted(per_site_deltas):
        deltas = sorted(per_site_deltas[site_id], key=lambda d: d[:2])
        peak = live = 0
        for _, _, delta in deltas:
            live += delta
            peak = max(peak, live)
        hits = bundle.sample_hits.get(site_id, 0)
        share = hits / total_samples if total_samples else 0.0
        out.append(SiteSummary(site_id, peak, share))
    return out


def _ranked(summaries: Sequence[SiteSummary], cfg: GroupingConfig) -> List[SiteSummary]:
    def score(s: SiteSummary) -> float:
        if cfg.impact_scores is not None and s.site_id in cfg.impact_scores:
            return cfg.impact_scores[s.site_id]
        return s.sample_share * s.total_bytes

    return sorted(summaries, key=lambda s: (-score(s), s.site_id))


def form_groups(aliased: Sequence[SiteSummary],
                cfg: GroupingConfig = GroupingConfig()) -> List[AllocationGroup]:
    """Partition sites into at most top_k singleton groups plus a rest group.

    Sites below the size threshold and sites ranked past top_k fold into
    the rest group, which is created only when non-empty.
    """
    if not aliased:
        raise GroupingError("no captured allocations")
    significant = [s for s in aliased if s.total_bytes >= cfg.size_threshold]
    rest = [s for s in aliased if s.total_bytes < cfg.size_threshold]
    ranked = _ranked(significant, cfg)
    top, overflow = ranked[: cfg.top_k], ranked[cfg.top_k:]
    rest.extend(overflow)

    groups = [
        AllocationGroup(i, (s.site_id,), s.total_bytes, s.sample_share)
        for i, s in enumerate(top)
    ]
    if rest:
        groups.append(
            AllocationGroup(
                len(groups),
                tuple(sorted(s.site_id for s in rest)),
                sum(s.total_bytes for s in rest),
                sum(s.sample_share for s in rest),
                is_rest_group=True,
            )
        )
    return groups


def apply_manual_rules(aliased: Sequence[SiteSummary],
                       rules: Sequence[ManualRule],
                       cfg: GroupingConfig = GroupingConfig()) -> List[AllocationGroup]:
    """Form one group per rule; remaining sites fall through to form_groups."""
    if not rules:
        return form_groups(aliased, cfg)

    by_site = {s.site_id: s for s in aliased}
    seen: Dict[int, str] = {}
    for rule in rules:
        for site in rule.sites:
            if site not in by_site:
                raise GroupingError("rule %r references unknown site %016x" % (rule.name, site))
            if site in seen:
                raise GroupingError(
                    "overlapping rules: site %016x in %r and %r" % (site, seen[site], rule.name))
            seen[site] = rule.name

    groups = []
    for i, rule in enumerate(rules):
        members = [by_site[s] for s in rule.sites]
        groups.append(
            AllocationGroup(
                i,
                tuple(sorted(rule.sites)),
                sum(m.total_bytes for m in members),
                sum(m.sample_share for m in members),
                name=rule.name,
            )
        )
    remainder = [s for s in aliased if s.site_id not in seen]
    if remainder:
        for g in form_groups(remainder, cfg):
            groups.append(
                AllocationGroup(
                    len(rules) + g.group_id,
                    g.member_sites,
                    g.total_bytes,
                    g.sample_share,
                    g.is_rest_group,
                )
            )
    return groups


def rules_from_json(data: Iterable[dict]) -> List[ManualRule]:
    """Parse the manual-rules file: [{"name": ..., "sites": [hex ids]}]."""
    rules = []
    for entry in data:
        sites = tuple(int(s, 16) for s in entry["sites"])
        rules.append(ManualRule(str(entry["name"]), sites))
    return rules

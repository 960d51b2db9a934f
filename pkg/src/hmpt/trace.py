"""Allocation/access trace data model and line-delimited trace file I/O.

A trace records what an instrumented application run did with its heap:
which call sites allocated how much, when each block was freed, and where
sampled memory accesses landed.  The file format is plain text, one record
per line, `#` starting a comment:

    A <t_ns> <site_hex> <addr_hex> <size_dec>   allocation
    F <t_ns> <addr_hex>                         free (addr must be live)
    S <t_ns> <addr_hex> <lat_ns> <L|S>          access sample (load/store)
    K <site_hex> <frame>                        one call-stack frame of a site

Address ranges are half-open [base, base+size); lifetimes are half-open
[alloc_ts, free_ts).  Allocations that are never freed count as live up to
the largest timestamp in the trace.
"""

import bisect
import heapq
from dataclasses import dataclass, field, replace
from typing import Dict, IO, Iterable, List, Optional, Tuple, Union

LOAD = "load"
STORE = "store"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def site_hash(frames: Iterable[str]) -> int:
    """64-bit FNV-1a hash of a call stack, one frame string at a time.

    The same frame list always produces the same site id, so traces from
    different runs of the same binary can be merged.
    """
    h = _FNV_OFFSET
    for frame in frames:
        for byte in frame.encode("utf-8"):
            h = ((h ^ byte) * _FNV_PRIME) & _U64
        h = ((h ^ 0x0A) * _FNV_PRIME) & _U64  # frame separator
    return h


class TraceError(ValueError):
    """Raised for malformed or inconsistent trace input."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = "%s at line %d" % (message, line)
        super().__init__(message)


@dataclass(frozen=True)
class MemoryPoolDescriptor:
    """One physically distinct memory pool (capacity in bytes, bandwidth in B/s, latency in ns)."""

    pool_id: int
    label: str
    capacity: int
    read_bandwidth: float
    write_bandwidth: float
    load_latency: float

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("pool capacity must be positive")
        if self.read_bandwidth <= 0 or self.write_bandwidth <= 0:
            raise ValueError("pool bandwidth must be positive")
        if self.load_latency <= 0:
            raise ValueError("pool load latency must be positive")


@dataclass(frozen=True)
class AllocationSite:
    """A call-stack location that performs allocations."""

    site_id: int
    frames: Tuple[str, ...] = ()

    @classmethod
    def from_frames(cls, frames: Iterable[str]) -> "AllocationSite":
        frames = tuple(frames)
        return cls(site_hash(frames), frames)


@dataclass(frozen=True)
class AllocationEvent:
    """One allocation: [base, base+size) live over [timestamp, free_timestamp)."""

    timestamp: int
    site_id: int
    base_address: int
    size: int
    free_timestamp: Optional[int] = None

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError("allocation size must be positive")
        if self.free_timestamp is not None and self.free_timestamp < self.timestamp:
            raise ValueError("free before allocation")

    @property
    def end_address(self) -> int:
        return self.base_address + self.size


@dataclass(frozen=True)
class AccessSample:
    """One sampled memory access; observed_latency is 0 when unknown."""

    timestamp: int
    address: int
    kind: str
    observed_latency: int = 0

    def __post_init__(self):
        if self.kind not in (LOAD, STORE):
            raise ValueError("sample kind must be %r or %r" % (LOAD, STORE))


@dataclass
class TraceBundle:
    """Everything parsed from one trace file, plus sample attribution results.

    After attribute_samples() has run, sample_hits maps every allocating
    site to the number of samples landing in its live ranges, and
    sum(sample_hits.values()) + unattributed_samples == len(samples).
    """

    pools: List[MemoryPoolDescriptor] = field(default_factory=list)
    events: List[AllocationEvent] = field(default_factory=list)
    samples: List[AccessSample] = field(default_factory=list)
    sites: Dict[int, AllocationSite] = field(default_factory=dict)
    sample_hits: Dict[int, int] = field(default_factory=dict)
    unattributed_samples: int = 0

    @property
    def attributed(self) -> bool:
        return bool(self.sample_hits) or self.unattributed_samples > 0

    def horizon(self) -> int:
        """Largest timestamp appearing anywhere in the trace."""
        t = 0
        for ev in self.events:
            t = max(t, ev.timestamp)
            if ev.free_timestamp is not None:
                t = max(t, ev.free_timestamp)
        for s in self.samples:
            t = max(t, s.timestamp)
        return t


def _parse_int(text: str, what: str, lineno: int, hex_ok: bool = False) -> int:
    try:
        value = int(text, 16) if hex_ok else int(text, 10)
    except ValueError:
        raise TraceError("bad %s %r" % (what, text), lineno)
    if value < 0:
        raise TraceError("negative %s %r" % (what, text), lineno)
    return value


class _LiveSet:
    """Live address ranges, kept sorted by base for overlap checks."""

    def __init__(self):
        self.bases: List[int] = []
        self.info: Dict[int, Tuple[int, int]] = {}  # base -> (end, event index)

    def add(self, base: int, end: int, index: int, lineno: int):
        # Ranges are pairwise disjoint, so checking both neighbours suffices.
        pos = bisect.bisect_left(self.bases, base)
        if pos < len(self.bases) and self.bases[pos] < end:
            raise TraceError("allocation overlaps live range", lineno)
        if pos > 0 and self.info[self.bases[pos - 1]][0] > base:
            raise TraceError("allocation overlaps live range", lineno)
        self.bases.insert(pos, base)
        self.info[base] = (end, index)

    def remove(self, base: int, lineno: int) -> int:
        if base not in self.info:
            raise TraceError("free of non-live address", lineno)
        _, index = self.info.pop(base)
        self.bases.remove(base)
        return index


def parse_trace(source: Union[str, IO[str], Iterable[str]]) -> TraceBundle:
    """Parse a trace file into a TraceBundle.

    Records are matched in file order: a free applies to the allocation
    currently live at that exact base address.  Sample attribution is not
    performed here; see attribute_samples().
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source

    events: List[AllocationEvent] = []
    samples: List[AccessSample] = []
    sites: Dict[int, AllocationSite] = {}
    frames_acc: Dict[int, List[str]] = {}
    live = _LiveSet()

    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "A":
            if len(parts) != 5:
                raise TraceError("allocation record needs 4 fields", lineno)
            ts = _parse_int(parts[1], "timestamp", lineno)
            site = _parse_int(parts[2], "site hash", lineno, hex_ok=True)
            base = _parse_int(parts[3], "address", lineno, hex_ok=True)
            size = _parse_int(parts[4], "size", lineno)
            if size == 0:
                raise TraceError("zero-size allocation", lineno)
            live.add(base, base + size, len(events), lineno)
            events.append(AllocationEvent(ts, site, base, size))
        elif kind == "F":
            if len(parts) != 3:
                raise TraceError("free record needs 2 fields", lineno)
            ts = _parse_int(parts[1], "timestamp", lineno)
            addr = _parse_int(parts[2], "address", lineno, hex_ok=True)
            index = live.remove(addr, lineno)
            ev = events[index]
            if ts < ev.timestamp:
                raise TraceError("free before allocation", lineno)
            events[index] = replace(ev, free_timestamp=ts)
        elif kind == "S":
            if len(parts) != 5:
                raise TraceError("sample record needs 4 fields", lineno)
            ts = _parse_int(parts[1], "timestamp", lineno)
            addr = _parse_int(parts[2], "address", lineno, hex_ok=True)
            lat = _parse_int(parts[3], "latency", lineno)
            if parts[4] == "L":
                skind = LOAD
            elif parts[4] == "S":
                skind = STORE
            else:
                raise TraceError("sample kind must be L or S", lineno)
            samples.append(AccessSample(ts, addr, skind, lat))
        elif kind == "K":
            if len(parts) < 3:
                raise TraceError("frame record needs 2 fields", lineno)
            site = _parse_int(parts[1], "site hash", lineno, hex_ok=True)
            frame = line.split(None, 2)[2]
            frames_acc.setdefault(site, []).append(frame)
        else:
            raise TraceError("unknown record type %r" % kind, lineno)

    for site, frames in frames_acc.items():
        sites[site] = AllocationSite(site, tuple(frames))
    events.sort(key=lambda e: (e.timestamp, e.base_address))
    samples.sort(key=lambda s: (s.timestamp, s.address, s.observed_latency, s.kind))
    return TraceBundle(events=events, samples=samples, sites=sites)


def serialize_trace(bundle: TraceBundle) -> str:
    """Render a bundle back to trace text in canonical order.

    Frame records come first (sites ascending), then all timed records
    sorted by timestamp with frees before allocations before samples, so
    parse -> serialize is a fixed point on canonical files.  A free that
    coincides with its own allocation's timestamp sorts after it, keeping
    zero-duration allocations parseable.
    """
    out: List[str] = []
    for site_id in sorted(bundle.sites):
        for frame in bundle.sites[site_id].frames:
            out.append("K %016x %s" % (site_id, frame))

    timeline: List[Tuple[int, int, Tuple, str]] = []
    for ev in bundle.events:
        timeline.append(
            (ev.timestamp, 1, (ev.base_address,),
             "A %d %016x 0x%x %d" % (ev.timestamp, ev.site_id, ev.base_address, ev.size)))
        if ev.free_timestamp is not None:
            order = 0 if ev.free_timestamp > ev.timestamp else 2
            timeline.append(
                (ev.free_timestamp, order, (ev.base_address,),
                 "F %d 0x%x" % (ev.free_timestamp, ev.base_address)))
    for s in bundle.samples:
        letter = "L" if s.kind == LOAD else "S"
        timeline.append(
            (s.timestamp, 3, (s.address, s.observed_latency, letter),
             "S %d 0x%x %d %s" % (s.timestamp, s.address, s.observed_latency, letter)))
    timeline.sort(key=lambda item: item[:3])
    out.extend(line for _, _, _, line in timeline)
    return "\n".join(out) + ("\n" if out else "")


def attribute_samples(bundle: TraceBundle) -> TraceBundle:
    """Attribute each access sample to the allocation live at its address.

    Returns a new bundle whose sample_hits counts samples per site;
    samples matching no live range are counted as unattributed.  Total
    sample counts are conserved.
    """
    horizon = bundle.horizon()
    hits: Dict[int, int] = {ev.site_id: 0 for ev in bundle.events}
    unattributed = 0

    events = sorted(bundle.events, key=lambda e: e.timestamp)
    samples = sorted(bundle.samples, key=lambda s: s.timestamp)
    expiry: List[Tuple[int, int]] = []  # (free_ts, base) heap
    bases: List[int] = []
    span: Dict[int, Tuple[int, int]] = {}  # base -> (end, site)

    next_event = 0
    for sample in samples:
        while next_event < len(events) and events[next_event].timestamp <= sample.timestamp:
            ev = events[next_event]
            free_ts = ev.free_timestamp if ev.free_timestamp is not None else horizon + 1
            heapq.heappush(expiry, (free_ts, ev.base_address))
            bisect.insort(bases, ev.base_address)
            span[ev.base_address] = (ev.end_address, ev.site_id)
            next_event += 1
        while expiry and expiry[0][0] <= sample.timestamp:
            _, base = heapq.heappop(expiry)
            bases.remove(base)
            del span[base]
        pos = bisect.bisect_right(bases, sample.address) - 1
        if pos >= 0:
            base = bases[pos]
            end, site = span[base]
            if sample.address < end:
                hits[site] += 1
                continue
        unattributed += 1

    return replace(bundle, sample_hits=hits, unattributed_samples=unattributed)


def footprint(bundle: TraceBundle) -> int:
    """Peak total live bytes over the trace (alloc/free sweep)."""
    deltas: List[Tuple[int, int, int]] = []
    for ev in bundle.events:
        deltas.append((ev.timestamp, 1, ev.size))
        if ev.free_timestamp is not None:
            deltas.append((ev.free_timestamp, 0, -ev.size))
    deltas.sort(key=lambda d: d[:2])  # frees apply before same-instant allocs
    peak = live = 0
    for _, _, delta in deltas:
        live += delta
        if live > peak:
            peak = live
    return peak

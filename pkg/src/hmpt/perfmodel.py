"""Deterministic machine model for placement-dependent kernel runtimes.

The model is intentionally small.  A bandwidth-bound kernel streams bytes
between memory pools: each pool serves its routed read and write bytes
back to back, pools work concurrently, and the busiest pool sets the
kernel time.  Writing into a pool slower than the fastest pool being read
(fast-to-slow traffic) costs a fixed multiplicative penalty, which models
the write-path backpressure seen on real dual-pool machines.  A
latency-bound kernel is a dependent-load chain whose time is simply
accesses times the load latency of the one pool it touches.

Default calibration approximates a two-pool server socket: the slow pool
sustains 200 GB/s on a 1:1 read/write mix and the fast pool 700 GB/s,
with the fast pool carrying ~20% higher load latency.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

from .configspace import Placement
from .trace import MemoryPoolDescriptor

READ = "read"
WRITE = "write"
BANDWIDTH_BOUND = "bandwidth_bound"
LATENCY_BOUND = "latency_bound"

# Slow-pool read/write asymmetry is what lets a mixed-pool stream keep one
# input in slow memory at near fast-pool speed; the harmonic mean of the
# pair still calibrates the 1:1 copy mix to 200 GB/s exactly.
DDR_READ_BW = 225e9
DDR_WRITE_BW = 180e9
DDR_LATENCY_NS = 107.0
DDR_CAPACITY = 256_000_000_000
HBM_BW = 700e9
HBM_LATENCY_NS = 128.4  # 1.2x the slow pool
HBM_CAPACITY = 128_000_000_000
DEFAULT_CROSS_WRITE_PENALTY = 1.0 / 0.65
DEFAULT_CORES = 48
DEFAULT_CLOCK_HZ = 2.1e9
DEFAULT_FLOPS_PER_CYCLE = 32


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class MachineModel:
    pools: Tuple[MemoryPoolDescriptor, ...]
    cores: int = DEFAULT_CORES
    clock_hz: float = DEFAULT_CLOCK_HZ
    flops_per_cycle: int = DEFAULT_FLOPS_PER_CYCLE
    cross_write_penalty: float = DEFAULT_CROSS_WRITE_PENALTY

    def __post_init__(self):
        if self.cross_write_penalty < 1.0:
            raise ValueError("cross_write_penalty must be >= 1")
        ids = [p.pool_id for p in self.pools]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate pool ids")

    def pool(self, pool_id: int) -> MemoryPoolDescriptor:
        for p in self.pools:
            if p.pool_id == pool_id:
                return p
        raise ModelError("unknown pool id %r" % pool_id)

    @property
    def peak_compute(self) -> float:
        return self.cores * self.clock_hz * self.flops_per_cycle


def default_machine() -> MachineModel:
    return MachineModel(
        pools=(
            MemoryPoolDescriptor(0, "DDR", DDR_CAPACITY, DDR_READ_BW, DDR_WRITE_BW,
                                 DDR_LATENCY_NS),
            MemoryPoolDescriptor(1, "HBM", HBM_CAPACITY, HBM_BW, HBM_BW, HBM_LATENCY_NS),
        )
    )


@dataclass(frozen=True)
class StreamSpec:
    """One array's traffic in a kernel; its pool comes from the placement."""

    group_id: int
    direction: str
    bytes: int

    def __post_init__(self):
        if self.direction not in (READ, WRITE):
            raise ValueError("stream direction must be %r or %r" % (READ, WRITE))
        if self.bytes <= 0:
            raise ValueError("stream bytes must be positive")


@dataclass(frozen=True)
class KernelSpec:
    name: str
    mode: str
    streams: Tuple[StreamSpec, ...] = ()
    flops: int = 0
    dependent_accesses: int = 0

    def __post_init__(self):
        if self.mode == BANDWIDTH_BOUND:
            if not self.streams:
                raise ValueError("bandwidth-bound kernel needs at least one stream")
        elif self.mode == LATENCY_BOUND:
            if self.dependent_accesses <= 0:
                raise ValueError("latency-bound kernel needs dependent_accesses > 0")
            if len({s.group_id for s in self.streams}) != 1:
                raise ValueError("latency-bound kernel must reference exactly one group")
        else:
            raise ValueError("unknown kernel mode %r" % self.mode)


@dataclass(frozen=True)
class WorkloadSpec:
    """Ordered kernels with repetition counts; a fixed unit of work."""

    kernels: Tuple[Tuple[KernelSpec, int], ...]

    def __post_init__(self):
        if not self.kernels:
            raise ValueError("workload must contain at least one kernel")
        for _, reps in self.kernels:
            if reps < 1:
                raise ValueError("repetition count must be >= 1")

    def group_ids(self) -> Tuple[int, ...]:
        ids = set()
        for kernel, _ in self.kernels:
            ids.update(s.group_id for s in kernel.streams)
        return tuple(sorted(ids))


PlacementLike = Union[Placement, Dict[int, int]]


def _assignment(placement: PlacementLike) -> Dict[int, int]:
    if isinstance(placement, Placement):
        return placement.as_dict()
    return dict(placement)


def simulate_kernel(kernel: KernelSpec, placement: PlacementLike,
                    machine: MachineModel) -> float:
    """Runtime in seconds of one kernel execution under a placement."""
    assignment = _assignment(placement)

    def pool_for(group_id: int) -> MemoryPoolDescriptor:
        if group_id not in assignment:
            raise ModelError("stream references unplaced group %r" % group_id)
        return machine.pool(assignment[group_id])

    if kernel.mode == LATENCY_BOUND:
        pool = pool_for(kernel.streams[0].group_id)
        return kernel.dependent_accesses * pool.load_latency / 1e9

    read_time: Dict[int, float] = {}
    write_time: Dict[int, float] = {}
    read_bw: Dict[int, float] = {}
    for stream in kernel.streams:
        pool = pool_for(stream.group_id)
        if stream.direction == READ:
            read_time[pool.pool_id] = read_time.get(pool.pool_id, 0.0) \
                + stream.bytes / pool.read_bandwidth
            read_bw[pool.pool_id] = pool.read_bandwidth
        else:
            write_time[pool.pool_id] = write_time.get(pool.pool_id, 0.0) \
                + stream.bytes / pool.write_bandwidth

    # Fast-to-slow cross traffic: a write lands in a pool slower than some
    # *other* pool it is being fed from.  Same-pool traffic is never penalized.
    penalized = False
    for stream in kernel.streams:
        if stream.direction != WRITE:
            continue
        pool = pool_for(stream.group_id)
        cross = max((bw for pid, bw in read_bw.items() if pid != pool.pool_id),
                    default=0.0)
        if pool.write_bandwidth < cross:
            penalized = True

    time = 0.0
    for pool_id in set(read_time) | set(write_time):
        time = max(time, read_time.get(pool_id, 0.0) + write_time.get(pool_id, 0.0))
    if penalized:
        time *= machine.cross_write_penalty
    compute = kernel.flops / machine.peak_compute if kernel.flops else 0.0
    return max(time, compute)


def simulate_workload(workload: WorkloadSpec, placement: PlacementLike,
                      machine: MachineModel) -> float:
    """Sum of repetitions x kernel time over the workload."""
    return sum(
        reps * simulate_kernel(kernel, placement, machine)
        for kernel, reps in workload.kernels
    )


class StreamRow(NamedTuple):
    subtest: str
    placement: Tuple[str, ...]  # per-array pool labels, output array last
    bandwidth: float


def stream_table(machine: MachineModel,
                 array_bytes: int = 16_000_000_000) -> List[StreamRow]:
    """Copy/Add stream bandwidths for every per-array pool placement."""
    rows = []
    pools = machine.pools

    def run(name: str, reads: int, pool_choice: Tuple[MemoryPoolDescriptor, ...]) -> StreamRow:
        streams = []
        for i, pool in enumerate(pool_choice):
            direction = READ if i < reads else WRITE
            streams.append(StreamSpec(i, direction, array_bytes))
        kernel = KernelSpec(name, BANDWIDTH_BOUND, tuple(streams))
        assignment = {i: pool.pool_id for i, pool in enumerate(pool_choice)}
        seconds = simulate_kernel(kernel, assignment, machine)
        moved = array_bytes * len(pool_choice)
        return StreamRow(name, tuple(p.label for p in pool_choice), moved / seconds)

    for a in pools:
        for b in pools:
            rows.append(run("copy", 1, (a, b)))
    for a in pools:
        for b in pools:
            for c in pools:
                rows.append(run("add", 2, (a, b, c)))
    return rows


def stream_bandwidth(rows: Sequence[StreamRow], subtest: str,
                     placement: Tuple[str, ...]) -> float:
    for row in rows:
        if row.subtest == subtest and row.placement == placement:
            return row.bandwidth
    raise ModelError("no stream row %s %r" % (subtest, placement))


def roofline_bound(machine: MachineModel, intensity: float,
                   pool_id: Optional[int] = None) -> float:
    """Attainable flops/s at the given arithmetic intensity (flops/byte)."""
    if intensity < 0:
        raise ModelError("arithmetic intensity must be non-negative")
    if pool_id is None:
        bandwidth = max(p.read_bandwidth for p in machine.pools)
    else:
        bandwidth = machine.pool(pool_id).read_bandwidth
    return min(machine.peak_compute, intensity * bandwidth)


def pool_to_json(p: MemoryPoolDescriptor) -> dict:
    entry = {
        "id": p.pool_id,
        "label": p.label,
        "capacity_bytes": p.capacity,
        "latency_ns": p.load_latency,
    }
    if p.read_bandwidth == p.write_bandwidth:
        entry["bw_bytes_per_s"] = p.read_bandwidth
    else:
        entry["read_bw_bytes_per_s"] = p.read_bandwidth
        entry["write_bw_bytes_per_s"] = p.write_bandwidth
    return entry


def pool_from_json(entry: dict) -> MemoryPoolDescriptor:
    bw = entry.get("bw_bytes_per_s")
    read_bw = entry.get("read_bw_bytes_per_s", bw)
    write_bw = entry.get("write_bw_bytes_per_s", bw)
    if read_bw is None or write_bw is None:
        raise ModelError("pool %r needs a bandwidth" % entry.get("id"))
    return MemoryPoolDescriptor(
        int(entry["id"]), str(entry["label"]), int(entry["capacity_bytes"]),
        float(read_bw), float(write_bw), float(entry["latency_ns"]))


def machine_to_json(machine: MachineModel) -> dict:
    return {
        "pools": [pool_to_json(p) for p in machine.pools],
        "cores": machine.cores,
        "clock_hz": machine.clock_hz,
        "flops_per_cycle": machine.flops_per_cycle,
        "cross_write_penalty": machine.cross_write_penalty,
    }


def machine_from_json(data: dict) -> MachineModel:
    return MachineModel(
        pools=tuple(pool_from_json(entry) for entry in data["pools"]),
        cores=int(data.get("cores", DEFAULT_CORES)),
        clock_hz=float(data.get("clock_hz", DEFAULT_CLOCK_HZ)),
        flops_per_cycle=int(data.get("flops_per_cycle", DEFAULT_FLOPS_PER_CYCLE)),
        cross_write_penalty=float(data.get("cross_write_penalty",
                                           DEFAULT_CROSS_WRITE_PENALTY)),
    )


def load_machine(path: str) -> MachineModel:
    with open(path) as fp:
        return machine_from_json(json.load(fp))


def workload_from_json(data: Sequence[dict]) -> WorkloadSpec:
    """Workload file: list of kernels with streams, reps, and mode."""
    kernels = []
    for entry in data:
        streams = tuple(
            StreamSpec(int(s["group"]), str(s["dir"]), int(s["bytes"]))
            for s in entry.get("streams", ())
        )
        kernel = KernelSpec(
            name=str(entry.get("name", "kernel")),
            mode=str(entry["mode"]),
            streams=streams,
            flops=int(entry.get("flops", 0)),
            dependent_accesses=int(entry.get("dependent_accesses", 0)),
        )
        kernels.append((kernel, int(entry.get("reps", 1))))
    return WorkloadSpec(tuple(kernels))


def workload_to_json(workload: WorkloadSpec) -> List[dict]:
    out = []
    for kernel, reps in workload.kernels:
        out.append({
            "name": kernel.name,
            "mode": kernel.mode,
            "flops": kernel.flops,
            "dependent_accesses": kernel.dependent_accesses,
            "reps": reps,
            "streams": [
                {"group": s.group_id, "dir": s.direction, "bytes": s.bytes}
                for s in kernel.streams
            ],
        })
    return out


def load_workload(path: str) -> WorkloadSpec:
    with open(path) as fp:
        return workload_from_json(json.load(fp))

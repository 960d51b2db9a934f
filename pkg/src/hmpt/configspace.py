"""Enumeration and validation of group-to-pool placement configurations.

With k groups and m pools there are m^k total assignments.  Enumeration is
eager and exhaustive (the measurement methodology wants every point), with
a hard size guard; heuristic search is deliberately out of scope.
Placement index 0 always assigns every group to pool 0, which by
convention is the slow/reference pool.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Tuple, Union

from .grouping import AllocationGroup
from .trace import MemoryPoolDescriptor

MAX_SPACE_BITS = 24


class ConfigSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class Placement:
    """Total assignment of groups to pools, with per-pool byte totals."""

    assignment: Tuple[Tuple[int, int], ...]  # (group_id, pool_id), group-sorted
    bytes_per_pool: Tuple[Tuple[int, int], ...]  # (pool_id, bytes), pool-sorted

    def pool_of(self, group_id: int) -> int:
        for g, p in self.assignment:
            if g == group_id:
                return p
        raise KeyError(group_id)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.assignment)

    def bytes_in(self, pool_id: int) -> int:
        for p, b in self.bytes_per_pool:
            if p == pool_id:
                return b
        raise ConfigSpaceError("unknown pool id %r" % pool_id)

    def total_bytes(self) -> int:
        return sum(b for _, b in self.bytes_per_pool)

    def groups_in(self, pool_id: int) -> Tuple[int, ...]:
        return tuple(sorted(g for g, p in self.assignment if p == pool_id))


class CapacityViolation(NamedTuple):
    pool_id: int
    label: str
    assigned_bytes: int
    capacity: int


@dataclass
class ConfigurationSpace:
    groups: List[AllocationGroup]
    pools: List[MemoryPoolDescriptor]
    placements: List[Placement]

    def __len__(self) -> int:
        return len(self.placements)

    @property
    def total_bytes(self) -> int:
        return sum(g.total_bytes for g in self.groups)

    def index_of_all_in(self, pool_id: int) -> int:
        target = tuple((g.group_id, pool_id) for g in sorted(self.groups, key=lambda g: g.group_id))
        for i, placement in enumerate(self.placements):
            if placement.assignment == target:
                return i
        raise ConfigSpaceError("no placement assigns every group to pool %r" % pool_id)


def enumerate_placements(groups: Sequence[AllocationGroup],
                         pools: Sequence[MemoryPoolDescriptor]) -> ConfigurationSpace:
    """All m^k assignments; group 0 varies fastest, pools in given order."""
    if not groups or not pools:
        raise ConfigSpaceError("need at least one group and one pool")
    k, m = len(groups), len(pools)
    if k * math.log2(m) > MAX_SPACE_BITS:
        raise ConfigSpaceError(
            "configuration space too large: %d groups over %d pools" % (k, m))

    ordered = sorted(groups, key=lambda g: g.group_id)
    pool_ids = [p.pool_id for p in pools]
    placements = []
    for index in range(m ** k):
        rem = index
        assignment = []
        per_pool = {pid: 0 for pid in pool_ids}
        for g in ordered:
            pid = pool_ids[rem % m]
            rem //= m
            assignment.append((g.group_id, pid))
            per_pool[pid] += g.total_bytes
        placements.append(
            Placement(tuple(assignment), tuple(sorted(per_pool.items()))))
    return ConfigurationSpace(list(ordered), list(pools), placements)


def data_fraction(placement: Placement, pool_id: int) -> float:
    """Fraction of all grouped bytes this placement assigns to pool_id."""
    total = placement.total_bytes()
    if total == 0:
        return 0.0
    return placement.bytes_in(pool_id) / total


def data_percent(placement: Placement, pool_id: int) -> float:
    # Integer numerator first: avoids the double rounding of fraction*100.
    total = placement.total_bytes()
    if total == 0:
        return 0.0
    return (100 * placement.bytes_in(pool_id)) / total


def validate_capacity(placement: Placement,
                      machine_or_pools: Union[Sequence[MemoryPoolDescriptor], object],
                      ) -> List[CapacityViolation]:
    """Pools whose assigned bytes exceed capacity; empty list means ok."""
    pools = getattr(machine_or_pools, "pools", machine_or_pools)
    violations = []
    for pool in pools:
        try:
            assigned = placement.bytes_in(pool.pool_id)
        except ConfigSpaceError:
            continue
        if assigned > pool.capacity:
            violations.append(
                CapacityViolation(pool.pool_id, pool.label, assigned, pool.capacity))
    return violations


def placement_label(placement: Placement, fast_pool_id: int) -> str:
    """'ref' for the all-slow placement, else '+'-joined fast group ids."""
    fast = placement.groups_in(fast_pool_id)
    return "+".join(str(g) for g in fast) if fast else "ref"

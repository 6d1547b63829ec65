"""Domain model: stream applications, clusters, and executor placements.

An application is a DAG of components. ``source`` components emit tuples at a
configured rate; ``processing-unit`` components consume them. Each component
runs as ``executor_count`` parallel threads (executors), and a schedule is the
assignment of every executor to one machine of the cluster, written as an
N x M binary matrix with exactly one 1 per row.

Executors are numbered globally: components in declaration order, threads of
a component in index order. All durations are seconds, rates are tuples per
second.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionMismatchError, TopologyError

GROUPINGS = ("shuffle", "fields", "all", "global")
COMPONENT_KINDS = ("source", "processing-unit")


@dataclass(frozen=True)
class Component:
    """One node of the application graph."""

    id: str
    kind: str
    executor_count: int
    service_time_mean: float = 0.0  # seconds of work per tuple per executor

    def __post_init__(self):
        if self.kind not in COMPONENT_KINDS:
            raise TopologyError("dangling-edge", f"component {self.id!r} has unknown kind {self.kind!r}")
        if self.executor_count < 1:
            raise TopologyError("zero-executors", f"component {self.id!r} declares {self.executor_count} executors")
        if not np.isfinite(self.service_time_mean) or self.service_time_mean < 0:
            raise TopologyError("zero-executors", f"component {self.id!r} has invalid service time")


@dataclass(frozen=True)
class Edge:
    """A directed stream between two components."""

    source: str
    target: str
    grouping: str = "shuffle"

    def __post_init__(self):
        if self.grouping not in GROUPINGS:
            raise TopologyError("dangling-edge", f"edge {self.source!r}->{self.target!r} has unknown grouping {self.grouping!r}")


@dataclass(frozen=True)
class TopologySpec:
    """An application graph plus the current source emission rates.

    ``source_rates`` maps each source component id to its emission rate.
    """

    components: tuple[Component, ...]
    edges: tuple[Edge, ...]
    source_rates: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "source_rates", dict(self.source_rates))

    @cached_property
    def component_index(self) -> dict[str, int]:
        return {c.id: i for i, c in enumerate(self.components)}

    @cached_property
    def total_executors(self) -> int:
        return sum(c.executor_count for c in self.components)

    @cached_property
    def executor_offsets(self) -> tuple[int, ...]:
        """Global id of the first executor of each component."""
        offsets, n = [], 0
        for c in self.components:
            offsets.append(n)
            n += c.executor_count
        return tuple(offsets)

    @cached_property
    def thread_component(self) -> np.ndarray:
        """Component index of every global executor id."""
        out = np.empty(self.total_executors, dtype=np.int64)
        for i, c in enumerate(self.components):
            off = self.executor_offsets[i]
            out[off:off + c.executor_count] = i
        return out

    @cached_property
    def source_components(self) -> tuple[Component, ...]:
        return tuple(c for c in self.components if c.kind == "source")

    def component(self, component_id: str) -> Component:
        return self.components[self.component_index[component_id]]

    def executor_range(self, component_id: str) -> range:
        i = self.component_index[component_id]
        off = self.executor_offsets[i]
        return range(off, off + self.components[i].executor_count)

    def workload_vector(self) -> np.ndarray:
        """Source rates as a vector, sources in declaration order."""
        return np.array([float(self.source_rates.get(c.id, 0.0)) for c in self.source_components])


@dataclass(frozen=True)
class ClusterSpec:
    """The machines available to the scheduler.

    ``intra_machine_delay`` applies between distinct worker processes that
    share a machine. Because every application keeps a single process per
    machine, hops between colocated executors cost zero; the field is kept
    for multi-process deployments and validated against the inter-machine
    delay.
    """

    machine_count: int
    slots_per_machine: int = 10
    intra_machine_delay: float = 0.0
    inter_machine_delay: float = 0.0
    machine_capacity: float = 1.0

    def __post_init__(self):
        if self.machine_count < 1:
            raise ValueError(f"machine_count must be >= 1, got {self.machine_count}")
        if self.slots_per_machine < 1:
            raise ValueError(f"slots_per_machine must be >= 1, got {self.slots_per_machine}")
        if not 0.0 <= self.intra_machine_delay <= self.inter_machine_delay:
            raise ValueError("need 0 <= intra_machine_delay <= inter_machine_delay, got "
                             f"{self.intra_machine_delay} and {self.inter_machine_delay}")
        if self.machine_capacity <= 0:
            raise ValueError(f"machine_capacity must be > 0, got {self.machine_capacity}")


class ScheduleMatrix:
    """An N x M one-hot assignment of executors to machines.

    Immutable. Row i carries a single 1 in the column of the machine that
    hosts executor i.
    """

    __slots__ = ("_matrix", "_assignment")

    def __init__(self, matrix):
        arr = np.asarray(matrix)
        if arr.ndim != 2:
            raise DimensionMismatchError(f"schedule matrix must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise DimensionMismatchError("schedule matrix must be non-empty")
        vals = np.unique(arr)
        if not np.all(np.isin(vals, (0, 1))):
            raise DimensionMismatchError("schedule matrix entries must be 0 or 1")
        sums = arr.sum(axis=1)
        if not np.all(sums == 1):
            bad = int(np.argmax(sums != 1))
            raise DimensionMismatchError(f"schedule row {bad} sums to {int(sums[bad])}, expected exactly 1")
        mat = arr.astype(np.int8)
        mat.setflags(write=False)
        self._matrix = mat
        asg = np.argmax(mat, axis=1).astype(np.int64)
        asg.setflags(write=False)
        self._assignment = asg

    @classmethod
    def from_assignment(cls, machines, machine_count: int) -> "ScheduleMatrix":
        machines = np.asarray(machines, dtype=np.int64)
        if machines.ndim != 1:
            raise DimensionMismatchError("assignment must be a 1-D vector of machine ids")
        if machines.size and (machines.min() < 0 or machines.max() >= machine_count):
            raise DimensionMismatchError(f"machine ids must lie in [0, {machine_count}), got {machines}")
        mat = np.zeros((machines.size, machine_count), dtype=np.int8)
        mat[np.arange(machines.size), machines] = 1
        return cls(mat)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def assignment(self) -> np.ndarray:
        """Machine id per executor (argmax of each row)."""
        return self._assignment

    @property
    def n_threads(self) -> int:
        return self._matrix.shape[0]

    @property
    def n_machines(self) -> int:
        return self._matrix.shape[1]

    def replace_row(self, thread: int, machine: int) -> "ScheduleMatrix":
        """A new schedule with executor ``thread`` moved to ``machine``."""
        asg = self._assignment.copy()
        asg[thread] = machine
        return ScheduleMatrix.from_assignment(asg, self.n_machines)

    def __eq__(self, other):
        if not isinstance(other, ScheduleMatrix):
            return NotImplemented
        return self._matrix.shape == other._matrix.shape and np.array_equal(self._matrix, other._matrix)

    def __hash__(self):
        return hash((self._matrix.shape, self._matrix.tobytes()))

    def __repr__(self):
        return f"ScheduleMatrix(assignment={self._assignment.tolist()}, machines={self.n_machines})"


@dataclass(frozen=True)
class SystemState:
    """What the learning agents observe: the live placement and the workload."""

    schedule: ScheduleMatrix
    workload: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.workload, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatchError("workload must be a 1-D rate vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("workload rates must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "workload", w)


def validate_topology(spec: TopologySpec) -> None:
    """Check the structural invariants of an application graph.

    Raises TopologyError tagged cycle-detected, dangling-edge,
    zero-executors, duplicate-component, source-has-inbound or unreachable.
    """
    seen = set()
    for c in spec.components:
        if c.id in seen:
            raise TopologyError("duplicate-component", f"component id {c.id!r} declared twice")
        seen.add(c.id)
        # Component already rejects executor_count < 1 at construction; keep
        # the check here so validate stays authoritative on its own.
        if c.executor_count < 1:
            raise TopologyError("zero-executors", f"component {c.id!r} declares {c.executor_count} executors")

    index = spec.component_index
    for e in spec.edges:
        if e.source not in index:
            raise TopologyError("dangling-edge", f"edge references unknown component {e.source!r}")
        if e.target not in index:
            raise TopologyError("dangling-edge", f"edge references unknown component {e.target!r}")

    incoming = {c.id: 0 for c in spec.components}
    adjacency = {c.id: [] for c in spec.components}
    for e in spec.edges:
        incoming[e.target] += 1
        adjacency[e.source].append(e.target)

    for c in spec.components:
        if c.kind == "source" and incoming[c.id] > 0:
            raise TopologyError("source-has-inbound", f"source {c.id!r} has an incoming edge")

    for rate_id in spec.source_rates:
        if rate_id not in index:
            raise TopologyError("dangling-edge", f"source_rates names unknown component {rate_id!r}")
        if spec.components[index[rate_id]].kind != "source":
            raise TopologyError("dangling-edge", f"source_rates entry {rate_id!r} is not a source")

    # Kahn's algorithm: leftover nodes witness a cycle.
    pending = dict(incoming)
    queue = [c.id for c in spec.components if pending[c.id] == 0]
    visited = 0
    while queue:
        node = queue.pop()
        visited += 1
        for nxt in adjacency[node]:
            pending[nxt] -= 1
            if pending[nxt] == 0:
                queue.append(nxt)
    if visited != len(spec.components):
        stuck = sorted(cid for cid, deg in pending.items() if deg > 0)
        raise TopologyError("cycle-detected", f"cycle through components {stuck}")

    reachable = set(c.id for c in spec.source_components)
    stack = list(reachable)
    while stack:
        node = stack.pop()
        for nxt in adjacency[node]:
            if nxt not in reachable:
                reachable.add(nxt)
                stack.append(nxt)
    for c in spec.components:
        if c.kind != "source" and c.id not in reachable:
            raise TopologyError("unreachable", f"component {c.id!r} is not reachable from any source")


def round_robin_schedule(spec: TopologySpec, cluster: ClusterSpec) -> ScheduleMatrix:
    """Cyclic default placement: executor i goes to machine i mod M."""
    n = spec.total_executors
    machines = np.arange(n, dtype=np.int64) % cluster.machine_count
    return ScheduleMatrix.from_assignment(machines, cluster.machine_count)


def schedule_diff(old: ScheduleMatrix, new: ScheduleMatrix) -> set[int]:
    """Ids of the executors whose machine changed between two schedules.

    The physical deployment only restarts these threads; everything else
    keeps running.
    """
    if old.matrix.shape != new.matrix.shape:
        raise DimensionMismatchError(f"schedule shapes differ: {old.matrix.shape} vs {new.matrix.shape}")
    moved = np.nonzero(old.assignment != new.assignment)[0]
    return set(int(i) for i in moved)


def with_source_rates(spec: TopologySpec, rates: dict[str, float]) -> TopologySpec:
    """A copy of ``spec`` with the workload replaced."""
    for rate_id in rates:
        if rate_id not in spec.component_index or spec.component(rate_id).kind != "source":
            raise TopologyError("dangling-edge", f"rate entry {rate_id!r} is not a source component")
    return dataclasses.replace(spec, source_rates=dict(rates))


def scale_source_rates(spec: TopologySpec, factor: float) -> TopologySpec:
    """A copy of ``spec`` with every source rate multiplied by ``factor``."""
    if factor < 0 or not np.isfinite(factor):
        raise ValueError(f"rate factor must be finite and non-negative, got {factor}")
    return with_source_rates(spec, {k: v * factor for k, v in spec.source_rates.items()})

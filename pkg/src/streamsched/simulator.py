"""Discrete-event simulator for a stream-processing cluster.

The simulator plays the role of the physical cluster: given an application,
a cluster description, and a schedule, it reports the average end-to-end
tuple processing time a monitoring daemon would observe.

Model
-----
* Source components emit tuples at their configured rates. Emissions are
  periodic when ``service_time_distribution`` is ``deterministic`` and a
  Poisson process when it is ``exponential``; the same switch selects fixed
  versus exponentially distributed service times.
* Each emitted tuple starts at one executor of its source (executors take
  turns) and flows along every outgoing edge of each component it visits.
  Grouping policies pick the downstream executor: ``shuffle`` draws
  uniformly, ``fields`` hashes a per-tuple key modulo the executor count,
  ``all`` replicates to every executor, ``global`` always picks executor 0.
* Every executor owns a FIFO queue. A machine divides its capacity evenly
  among its currently busy executors (processor sharing), so colocating hot
  executors slows them down.
* A hop between executors in the same worker process costs nothing. The
  runtime keeps one process per application per machine, so only crossing
  machines costs ``inter_machine_delay``.
* A tuple finishes when all of its downstream copies have been fully
  processed (the ack semantics of reliable stream processors); its
  processing time runs from source emission to that final completion.

Runs are deterministic: identical inputs and seed give bit-identical
results. A run aborts with UnstableSystemError when any executor queue
exceeds ``queue_cap`` pending tuples.
"""

from __future__ import annotations

import dataclasses
import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, UnstableSystemError
from .topology import ClusterSpec, ScheduleMatrix, TopologySpec, validate_topology

DEFAULT_QUEUE_CAP = 100_000

_EMIT = 0      # a source component releases the next tuple
_ARRIVE = 1    # a tuple copy reaches an executor's queue
_DONE = 2      # a machine's earliest in-service copy completes

_SERVICE_DISTRIBUTIONS = ("deterministic", "exponential")


@dataclass(frozen=True)
class SimConfig:
    """Measurement protocol for one simulated deployment.

    After ``warmup_duration`` of untimed operation the run is observed for
    ``measure_duration`` seconds split into ``measurement_samples`` equal
    windows; each window yields one sample average and the reported time is
    the mean of the sample averages. ``sample_interval`` is the window
    length used by :func:`measure_after_stabilization`.
    """

    seed: int = 0
    warmup_duration: float = 10.0
    measure_duration: float = 50.0
    measurement_samples: int = 5
    sample_interval: float = 10.0
    service_time_distribution: str = "exponential"

    def __post_init__(self):
        if self.warmup_duration < 0:
            raise ValueError(f"warmup_duration must be >= 0, got {self.warmup_duration}")
        if self.measure_duration <= 0:
            raise ValueError(f"measure_duration must be > 0, got {self.measure_duration}")
        if self.measurement_samples < 1:
            raise ValueError(f"measurement_samples must be >= 1, got {self.measurement_samples}")
        if self.sample_interval <= 0:
            raise ValueError(f"sample_interval must be > 0, got {self.sample_interval}")
        if self.service_time_distribution not in _SERVICE_DISTRIBUTIONS:
            raise ValueError(f"service_time_distribution must be one of {_SERVICE_DISTRIBUTIONS}, "
                             f"got {self.service_time_distribution!r}")


@dataclass(frozen=True)
class SimResult:
    """Outcome of one simulated measurement."""

    avg_tuple_processing_time: float        # seconds; mean of the sample averages
    per_sample_averages: tuple[float, ...]  # one entry per non-empty window
    tuples_completed: int                   # completions inside the measurement span
    per_machine_utilization: tuple[float, ...]  # busy fraction per machine, in [0, 1]

    def to_dict(self) -> dict:
        return {
            "avg_tuple_processing_time": self.avg_tuple_processing_time,
            "per_sample_averages": list(self.per_sample_averages),
            "tuples_completed": self.tuples_completed,
            "per_machine_utilization": list(self.per_machine_utilization),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimResult":
        return cls(
            avg_tuple_processing_time=float(data["avg_tuple_processing_time"]),
            per_sample_averages=tuple(float(x) for x in data["per_sample_averages"]),
            tuples_completed=int(data["tuples_completed"]),
            per_machine_utilization=tuple(float(x) for x in data["per_machine_utilization"]),
        )


class _Engine:
    """One simulation run. Plain lists indexed by executor/machine id keep
    the hot loop cheap; completion events carry a per-machine version stamp
    so stale ones are skipped after the busy set changes."""

    _REMAINING_EPS = 1e-12

    def __init__(self, spec: TopologySpec, cluster: ClusterSpec, schedule: ScheduleMatrix,
                 config: SimConfig, queue_cap: int):
        validate_topology(spec)
        n = spec.total_executors
        if schedule.n_threads != n or schedule.n_machines != cluster.machine_count:
            raise DimensionMismatchError(
                f"schedule is {schedule.n_threads}x{schedule.n_machines}, "
                f"topology/cluster need {n}x{cluster.machine_count}")

        self.spec = spec
        self.cluster = cluster
        self.config = config
        self.queue_cap = queue_cap
        self.rng = np.random.default_rng(config.seed)
        self.deterministic = config.service_time_distribution == "deterministic"

        self.exec_machine = schedule.assignment.tolist()
        self.exec_comp = spec.thread_component.tolist()
        self.exec_queue = [deque() for _ in range(n)]
        self.exec_remaining = [0.0] * n
        self.exec_current = [None] * n  # root id of the copy in service

        m = cluster.machine_count
        self.machine_busy = [set() for _ in range(m)]
        self.machine_last = [0.0] * m
        self.machine_version = [0] * m
        self.machine_busy_time = [0.0] * m
        self.capacity = cluster.machine_capacity
        self.inter_delay = cluster.inter_machine_delay

        # Per component: service mean, executor ids, outgoing (grouping, target ids).
        self.comp_service = [c.service_time_mean for c in spec.components]
        self.comp_execs = [list(spec.executor_range(c.id)) for c in spec.components]
        self.comp_out = [[] for _ in spec.components]
        for e in spec.edges:
            src = spec.component_index[e.source]
            dst = spec.component_index[e.target]
            self.comp_out[src].append((e.grouping, self.comp_execs[dst]))
        self.needs_keys = any(e.grouping == "fields" for e in spec.edges)

        self.roots: dict[int, list] = {}  # root id -> [emit_time, outstanding, key]
        self.next_root = 0
        self.emit_cursor = {}  # source comp index -> round-robin executor cursor

        self.completion_emit: list[float] = []
        self.completion_done: list[float] = []

        self.mw_start = config.warmup_duration
        self.mw_end = config.warmup_duration + config.measure_duration
        self.horizon = self.mw_end

        self.heap: list = []
        self.seq = 0

        for ci, comp in enumerate(spec.components):
            if comp.kind != "source":
                continue
            rate = float(spec.source_rates.get(comp.id, 0.0))
            if rate <= 0.0:
                continue
            self.emit_cursor[ci] = 0
            self._push(self._interarrival(rate), _EMIT, ci, rate)

    # -- event plumbing ----------------------------------------------------

    def _push(self, time, kind, a, b):
        self.seq += 1
        heapq.heappush(self.heap, (time, self.seq, kind, a, b))

    def _interarrival(self, rate):
        if self.deterministic:
            return 1.0 / rate
        return self.rng.exponential(1.0 / rate)

    def _service_time(self, comp_idx):
        mean = self.comp_service[comp_idx]
        if self.deterministic or mean == 0.0:
            return mean
        return self.rng.exponential(mean)

    # -- machine bookkeeping -----------------------------------------------

    def _advance(self, machine, now):
        last = self.machine_last[machine]
        if now > last:
            busy = self.machine_busy[machine]
            if busy:
                share = self.capacity / len(busy)
                work = (now - last) * share
                rem = self.exec_remaining
                for e in busy:
                    rem[e] -= work
                lo = last if last > self.mw_start else self.mw_start
                hi = now if now < self.mw_end else self.mw_end
                if hi > lo:
                    self.machine_busy_time[machine] += hi - lo
            self.machine_last[machine] = now

    def _reschedule(self, machine, now):
        self.machine_version[machine] += 1
        busy = self.machine_busy[machine]
        if not busy:
            return
        share = self.capacity / len(busy)
        rem = self.exec_remaining
        least = min(rem[e] for e in busy)
        if least < 0.0:
            least = 0.0
        self._push(now + least / share, _DONE, machine, self.machine_version[machine])

    # -- tuple flow ----------------------------------------------------------

    def _start_service(self, executor, root_id, now):
        machine = self.exec_machine[executor]
        self._advance(machine, now)
        self.exec_current[executor] = root_id
        self.exec_remaining[executor] = self._service_time(self.exec_comp[executor])
        self.machine_busy[machine].add(executor)
        self._reschedule(machine, now)

    def _route_downstream(self, comp_idx, root_id, from_machine, now):
        """Forward a finished copy along every outgoing edge; returns the
        number of child copies created."""
        spawned = 0
        root = self.roots[root_id]
        for grouping, targets in self.comp_out[comp_idx]:
            if grouping == "shuffle":
                chosen = (targets[self.rng.integers(len(targets))],)
            elif grouping == "fields":
                chosen = (targets[root[2] % len(targets)],)
            elif grouping == "global":
                chosen = (targets[0],)
            else:  # "all": replicate to every executor
                chosen = targets
            for t in chosen:
                delay = 0.0 if self.exec_machine[t] == from_machine else self.inter_delay
                self._push(now + delay, _ARRIVE, t, root_id)
                spawned += 1
        return spawned

    def _complete_copy(self, executor, now):
        machine = self.exec_machine[executor]
        root_id = self.exec_current[executor]
        comp_idx = self.exec_comp[executor]
        spawned = self._route_downstream(comp_idx, root_id, machine, now)
        root = self.roots[root_id]
        root[1] += spawned - 1
        if root[1] == 0:
            self.completion_emit.append(root[0])
            self.completion_done.append(now)
            del self.roots[root_id]
        queue = self.exec_queue[executor]
        if queue:
            next_root = queue.popleft()
            self.exec_current[executor] = next_root
            self.exec_remaining[executor] = self._service_time(comp_idx)
        else:
            self.exec_current[executor] = None
            self.machine_busy[machine].discard(executor)

    # -- event handlers ------------------------------------------------------

    def _on_emit(self, comp_idx, rate, now):
        execs = self.comp_execs[comp_idx]
        cursor = self.emit_cursor[comp_idx]
        self.emit_cursor[comp_idx] = (cursor + 1) % len(execs)
        key = int(self.rng.integers(1 << 62)) if self.needs_keys else 0
        root_id = self.next_root
        self.next_root += 1
        self.roots[root_id] = [now, 1, key]
        self._push(now, _ARRIVE, execs[cursor], root_id)
        self._push(now + self._interarrival(rate), _EMIT, comp_idx, rate)

    def _on_arrive(self, executor, root_id, now):
        if self.exec_current[executor] is None:
            self._start_service(executor, root_id, now)
        else:
            queue = self.exec_queue[executor]
            if len(queue) >= self.queue_cap:
                raise UnstableSystemError(
                    f"executor {executor} queue exceeded {self.queue_cap} pending tuples "
                    f"at t={now:.3f}s; the schedule cannot keep up with the workload")
            queue.append(root_id)

    def _on_done(self, machine, version, now):
        if version != self.machine_version[machine]:
            return
        self._advance(machine, now)
        eps = self._REMAINING_EPS
        rem = self.exec_remaining
        finished = sorted(e for e in self.machine_busy[machine] if rem[e] <= eps)
        for e in finished:
            self._complete_copy(e, now)
        self._reschedule(machine, now)

    # -- run -----------------------------------------------------------------

    def run(self) -> SimResult:
        heap = self.heap
        horizon = self.horizon
        while heap and heap[0][0] <= horizon:
            time, _, kind, a, b = heapq.heappop(heap)
            if kind == _ARRIVE:
                self._on_arrive(a, b, time)
            elif kind == _DONE:
                self._on_done(a, b, time)
            else:
                self._on_emit(a, b, time)
        for machine in range(self.cluster.machine_count):
            self._advance(machine, horizon)
        return self._collect()

    def _collect(self) -> SimResult:
        cfg = self.config
        window = cfg.measure_duration / cfg.measurement_samples
        sums = [0.0] * cfg.measurement_samples
        counts = [0] * cfg.measurement_samples
        completed = 0
        for emit, done in zip(self.completion_emit, self.completion_done):
            if done < self.mw_start or done >= self.mw_end:
                continue
            idx = int((done - self.mw_start) / window)
            if idx >= cfg.measurement_samples:
                idx = cfg.measurement_samples - 1
            sums[idx] += done - emit
            counts[idx] += 1
            completed += 1
        samples = tuple(s / c for s, c in zip(sums, counts) if c > 0)
        avg = sum(samples) / len(samples) if samples else 0.0
        util = tuple(bt / cfg.measure_duration for bt in self.machine_busy_time)
        return SimResult(avg, samples, completed, util)


def simulate(spec: TopologySpec, cluster: ClusterSpec, schedule: ScheduleMatrix,
             config: SimConfig, *, queue_cap: int = DEFAULT_QUEUE_CAP) -> SimResult:
    """Run one deployment and report its measured processing time.

    The measurement window opens after ``config.warmup_duration`` and spans
    ``config.measure_duration``, split into ``config.measurement_samples``
    equal windows. Windows in which no tuple completed are dropped from
    ``per_sample_averages``.
    """
    return _Engine(spec, cluster, schedule, config, queue_cap).run()


def measure_after_stabilization(spec: TopologySpec, cluster: ClusterSpec, schedule: ScheduleMatrix,
                                config: SimConfig, *, queue_cap: int = DEFAULT_QUEUE_CAP) -> SimResult:
    """The reward-facing measurement protocol.

    Lets the deployment stabilize for the warmup, then takes
    ``measurement_samples`` consecutive sample averages spaced
    ``sample_interval`` apart and reports their mean. This pins the total
    observation span to ``measurement_samples * sample_interval`` regardless
    of ``measure_duration``.
    """
    effective = dataclasses.replace(
        config, measure_duration=config.measurement_samples * config.sample_interval)
    return simulate(spec, cluster, schedule, effective, queue_cap=queue_cap)

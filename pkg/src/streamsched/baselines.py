"""Non-learning schedulers and a small evaluation harness for them."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import UnknownSchedulerError
from .simulator import SimConfig, measure_after_stabilization
from .topology import (ClusterSpec, ScheduleMatrix, TopologySpec,
                       round_robin_schedule)


def random_schedule(spec: TopologySpec, cluster: ClusterSpec,
                    rng: np.random.Generator) -> ScheduleMatrix:
    """Each executor goes to an independently uniform machine."""
    machines = rng.integers(cluster.machine_count, size=spec.total_executors)
    return ScheduleMatrix.from_assignment(machines, cluster.machine_count)


def _round_robin_policy(spec, cluster, rng):
    return round_robin_schedule(spec, cluster)


SCHEDULERS = {
    "round-robin": _round_robin_policy,
    "random": random_schedule,
}


def make_schedule(name: str, spec: TopologySpec, cluster: ClusterSpec,
                  rng: np.random.Generator) -> ScheduleMatrix:
    """Look up a registered scheduler by name and produce one placement."""
    try:
        policy = SCHEDULERS[name]
    except KeyError:
        raise UnknownSchedulerError(
            f"unknown scheduler {name!r}; registered: {sorted(SCHEDULERS)}") from None
    return policy(spec, cluster, rng)


@dataclass(frozen=True)
class SchedulerStats:
    """Measured processing times of one scheduler across repetitions."""

    scheduler: str
    per_repetition: tuple[float, ...]
    mean: float
    min: float
    max: float

    def to_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "per_repetition": list(self.per_repetition),
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
        }


def evaluate_scheduler(name: str, spec: TopologySpec, cluster: ClusterSpec,
                       sim_config: SimConfig, repetitions: int = 5) -> SchedulerStats:
    """Deploy a named scheduler ``repetitions`` times and summarize.

    Repetition i seeds both the scheduler's draw and the simulator with
    ``sim_config.seed + i``, so results are reproducible.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    if name not in SCHEDULERS:
        raise UnknownSchedulerError(
            f"unknown scheduler {name!r}; registered: {sorted(SCHEDULERS)}")
    times = []
    for i in range(repetitions):
        seed = sim_config.seed + i
        schedule = make_schedule(name, spec, cluster, np.random.default_rng(seed))
        cfg = dataclasses.replace(sim_config, seed=seed)
        result = measure_after_stabilization(spec, cluster, schedule, cfg)
        times.append(result.avg_tuple_processing_time)
    arr = np.array(times)
    return SchedulerStats(name, tuple(times), float(arr.mean()), float(arr.min()), float(arr.max()))

"""Build a stream application by hand, place it, and measure it.

Shows the basic objects: a topology of components with parallel executors,
a cluster, a schedule matrix, and one simulator measurement.
"""

import numpy as np

from streamsched import (ClusterSpec, Component, Edge, ScheduleMatrix,
                         SimConfig, TopologySpec, round_robin_schedule,
                         simulate)


def main():
    topology = TopologySpec(
        components=(
            Component("events", "source", 2, 0.0),
            Component("parse", "processing-unit", 4, 0.008),
            Component("score", "processing-unit", 3, 0.004),
        ),
        edges=(
            Edge("events", "parse", grouping="shuffle"),
            Edge("parse", "score", grouping="fields"),
        ),
        source_rates={"events": 120.0},
    )
    cluster = ClusterSpec(machine_count=3, inter_machine_delay=0.004)

    print(f"{topology.total_executors} executors over {cluster.machine_count} machines")
    for comp in topology.components:
        execs = topology.executor_range(comp.id)
        print(f"  {comp.id:>7}: executors {execs.start}..{execs.stop - 1}, "
              f"mean service {comp.service_time_mean * 1e3:.1f} ms")

    schedule = round_robin_schedule(topology, cluster)
    print("\nround-robin assignment (executor -> machine):")
    print(" ", schedule.assignment.tolist())

    sim = SimConfig(seed=42, warmup_duration=5.0, measure_duration=10.0,
                    measurement_samples=5, sample_interval=2.0)
    result = simulate(topology, cluster, schedule, sim)
    print(f"\navg tuple processing time: {result.avg_tuple_processing_time * 1e3:.2f} ms "
          f"over {result.tuples_completed} tuples")
    print("per-sample averages (ms):",
          [round(s * 1e3, 2) for s in result.per_sample_averages])
    print("machine busy fractions:  ",
          [round(u, 3) for u in result.per_machine_utilization])

    packed = ScheduleMatrix.from_assignment([0] * topology.total_executors,
                                            cluster.machine_count)
    contended = simulate(topology, cluster, packed, sim)
    print(f"\nsame app packed onto one machine: "
          f"{contended.avg_tuple_processing_time * 1e3:.2f} ms "
          f"({contended.avg_tuple_processing_time / result.avg_tuple_processing_time:.1f}x slower)")


if __name__ == "__main__":
    main()

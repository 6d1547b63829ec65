"""Check the simulator against closed-form queueing results.

Two sanity anchors: an M/M/1 station at half load, where the expected
sojourn time is 1 / (mu - lambda), and a deterministic pipeline, where
every tuple takes exactly the sum of services plus network hops.
"""

from streamsched import (ClusterSpec, Component, Edge, ScheduleMatrix,
                         SimConfig, TopologySpec, simulate)


def single_queue(arrival_rate, service_mean):
    spec = TopologySpec(
        components=(
            Component("src", "source", 1),
            Component("worker", "processing-unit", 1, service_mean),
        ),
        edges=(Edge("src", "worker"),),
        source_rates={"src": arrival_rate},
    )
    return spec, ClusterSpec(machine_count=1), ScheduleMatrix.from_assignment([0, 0], 1)


def main():
    lam, mu = 50.0, 100.0
    spec, cluster, schedule = single_queue(lam, 1.0 / mu)
    cfg = SimConfig(seed=1, warmup_duration=30.0, measure_duration=300.0,
                    measurement_samples=5, sample_interval=60.0)
    result = simulate(spec, cluster, schedule, cfg)
    expected = 1.0 / (mu - lam)
    print(f"M/M/1 at rho={lam / mu:.1f}: measured {result.avg_tuple_processing_time * 1e3:.2f} ms, "
          f"theory {expected * 1e3:.2f} ms "
          f"({result.tuples_completed} tuples)")

    for lam in (30.0, 60.0, 90.0):
        spec, cluster, schedule = single_queue(lam, 1.0 / mu)
        r = simulate(spec, cluster, schedule, cfg)
        print(f"  rho={lam / mu:.1f}: measured {r.avg_tuple_processing_time * 1e3:6.2f} ms, "
              f"theory {1e3 / (mu - lam):6.2f} ms")

    # deterministic pipeline: no queueing, no randomness, exact arithmetic
    spec = TopologySpec(
        components=(
            Component("src", "source", 1),
            Component("a", "processing-unit", 1, 0.004),
            Component("b", "processing-unit", 1, 0.006),
        ),
        edges=(Edge("src", "a"), Edge("a", "b")),
        source_rates={"src": 10.0},
    )
    det = SimConfig(seed=0, warmup_duration=1.0, measure_duration=10.0,
                    measurement_samples=2, sample_interval=5.0,
                    service_time_distribution="deterministic")
    colocated = simulate(spec, ClusterSpec(machine_count=1),
                         ScheduleMatrix.from_assignment([0, 0, 0], 1), det)
    split = simulate(spec, ClusterSpec(machine_count=2, inter_machine_delay=0.003),
                     ScheduleMatrix.from_assignment([0, 0, 1], 2), det)
    print(f"\ndeterministic 4ms + 6ms pipeline, one machine: "
          f"{colocated.avg_tuple_processing_time * 1e3:.3f} ms (exactly 10)")
    print(f"same pipeline split across machines (+3ms hop): "
          f"{split.avg_tuple_processing_time * 1e3:.3f} ms (exactly 13)")


if __name__ == "__main__":
    main()

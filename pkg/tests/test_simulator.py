"""Simulator oracles: queueing theory, exact pipelines, determinism."""

import numpy as np
import pytest

from streamsched import (ClusterSpec, Component, DimensionMismatchError, Edge,
                         ScheduleMatrix, SimConfig, TopologySpec,
                         UnstableSystemError, measure_after_stabilization,
                         simulate)


def mm1_system(arrival_rate, service_mean):
    spec = TopologySpec(
        components=(
            Component("src", "source", 1),
            Component("worker", "processing-unit", 1, service_mean),
        ),
        edges=(Edge("src", "worker"),),
        source_rates={"src": arrival_rate},
    )
    cluster = ClusterSpec(machine_count=1)
    schedule = ScheduleMatrix.from_assignment([0, 0], 1)
    return spec, cluster, schedule


def chain_system(service_a, service_b, rate, machines, assignment,
                 inter_delay=0.003):
    spec = TopologySpec(
        components=(
            Component("src", "source", 1),
            Component("a", "processing-unit", 1, service_a),
            Component("b", "processing-unit", 1, service_b),
        ),
        edges=(Edge("src", "a"), Edge("a", "b")),
        source_rates={"src": rate},
    )
    cluster = ClusterSpec(machine_count=machines, inter_machine_delay=inter_delay)
    return spec, cluster, ScheduleMatrix.from_assignment(assignment, machines)


def test_mm1_sojourn_time_matches_theory():
    # single queue at rho = 0.5: E[T] = 1 / (mu - lambda) = 0.02 s
    spec, cluster, schedule = mm1_system(50.0, 0.01)
    cfg = SimConfig(seed=123, warmup_duration=30.0, measure_duration=400.0,
                    measurement_samples=5, sample_interval=80.0)
    result = simulate(spec, cluster, schedule, cfg)
    assert result.tuples_completed > 15_000
    assert result.avg_tuple_processing_time == pytest.approx(0.02, rel=0.10)
    # the worker is the only busy executor, so machine busy fraction ~= rho
    assert result.per_machine_utilization[0] == pytest.approx(0.5, abs=0.05)


def test_deterministic_pipeline_sums_services_exactly():
    # periodic arrivals far apart, fixed service, one machine: no queueing,
    # no hops, so every tuple takes exactly the summed service time
    spec, cluster, schedule = chain_system(0.004, 0.006, 10.0, 1, [0, 0, 0])
    cfg = SimConfig(seed=0, warmup_duration=1.0, measure_duration=10.0,
                    measurement_samples=4, sample_interval=2.5,
                    service_time_distribution="deterministic")
    result = simulate(spec, cluster, schedule, cfg)
    assert result.avg_tuple_processing_time == pytest.approx(0.010, abs=1e-12)
    for sample in result.per_sample_averages:
        assert sample == pytest.approx(0.010, abs=1e-12)


def test_deterministic_pipeline_adds_hop_delays_exactly():
    # a crosses to b over the network: + one inter-machine delay
    spec, cluster, schedule = chain_system(0.004, 0.006, 10.0, 2, [0, 0, 1],
                                           inter_delay=0.003)
    cfg = SimConfig(seed=0, warmup_duration=1.0, measure_duration=10.0,
                    measurement_samples=4, sample_interval=2.5,
                    service_time_distribution="deterministic")
    result = simulate(spec, cluster, schedule, cfg)
    assert result.avg_tuple_processing_time == pytest.approx(0.013, abs=1e-12)


def test_identical_runs_are_bit_identical():
    spec, cluster, schedule = mm1_system(40.0, 0.01)
    cfg = SimConfig(seed=7, warmup_duration=5.0, measure_duration=20.0,
                    measurement_samples=4, sample_interval=5.0)
    a = simulate(spec, cluster, schedule, cfg)
    b = simulate(spec, cluster, schedule, cfg)
    assert a.avg_tuple_processing_time == b.avg_tuple_processing_time
    assert a.per_sample_averages == b.per_sample_averages
    assert a.tuples_completed == b.tuples_completed
    assert a.per_machine_utilization == b.per_machine_utilization
    c = simulate(spec, cluster, schedule,
                 SimConfig(seed=8, warmup_duration=5.0, measure_duration=20.0,
                           measurement_samples=4, sample_interval=5.0))
    assert c.per_sample_averages != a.per_sample_averages  # seed matters


def test_heavier_load_is_slower_on_the_same_seed():
    slow_spec, cluster, schedule = mm1_system(80.0, 0.01)
    fast_spec, _, _ = mm1_system(30.0, 0.01)
    cfg = SimConfig(seed=5, warmup_duration=20.0, measure_duration=120.0,
                    measurement_samples=3, sample_interval=40.0)
    fast = simulate(fast_spec, cluster, schedule, cfg)
    slow = simulate(slow_spec, cluster, schedule, cfg)
    assert slow.avg_tuple_processing_time > fast.avg_tuple_processing_time


def test_overload_raises_unstable_system():
    spec, cluster, schedule = mm1_system(150.0, 0.01)  # rho = 1.5
    cfg = SimConfig(seed=1, warmup_duration=60.0, measure_duration=60.0,
                    measurement_samples=2, sample_interval=30.0)
    with pytest.raises(UnstableSystemError):
        simulate(spec, cluster, schedule, cfg, queue_cap=500)


def test_colocating_hot_executors_contends_for_capacity():
    # two parallel units fed by one source; packing them on one machine
    # halves each unit's share, spreading them out restores full speed
    spec = TopologySpec(
        components=(
            Component("src", "source", 1),
            Component("a", "processing-unit", 1, 0.02),
            Component("b", "processing-unit", 1, 0.02),
        ),
        edges=(Edge("src", "a"), Edge("src", "b")),
        source_rates={"src": 20.0},
    )
    cluster = ClusterSpec(machine_count=2, inter_machine_delay=0.001)
    cfg = SimConfig(seed=3, warmup_duration=10.0, measure_duration=60.0,
                    measurement_samples=3, sample_interval=20.0)
    packed = simulate(spec, cluster, ScheduleMatrix.from_assignment([0, 0, 0], 2), cfg)
    spread = simulate(spec, cluster, ScheduleMatrix.from_assignment([0, 0, 1], 2), cfg)
    assert spread.avg_tuple_processing_time < packed.avg_tuple_processing_time


def test_all_grouping_replicates_work():
    def fanout_spec(grouping):
        return TopologySpec(
            components=(
                Component("src", "source", 1),
                Component("work", "processing-unit", 2, 0.004),
            ),
            edges=(Edge("src", "work", grouping),),
            source_rates={"src": 50.0},
        )

    cluster = ClusterSpec(machine_count=1)
    schedule = ScheduleMatrix.from_assignment([0, 0, 0], 1)
    cfg = SimConfig(seed=2, warmup_duration=5.0, measure_duration=40.0,
                    measurement_samples=2, sample_interval=20.0,
                    service_time_distribution="deterministic")
    shuffle = simulate(fanout_spec("shuffle"), cluster, schedule, cfg)
    replicated = simulate(fanout_spec("all"), cluster, schedule, cfg)
    # every tuple is processed by both executors, doubling the load
    assert replicated.per_machine_utilization[0] == pytest.approx(
        2.0 * shuffle.per_machine_utilization[0], rel=0.05)


def test_global_grouping_pins_executor_zero():
    spec = TopologySpec(
        components=(
            Component("src", "source", 1),
            Component("work", "processing-unit", 2, 0.004),
        ),
        edges=(Edge("src", "work", "global"),),
        source_rates={"src": 50.0},
    )
    cluster = ClusterSpec(machine_count=2, inter_machine_delay=0.001)
    # src and work#0 on machine 0, work#1 alone on machine 1
    schedule = ScheduleMatrix.from_assignment([0, 0, 1], 2)
    cfg = SimConfig(seed=2, warmup_duration=5.0, measure_duration=40.0,
                    measurement_samples=2, sample_interval=20.0)
    result = simulate(spec, cluster, schedule, cfg)
    assert result.per_machine_utilization[0] > 0.1
    assert result.per_machine_utilization[1] == 0.0


def test_measurement_protocol_pins_observation_span():
    spec, cluster, schedule = mm1_system(40.0, 0.01)
    cfg = SimConfig(seed=9, warmup_duration=5.0, measure_duration=999.0,
                    measurement_samples=3, sample_interval=4.0)
    via_protocol = measure_after_stabilization(spec, cluster, schedule, cfg)
    import dataclasses
    direct = simulate(spec, cluster, schedule,
                      dataclasses.replace(cfg, measure_duration=12.0))
    assert via_protocol == direct
    assert len(via_protocol.per_sample_averages) <= 3


def test_idle_system_reports_zero():
    spec, cluster, schedule = mm1_system(0.0, 0.01)
    cfg = SimConfig(seed=0, warmup_duration=1.0, measure_duration=5.0,
                    measurement_samples=2, sample_interval=2.5)
    result = simulate(spec, cluster, schedule, cfg)
    assert result.tuples_completed == 0
    assert result.per_sample_averages == ()
    assert result.avg_tuple_processing_time == 0.0


def test_utilization_stays_in_bounds():
    rng = np.random.default_rng(0)
    for _ in range(3):
        rate = float(rng.uniform(10.0, 80.0))
        spec, cluster, schedule = mm1_system(rate, 0.01)
        cfg = SimConfig(seed=int(rng.integers(1000)), warmup_duration=5.0,
                        measure_duration=30.0, measurement_samples=3,
                        sample_interval=10.0)
        result = simulate(spec, cluster, schedule, cfg)
        for util in result.per_machine_utilization:
            assert 0.0 <= util <= 1.0


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(warmup_duration=-1.0)
    with pytest.raises(ValueError):
        SimConfig(measure_duration=0.0)
    with pytest.raises(ValueError):
        SimConfig(measurement_samples=0)
    with pytest.raises(ValueError):
        SimConfig(sample_interval=0.0)
    with pytest.raises(ValueError):
        SimConfig(service_time_distribution="uniform")


def test_schedule_must_match_topology_shape():
    spec, cluster, _ = mm1_system(10.0, 0.01)
    bad = ScheduleMatrix.from_assignment([0], 1)  # one row short
    cfg = SimConfig(seed=0, warmup_duration=1.0, measure_duration=2.0,
                    measurement_samples=1, sample_interval=2.0)
    with pytest.raises(DimensionMismatchError):
        simulate(spec, cluster, bad, cfg)

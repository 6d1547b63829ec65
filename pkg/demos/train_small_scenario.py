"""Train the actor-critic scheduler on the bundled small scenario.

The same configuration the release benchmarks use: pretraining on random
schedules, 900 online epochs with a decaying exploration rate, then a
comparison against round-robin on the identical measurement stream.
Takes about two minutes.
"""

import dataclasses
import time

import numpy as np

from streamsched import (ActorCriticAgent, AgentConfig, SchedulingEnv,
                         pretrain_offline, resolve_scenario,
                         round_robin_schedule, run_online,
                         stabilized_average)


def main():
    sc = resolve_scenario("continuous_queries_small")
    print(f"scenario {sc.name}: {sc.topology.total_executors} executors, "
          f"{sc.cluster.machine_count} machines")

    env = SchedulingEnv(sc.topology, sc.cluster, dataclasses.replace(sc.sim, seed=0))
    rng = np.random.default_rng(0)

    config = AgentConfig(gamma=0.0, critic_lr=1e-2, actor_lr=1e-4,
                         pretrain_samples=500, offline_train_steps=20000,
                         k_candidates=384, batch_size=32, buffer_capacity=500,
                         epsilon_final=0.05, epsilon_decay_epochs=550,
                         epochs=900)
    agent = ActorCriticAgent.for_env(env, config, rng)

    start = time.perf_counter()
    pretrain_offline(env, agent, config.pretrain_samples, rng)
    print(f"pretrained on {config.pretrain_samples} random deployments "
          f"[{time.perf_counter() - start:.0f}s]")

    log = run_online(env, agent, config.epochs, rng=rng)
    times = log.avg_times()
    print(f"online training done [{time.perf_counter() - start:.0f}s]")

    print("\n100-epoch mean tuple time (s):")
    for i in range(0, config.epochs, 100):
        eps = log.records[i].epsilon
        print(f"  epochs {i:>3}..{i + 99}: {np.mean(times[i:i + 100]):.4f}   "
              f"(epsilon {eps:.2f})")

    rr_sched = round_robin_schedule(sc.topology, sc.cluster)
    rr = float(np.mean([env.measure(rr_sched).avg_tuple_processing_time
                        for _ in range(20)]))
    stab = stabilized_average(times)
    print(f"\nstabilized agent time: {stab:.4f} s")
    print(f"round-robin reference: {rr:.4f} s")
    print(f"improvement: {(rr - stab) / rr:+.1%}")
    print(f"schedule found: {log.records[-1].action.assignment.tolist()}")


if __name__ == "__main__":
    main()

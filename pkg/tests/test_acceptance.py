"""Release acceptance checks.

Every test prints one verdict line of the form

    acceptance <label>: PASS|FAIL (detail)

so a full run doubles as a release checklist. The three scenario checks
train real agents and together take roughly 40 minutes:

    python -m pytest tests/test_acceptance.py -v
"""

import dataclasses
import time

import numpy as np
import pytest

from streamsched import (ActorCriticAgent, AgentConfig, ClusterSpec,
                         Component, DenseNet, DqnAgent, Edge,
                         ExperimentConfig, ReplayBuffer, ScheduleMatrix,
                         SchedulingEnv, SimConfig, SystemState, TopologySpec,
                         TransitionSample, action_space_size, backward,
                         brute_force_knn, clone_net, encode_state, forward,
                         k_nearest_actions, make_dense_net, normalize_rewards,
                         pretrain_offline, resolve_scenario,
                         round_robin_schedule, run_experiment, run_online,
                         simulate, smooth_zero_phase, soft_update,
                         stabilized_average, with_source_rates)
from streamsched.agents import actor_train_step, critic_train_step
from streamsched.nets import Layer


def report(capsys, label, ok, detail=""):
    line = f"acceptance {label}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    with capsys.disabled():
        print(line, flush=True)


def note(capsys, text):
    with capsys.disabled():
        print(f"  {text}", flush=True)


# -- nearest-neighbor retrieval ------------------------------------------------


def test_retrieval_matches_brute_force(capsys):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(2, 5))
        k = int(rng.integers(1, min(10, action_space_size(n, m)) + 1))
        proto = rng.random((n, m)) * rng.choice([1.0, 5.0])
        fast = k_nearest_actions(proto, k)
        slow = brute_force_knn(proto, k)
        worst = max(worst, float(np.max(np.abs(
            np.asarray(fast.distances) - np.asarray(slow.distances)))))
        for a, b in zip(fast.actions, slow.actions):
            assert a == b, "retrieval returned a different action than brute force"
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 5.0
    report(capsys, "knn-exactness", ok,
           f"200 shapes, worst distance gap {worst:.1e}, {elapsed:.2f} s")
    assert ok


def test_retrieval_scales_to_production_shape(capsys):
    rng = np.random.default_rng(17)
    proto = rng.random((100, 10))
    k_nearest_actions(proto, 32)  # warm up
    per_call = []
    for _ in range(20):
        start = time.perf_counter()
        result = k_nearest_actions(proto, 32)
        per_call.append(time.perf_counter() - start)
        assert len(result.actions) == 32
    worst = max(per_call)
    ok = worst < 0.100
    report(capsys, "knn-scale", ok,
           f"100x10 executors, k=32, worst call {worst * 1e3:.1f} ms")
    assert ok


# -- gradients -----------------------------------------------------------------


def numeric_gradient(net, loss, eps=1e-6):
    """Central finite differences of a scalar loss over every parameter."""
    grads = []
    for layer in net.layers:
        for arr in (layer.weight, layer.bias):
            g = np.zeros_like(arr)
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + eps
                hi = loss()
                arr[idx] = orig - eps
                lo = loss()
                arr[idx] = orig
                g[idx] = (hi - lo) / (2 * eps)
            grads.append(g)
    return np.concatenate([g.ravel() for g in grads])


def flatten_grads(grads):
    return np.concatenate([np.concatenate([gw.ravel(), gb.ravel()])
                           for gw, gb in grads])


def flat_params(net):
    return np.concatenate([np.concatenate([l.weight.ravel(), l.bias.ravel()])
                           for l in net.layers])


def relative_gap(analytic, numeric):
    # whole-vector ratio: per-coordinate division is ill-posed where the
    # true gradient crosses zero and the finite-difference noise floor
    scale = max(float(np.linalg.norm(numeric)), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def random_policy_case(rng):
    """A 3-executor, 2-machine batch with freshly initialized networks."""
    n, m = 3, 2
    state_dim = n * m + 1
    actor = make_dense_net(state_dim, [4], n * m, rng, output_activation="tanh")
    critic = make_dense_net(state_dim + n * m, [5], 1, rng)
    batch = []
    for _ in range(3):
        sched = ScheduleMatrix.from_assignment(
            [int(a) for a in rng.integers(0, m, size=n)], m)
        nxt = ScheduleMatrix.from_assignment(
            [int(a) for a in rng.integers(0, m, size=n)], m)
        batch.append(TransitionSample(
            SystemState(sched, np.array([float(rng.uniform(1.0, 8.0))])),
            sched, -float(rng.uniform(0.1, 2.0)),
            SystemState(nxt, np.array([float(rng.uniform(1.0, 8.0))]))))
    return actor, critic, batch


def test_gradients_match_finite_differences(capsys):
    rng = np.random.default_rng(0)

    # plain backward pass on random architectures
    worst_backward = 0.0
    for trial in range(100):
        in_dim = int(rng.integers(2, 6))
        out_dim = int(rng.integers(1, 4))
        hidden = [int(h) for h in rng.integers(2, 6, size=rng.integers(1, 3))]
        out_act = "tanh" if trial % 2 else "identity"
        net = make_dense_net(in_dim, hidden, out_dim, rng, output_activation=out_act)
        x = rng.normal(size=in_dim)
        upstream = rng.normal(size=out_dim)
        grads, _ = backward(net, x, upstream)
        numeric = numeric_gradient(net, lambda: float(forward(net, x) @ upstream))
        worst_backward = max(worst_backward,
                             relative_gap(flatten_grads(grads), numeric))

    # policy update: the value network's action gradient chained through
    # the policy network, recovered from the realized parameter step
    worst_policy = 0.0
    config = AgentConfig(actor_lr=1.0, rate_scale=8.0, batch_size=2,
                         buffer_capacity=8, k_candidates=2)
    for _ in range(100):
        actor, critic, batch = random_policy_case(rng)
        states = np.stack([encode_state(s.state, config.rate_scale) for s in batch])

        def objective():
            protos = (forward(actor, states) + 1.0) / 2.0
            x = np.concatenate([states, protos], axis=1)
            return float(np.mean(forward(critic, x)[:, 0]))

        numeric = numeric_gradient(actor, objective)
        stepped = clone_net(actor)
        before = flat_params(stepped)
        actor_train_step(ReplayBuffer(8), stepped, critic, config,
                         np.random.default_rng(0), batch=batch)
        analytic = flat_params(stepped) - before  # ascent step at lr 1.0
        worst_policy = max(worst_policy, relative_gap(analytic, numeric))

    ok = worst_backward <= 1e-4 and worst_policy <= 1e-4
    report(capsys, "gradient-check", ok,
           f"100 nets worst {worst_backward:.1e}, "
           f"100 policy steps worst {worst_policy:.1e}")
    assert ok


# -- update-rule arithmetic ----------------------------------------------------


def constant_net(in_dim, value):
    return DenseNet([Layer(np.zeros((1, in_dim)), np.array([float(value)]), "identity")])


def bellman_case(gamma):
    sched = ScheduleMatrix.from_assignment([0, 1], 2)
    state = SystemState(sched, np.array([4.0]))
    sample = TransitionSample(state, sched, -2.0, state)
    critic = constant_net(9, 0.0)
    target_critic = constant_net(9, -1.5)
    target_actor = DenseNet([Layer(np.zeros((4, 5)), np.zeros(4), "tanh")])
    config = AgentConfig(gamma=gamma, critic_lr=0.1, batch_size=1,
                         buffer_capacity=1, k_candidates=2, rate_scale=1.0)
    return sample, critic, target_actor, target_critic, config


def test_update_rule_arithmetic(capsys):
    rng = np.random.default_rng(0)

    # soft update is an exact convex blend
    source = make_dense_net(3, [4], 2, rng)
    target = make_dense_net(3, [4], 2, rng)
    blend = [0.75 * t + 0.25 * s
             for t, s in zip(flat_params(target), flat_params(source))]
    soft_update(target, source, 0.25)
    blend_ok = np.allclose(flat_params(target), blend, atol=1e-15)

    # replay keeps the newest samples once full
    buf = ReplayBuffer(capacity=2)
    sched = ScheduleMatrix.from_assignment([0, 1], 2)
    state = SystemState(sched, np.array([4.0]))
    for r in (-1.0, -2.0, -3.0):
        buf.push(TransitionSample(state, sched, r, state))
    evict_ok = {s.reward for s in buf.sample(2, rng)} == {-2.0, -3.0}

    # bootstrapped target: y = r + gamma * maxQ' = -2 + 0.99 * -1.5
    sample, critic, target_actor, target_critic, config = bellman_case(0.99)
    loss = critic_train_step(ReplayBuffer(1), critic, target_actor,
                             target_critic, config, rng, batch=[sample])
    y = -2.0 + 0.99 * -1.5
    target_ok = (abs(loss - y * y) < 1e-12
                 and abs(critic.layers[0].bias[0] - (-0.1 * 2.0 * -y)) < 1e-12)

    # discount zero reduces the target to the immediate reward
    sample, critic, target_actor, target_critic, config = bellman_case(0.0)
    loss0 = critic_train_step(ReplayBuffer(1), critic, target_actor,
                              target_critic, config, rng, batch=[sample])
    degen_ok = loss0 == 4.0

    ok = blend_ok and evict_ok and target_ok and degen_ok
    report(capsys, "update-arithmetic", ok,
           f"soft-update {blend_ok}, eviction {evict_ok}, "
           f"target y={y:.3f} {target_ok}, gamma-zero {degen_ok}")
    assert ok


# -- simulator oracles ---------------------------------------------------------


def test_simulator_matches_queueing_theory(capsys):
    # single queue at rho = 0.5: expected sojourn 1 / (mu - lambda) = 5 ms
    spec = TopologySpec(
        components=(Component("src", "source", 1),
                    Component("worker", "processing-unit", 1, 0.0025)),
        edges=(Edge("src", "worker"),),
        source_rates={"src": 200.0},
    )
    cluster = ClusterSpec(machine_count=1)
    schedule = ScheduleMatrix.from_assignment([0, 0], 1)
    cfg = SimConfig(seed=123, warmup_duration=50.0, measure_duration=520.0,
                    measurement_samples=4, sample_interval=130.0)
    result = simulate(spec, cluster, schedule, cfg)
    rel = abs(result.avg_tuple_processing_time - 0.005) / 0.005
    mm1_ok = result.tuples_completed >= 100_000 and rel <= 0.10

    # deterministic pipeline: services and hops add exactly
    spec2 = TopologySpec(
        components=(Component("src", "source", 1),
                    Component("a", "processing-unit", 1, 0.004),
                    Component("b", "processing-unit", 1, 0.006)),
        edges=(Edge("src", "a"), Edge("a", "b")),
        source_rates={"src": 10.0},
    )
    det_cfg = SimConfig(seed=0, warmup_duration=1.0, measure_duration=10.0,
                        measurement_samples=4, sample_interval=2.5,
                        service_time_distribution="deterministic")
    same = simulate(spec2, ClusterSpec(machine_count=1),
                    ScheduleMatrix.from_assignment([0, 0, 0], 1), det_cfg)
    split = simulate(spec2, ClusterSpec(machine_count=2, inter_machine_delay=0.003),
                     ScheduleMatrix.from_assignment([0, 0, 1], 2), det_cfg)
    det_ok = (abs(same.avg_tuple_processing_time - 0.010) < 1e-12
              and abs(split.avg_tuple_processing_time - 0.013) < 1e-12)

    ok = mm1_ok and det_ok
    report(capsys, "simulator-oracle", ok,
           f"queueing {result.avg_tuple_processing_time * 1e3:.2f} ms vs 5 ms "
           f"over {result.tuples_completed} tuples, exact pipeline {det_ok}")
    assert ok


# -- reporting transforms ------------------------------------------------------


def test_reporting_transforms_and_reproducible_runs(capsys, tmp_path):
    rng = np.random.default_rng(0)

    norm_ok = True
    for _ in range(20):
        out = normalize_rewards(rng.normal(size=40))
        norm_ok &= out.min() == 0.0 and out.max() == 1.0
        norm_ok &= bool(np.all((out >= 0.0) & (out <= 1.0)))
    exact = normalize_rewards([-4.0, -2.0, -1.0])
    norm_ok &= exact.tolist() == [0.0, pytest.approx(2.0 / 3.0), 1.0]

    series = rng.normal(size=60)
    ident = np.array_equal(smooth_zero_phase(series, 1), series)
    const = np.allclose(smooth_zero_phase(np.full(30, 2.5), 7), 2.5, atol=1e-12)
    mirrored = np.allclose(smooth_zero_phase(series[::-1], 5),
                           smooth_zero_phase(series, 5)[::-1], atol=1e-12)
    smooth_ok = ident and const and mirrored

    scenario = tmp_path / "tiny.json"
    scenario.write_text("""{
      "name": "tiny",
      "topology": {
        "components": [
          {"id": "src", "kind": "source", "executor_count": 1},
          {"id": "work", "kind": "processing-unit", "executor_count": 2,
           "service_time_mean": 0.01}
        ],
        "edges": [{"source": "src", "target": "work"}],
        "source_rates": {"src": 30.0}
      },
      "cluster": {"machine_count": 2, "inter_machine_delay": 0.002},
      "sim": {"seed": 0, "warmup_duration": 0.3, "measure_duration": 1.0,
              "measurement_samples": 2, "sample_interval": 0.5}
    }""")

    def run(out):
        run_experiment(ExperimentConfig(
            scenario_path=str(scenario), scheduler="actor-critic",
            seeds=(0, 1), output_dir=str(out),
            agent_config=AgentConfig(batch_size=2, buffer_capacity=8,
                                     k_candidates=4, pretrain_samples=2,
                                     offline_train_steps=2, epochs=4,
                                     hidden_sizes=(6,)),
            smoothing_window=3, workload_schedule=((2, 1.5),)))
        return {p.relative_to(out): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()}

    first = run(tmp_path / "run-a")
    second = run(tmp_path / "run-b")
    repro_ok = list(first) == list(second) and all(
        first[name] == second[name] for name in first)

    ok = norm_ok and smooth_ok and repro_ok
    report(capsys, "reporting", ok,
           f"normalize {norm_ok}, smoothing {smooth_ok}, "
           f"byte-reproducible runs {repro_ok}")
    assert ok


# -- trained schedulers on the bundled scenarios --------------------------------
#
# These three checks train real agents (roughly 7, 23, and 8 minutes).
# Training configs live here, not in AgentConfig defaults: short horizons
# need a hotter critic, a colder actor, and no bootstrapping.


def small_scenario_config():
    return AgentConfig(gamma=0.0, critic_lr=1e-2, actor_lr=1e-4,
                       pretrain_samples=500, offline_train_steps=20000,
                       k_candidates=384, batch_size=32, buffer_capacity=500,
                       epsilon_final=0.05, epsilon_decay_epochs=550, epochs=900)


def test_trained_agent_beats_round_robin_on_small_scenario(capsys):
    sc = resolve_scenario("continuous_queries_small")
    rr_sched = round_robin_schedule(sc.topology, sc.cluster)
    start = time.perf_counter()
    wins = 0
    for seed in range(5):
        env = SchedulingEnv(sc.topology, sc.cluster,
                            dataclasses.replace(sc.sim, seed=seed))
        rng = np.random.default_rng(seed)
        agent = ActorCriticAgent.for_env(env, small_scenario_config(), rng)
        pretrain_offline(env, agent, agent.config.pretrain_samples, rng)
        log = run_online(env, agent, 900, rng=rng)
        stab = stabilized_average(log.avg_times())
        rr = float(np.mean([env.measure(rr_sched).avg_tuple_processing_time
                            for _ in range(60)]))
        improvement = (rr - stab) / rr
        wins += improvement >= 0.10
        note(capsys, f"seed {seed}: agent {stab:.4f} s, round-robin {rr:.4f} s "
                     f"({improvement:+.1%})")
    elapsed = time.perf_counter() - start
    ok = wins >= 4 and elapsed <= 600.0
    report(capsys, "small-scenario-improvement", ok,
           f">=10% faster than round-robin on {wins}/5 seeds, {elapsed:.0f} s")
    assert ok


def test_actor_critic_at_or_below_dqn_on_large_scenario(capsys):
    sc = resolve_scenario("continuous_queries_large")
    base = dict(gamma=0.0, critic_lr=1e-2, pretrain_samples=300,
                offline_train_steps=15000, batch_size=32, buffer_capacity=500,
                epsilon_final=0.02, epsilon_decay_epochs=175, epochs=350)

    def run_one(seed, kind):
        env = SchedulingEnv(sc.topology, sc.cluster,
                            dataclasses.replace(sc.sim, seed=seed))
        rng = np.random.default_rng(seed)
        if kind == "actor-critic":
            config = AgentConfig(actor_lr=3e-5, k_candidates=320, **base)
            agent = ActorCriticAgent.for_env(env, config, rng)
        else:
            config = AgentConfig(**base)
            agent = DqnAgent.for_env(env, config, rng)
        pretrain_offline(env, agent, config.pretrain_samples, rng)
        log = run_online(env, agent, 350, rng=rng)
        return stabilized_average(log.avg_times())

    wins = 0
    for seed in range(5):
        ac = run_one(seed, "actor-critic")
        dq = run_one(seed, "dqn")
        wins += ac <= dq
        note(capsys, f"seed {seed}: actor-critic {ac:.4f} s, dqn {dq:.4f} s")
    ok = wins >= 4
    report(capsys, "large-scenario-ordering", ok,
           f"actor-critic at or below dqn on {wins}/5 seeds, equal budgets")
    assert ok


def test_agent_absorbs_workload_surge_better_than_round_robin(capsys):
    sc = resolve_scenario("continuous_queries_small")
    topo = with_source_rates(sc.topology, {"stream": 64.0})
    topo_post = with_source_rates(sc.topology, {"stream": 96.0})
    rr_sched = round_robin_schedule(topo, sc.cluster)
    wins = 0
    for seed in range(5):
        env = SchedulingEnv(topo, sc.cluster,
                            dataclasses.replace(sc.sim, seed=seed))
        rng = np.random.default_rng(seed)
        agent = ActorCriticAgent.for_env(env, small_scenario_config(), rng)
        pretrain_offline(env, agent, agent.config.pretrain_samples, rng)
        log = run_online(env, agent, 900, workload_schedule=[(450, 1.5)], rng=rng)
        stab_post = stabilized_average(log.avg_times()[450:])
        env_post = SchedulingEnv(topo_post, sc.cluster,
                                 dataclasses.replace(sc.sim, seed=seed))
        rr_post = float(np.mean([env_post.measure(rr_sched).avg_tuple_processing_time
                                 for _ in range(60)]))
        wins += stab_post < rr_post
        note(capsys, f"seed {seed}: post-step agent {stab_post:.4f} s, "
                     f"round-robin {rr_post:.4f} s")
    ok = wins >= 4
    report(capsys, "workload-step-robustness", ok,
           f"+50% rate step absorbed better than round-robin on {wins}/5 seeds")
    assert ok

"""Learning schedulers.

Two agents share the replay machinery:

* ``ActorCriticAgent``: a deterministic policy network maps the observed
  state to a continuous N x M proto-action; the K nearest feasible
  schedules are retrieved exactly and a value network picks the best one.
  Training follows the usual pattern: bootstrapped targets for the value
  network, the deterministic policy gradient for the policy, and Polyak
  updates for both target networks.
* ``DqnAgent``: a value network over the restricted action space of
  single-executor reassignments (N x M candidate moves per step) with an
  epsilon-greedy policy.

The state an agent observes is the flattened schedule matrix plus the
source rates scaled by ``rate_scale``; rewards are the negated measured
average tuple processing time in seconds, so larger is better and all
rewards are non-positive.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, InsufficientSamplesError
from .knn import k_nearest_actions
from .nets import (DenseNet, SgdConfig, backward, clone_net, forward,
                   make_dense_net, net_from_dict, net_to_dict, sgd_step,
                   soft_update)
from .simulator import (DEFAULT_QUEUE_CAP, SimConfig, SimResult,
                        measure_after_stabilization)
from .topology import (ClusterSpec, ScheduleMatrix, SystemState, TopologySpec,
                       round_robin_schedule, scale_source_rates, schedule_diff,
                       validate_topology, with_source_rates)

AGENT_CHECKPOINT_FORMAT = "agent-checkpoint-v1"


@dataclass(frozen=True)
class TransitionSample:
    """One (state, action, reward, next state) experience."""

    state: SystemState
    action: ScheduleMatrix
    reward: float
    next_state: SystemState

    def __post_init__(self):
        if not np.isfinite(self.reward) or self.reward > 0.0:
            raise ValueError(f"reward must be finite and <= 0, got {self.reward}")
        shape = self.state.schedule.matrix.shape
        if self.action.matrix.shape != shape or self.next_state.schedule.matrix.shape != shape:
            raise DimensionMismatchError("transition mixes schedules of different shapes")


class ReplayBuffer:
    """FIFO experience store with uniform mini-batch sampling."""

    def __init__(self, capacity: int = 1000):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: deque[TransitionSample] = deque(maxlen=capacity)

    def push(self, sample: TransitionSample) -> None:
        """Append a sample, evicting the oldest once at capacity."""
        self._items.append(sample)

    def sample(self, h: int, rng: np.random.Generator) -> list[TransitionSample]:
        """Draw ``h`` distinct samples uniformly at random."""
        if h < 1:
            raise ValueError(f"mini-batch size must be >= 1, got {h}")
        if h > len(self._items):
            raise InsufficientSamplesError(f"buffer holds {len(self._items)} samples, need {h}")
        idx = rng.choice(len(self._items), size=h, replace=False)
        return [self._items[int(i)] for i in idx]

    def __len__(self) -> int:
        return len(self._items)


@dataclass(frozen=True)
class AgentConfig:
    """Hyperparameters shared by the learning schedulers."""

    gamma: float = 0.99              # discount factor
    tau: float = 0.01                # Polyak rate for the target networks
    batch_size: int = 32             # mini-batch size H
    buffer_capacity: int = 1000
    k_candidates: int = 32           # K retrieved feasible actions
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.05
    epsilon_decay_epochs: int | None = None  # None: 80% of the online epochs
    epochs: int = 2000               # default online episode length T
    pretrain_samples: int = 10000
    offline_train_steps: int | None = None   # None: 3 * pretrain_samples
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    hidden_sizes: tuple[int, ...] = (64, 32)
    rate_scale: float | None = None  # None: 2 * max source rate at env binding

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity must be >= batch_size")
        if self.k_candidates < 1:
            raise ValueError(f"k_candidates must be >= 1, got {self.k_candidates}")
        if not 0.0 <= self.epsilon_final <= self.epsilon_initial <= 1.0:
            raise ValueError("need 0 <= epsilon_final <= epsilon_initial <= 1")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.pretrain_samples < 0:
            raise ValueError(f"pretrain_samples must be >= 0, got {self.pretrain_samples}")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")


def reward_from_measurement(result: SimResult) -> float:
    """Negated average processing time in seconds; never positive."""
    return -float(result.avg_tuple_processing_time)


def epsilon_at(config: AgentConfig, epoch: int, total_epochs: int) -> float:
    """Linear exploration schedule.

    Decays from ``epsilon_initial`` to ``epsilon_final`` over
    ``epsilon_decay_epochs`` (by default the first 80% of the run), then
    stays at the final value.
    """
    decay = config.epsilon_decay_epochs
    if decay is None:
        decay = max(1, math.ceil(0.8 * total_epochs))
    frac = min(1.0, epoch / decay) if decay > 0 else 1.0
    return config.epsilon_initial + (config.epsilon_final - config.epsilon_initial) * frac


def explore(proto: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """With probability epsilon, perturb every proto entry by uniform [0, 1] noise."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return proto + rng.random(proto.shape)
    return proto


def encode_state(state: SystemState, rate_scale: float) -> np.ndarray:
    """Flattened row-major schedule followed by the scaled workload."""
    return np.concatenate([
        state.schedule.matrix.reshape(-1).astype(float),
        state.workload / rate_scale,
    ])


def encode_state_action(state_vec: np.ndarray, action: ScheduleMatrix) -> np.ndarray:
    return np.concatenate([state_vec, action.matrix.reshape(-1).astype(float)])


def _rate_scale(config: AgentConfig) -> float:
    return config.rate_scale if config.rate_scale is not None else 1.0


def _resolve_k(k: int, schedule: ScheduleMatrix) -> int:
    return min(k, schedule.n_machines**schedule.n_threads)


class SchedulingEnv:
    """Binds an application, a cluster, and the measurement protocol.

    Each ``measure`` call runs the simulator under a fresh, deterministic
    child seed so repeated deployments of the same schedule see independent
    noise while the whole experiment stays reproducible.
    """

    def __init__(self, topology: TopologySpec, cluster: ClusterSpec, sim_config: SimConfig,
                 *, queue_cap: int = DEFAULT_QUEUE_CAP):
        validate_topology(topology)
        self.topology = topology
        self.cluster = cluster
        self.sim_config = sim_config
        self.queue_cap = queue_cap
        self._measure_count = 0

    @property
    def n_threads(self) -> int:
        return self.topology.total_executors

    @property
    def n_machines(self) -> int:
        return self.cluster.machine_count

    @property
    def n_sources(self) -> int:
        return len(self.topology.source_components)

    @property
    def state_dim(self) -> int:
        return self.n_threads * self.n_machines + self.n_sources

    def workload_vector(self) -> np.ndarray:
        return self.topology.workload_vector()

    def default_rate_scale(self) -> float:
        top = float(self.workload_vector().max(initial=0.0))
        return 2.0 * top if top > 0 else 1.0

    def set_source_rates(self, rates: dict[str, float]) -> None:
        self.topology = with_source_rates(self.topology, rates)

    def scale_workload(self, factor: float) -> None:
        self.topology = scale_source_rates(self.topology, factor)

    def initial_state(self) -> SystemState:
        return SystemState(round_robin_schedule(self.topology, self.cluster),
                           self.workload_vector())

    def measure(self, schedule: ScheduleMatrix) -> SimResult:
        """Deploy a schedule and observe its stabilized processing time."""
        seed = int(np.random.SeedSequence(
            entropy=self.sim_config.seed, spawn_key=(self._measure_count,)).generate_state(1)[0])
        self._measure_count += 1
        cfg = dataclasses.replace(self.sim_config, seed=seed)
        return measure_after_stabilization(self.topology, self.cluster, schedule, cfg,
                                           queue_cap=self.queue_cap)


# -- selection -------------------------------------------------------------


def proto_action(actor: DenseNet, state_vec: np.ndarray, n_machines: int) -> np.ndarray:
    """The policy's continuous action: tanh output rescaled into [0, 1]."""
    raw = forward(actor, state_vec)
    proto = (raw + 1.0) / 2.0
    return proto.reshape(-1, n_machines)


def actor_critic_select(state: SystemState, actor: DenseNet, critic: DenseNet, k: int,
                        *, rate_scale: float = 1.0, epsilon: float = 0.0,
                        rng: np.random.Generator | None = None) -> ScheduleMatrix:
    """Retrieve the K feasible actions nearest the (possibly perturbed)
    proto-action and return the one the value network scores highest.

    Ties keep the earlier candidate, i.e. the one closer to the proto.
    """
    if epsilon > 0.0 and rng is None:
        raise ValueError("exploration requires an rng")
    state_vec = encode_state(state, rate_scale)
    proto = proto_action(actor, state_vec, state.schedule.n_machines)
    if epsilon > 0.0:
        proto = explore(proto, epsilon, rng)
    result = k_nearest_actions(proto, _resolve_k(k, state.schedule))
    scores = score_actions(critic, state_vec, result.actions)
    best = int(np.argmax(scores))
    assert scores[best] >= scores.max()  # selection dominance
    return result.actions[best]


def score_actions(critic: DenseNet, state_vec: np.ndarray, actions) -> np.ndarray:
    """Value of each candidate action in the given state."""
    if not actions:
        return np.empty(0)
    rows = np.stack([encode_state_action(state_vec, a) for a in actions])
    return forward(critic, rows)[:, 0]


def score_single_moves(critic: DenseNet, state_vec: np.ndarray,
                       schedule: ScheduleMatrix) -> np.ndarray:
    """Q values of all

    N x M single-executor reassignments of ``schedule``, flattened row-major
    (candidate i*M+j moves executor i to machine j; moves onto the current
    machine are no-ops and stay in the set).

    Equivalent to a batched forward pass over all candidates; computed via
    first-layer column updates because each candidate differs from the
    current schedule in at most two entries.
    """
    n, m = schedule.n_threads, schedule.n_machines
    base = encode_state_action(state_vec, schedule)
    first = critic.layers[0]
    z_base = first.weight @ base + first.bias

    offset = state_vec.shape[0]
    cols = first.weight[:, offset:].T           # (N*M, h) rows indexed by action cell
    current = schedule.assignment
    new_idx = np.arange(n * m)
    old_idx = (np.repeat(np.arange(n), m) * m + np.repeat(current, m))
    z = z_base[None, :] + cols[new_idx] - cols[old_idx]

    h = np.tanh(z) if first.activation == "tanh" else z
    for layer in critic.layers[1:]:
        h = h @ layer.weight.T + layer.bias
        if layer.activation == "tanh":
            h = np.tanh(h)
    return h[:, 0]


def dqn_select(state: SystemState, critic: DenseNet, *, rate_scale: float = 1.0,
               epsilon: float = 0.0, rng: np.random.Generator | None = None) -> ScheduleMatrix:
    """Epsilon-greedy choice among the N x M single-executor reassignments."""
    if epsilon > 0.0 and rng is None:
        raise ValueError("exploration requires an rng")
    schedule = state.schedule
    n, m = schedule.n_threads, schedule.n_machines
    if epsilon > 0.0 and rng.random() < epsilon:
        idx = int(rng.integers(n * m))
    else:
        state_vec = encode_state(state, rate_scale)
        idx = int(np.argmax(score_single_moves(critic, state_vec, schedule)))
    return schedule.replace_row(idx // m, idx % m)


# -- training --------------------------------------------------------------


def _encode_batch(batch: list[TransitionSample], rate_scale: float):
    states = np.stack([encode_state(s.state, rate_scale) for s in batch])
    next_states = np.stack([encode_state(s.next_state, rate_scale) for s in batch])
    actions = np.stack([s.action.matrix.reshape(-1).astype(float) for s in batch])
    rewards = np.array([s.reward for s in batch])
    return states, actions, rewards, next_states


def critic_train_step(buffer: ReplayBuffer, critic: DenseNet, target_actor: DenseNet,
                      target_critic: DenseNet, config: AgentConfig,
                      rng: np.random.Generator, batch: list[TransitionSample] | None = None) -> float:
    """One SGD step on the mean-squared Bellman error.

    Targets are ``y_i = r_i + gamma * max_a Q'(s_{i+1}, a)`` where the max
    runs over the K feasible actions nearest the target policy's
    proto-action for the next state. Returns the mini-batch loss.
    """
    if batch is None:
        batch = buffer.sample(config.batch_size, rng)
    h = len(batch)
    scale = _rate_scale(config)
    states, actions, rewards, next_states = _encode_batch(batch, scale)

    best_next = np.empty(h)
    if config.gamma > 0.0:
        n_machines = batch[0].state.schedule.n_machines
        k = _resolve_k(config.k_candidates, batch[0].state.schedule)
        raw = forward(target_actor, next_states)
        protos = (raw + 1.0) / 2.0
        cand_rows, owners = [], []
        for i in range(h):
            result = k_nearest_actions(protos[i].reshape(-1, n_machines), k)
            for a in result.actions:
                cand_rows.append(np.concatenate([next_states[i], a.matrix.reshape(-1).astype(float)]))
                owners.append(i)
        values = forward(target_critic, np.stack(cand_rows))[:, 0]
        owners = np.array(owners)
        best_next.fill(-np.inf)
        np.maximum.at(best_next, owners, values)
    else:
        best_next.fill(0.0)

    y = rewards + config.gamma * best_next
    x = np.concatenate([states, actions], axis=1)
    q = forward(critic, x)[:, 0]
    loss = float(np.mean((y - q) ** 2))
    upstream = (2.0 * (q - y) / h)[:, None]
    grads, _ = backward(critic, x, upstream)
    sgd_step(critic, grads, SgdConfig(config.critic_lr, config.batch_size))
    return loss


def actor_train_step(buffer: ReplayBuffer, actor: DenseNet, critic: DenseNet,
                     config: AgentConfig, rng: np.random.Generator,
                     batch: list[TransitionSample] | None = None) -> float:
    """One ascent step on J = mean_i Q(s_i, pi(s_i)).

    The deterministic policy gradient chains the value network's action
    gradient through the policy network. Returns J before the update.
    """
    if batch is None:
        batch = buffer.sample(config.batch_size, rng)
    h = len(batch)
    states = np.stack([encode_state(s.state, _rate_scale(config)) for s in batch])

    raw = forward(actor, states)
    protos = (raw + 1.0) / 2.0
    x = np.concatenate([states, protos], axis=1)
    objective = float(np.mean(forward(critic, x)[:, 0]))

    ones = np.full((h, 1), 1.0 / h)
    _, dx = backward(critic, x, ones)
    dproto = dx[:, states.shape[1]:]
    # proto = (raw + 1) / 2, so dJ/draw = dJ/dproto * 0.5
    grads, _ = backward(actor, states, dproto * 0.5)
    ascent = [(-gw, -gb) for gw, gb in grads]
    sgd_step(actor, ascent, SgdConfig(config.actor_lr, config.batch_size))
    return objective


def dqn_train_step(buffer: ReplayBuffer, critic: DenseNet, target_critic: DenseNet,
                   config: AgentConfig, rng: np.random.Generator,
                   batch: list[TransitionSample] | None = None) -> float:
    """One SGD step for the restricted-action value network.

    Bootstrapped targets take the max over the next state's single-move
    candidates under the target network.
    """
    if batch is None:
        batch = buffer.sample(config.batch_size, rng)
    h = len(batch)
    scale = _rate_scale(config)
    states, actions, rewards, next_states = _encode_batch(batch, scale)

    best_next = np.empty(h)
    if config.gamma > 0.0:
        for i, sample in enumerate(batch):
            moves = score_single_moves(target_critic, next_states[i], sample.next_state.schedule)
            best_next[i] = float(moves.max())
    else:
        best_next.fill(0.0)

    y = rewards + config.gamma * best_next
    x = np.concatenate([states, actions], axis=1)
    q = forward(critic, x)[:, 0]
    loss = float(np.mean((y - q) ** 2))
    upstream = (2.0 * (q - y) / h)[:, None]
    grads, _ = backward(critic, x, upstream)
    sgd_step(critic, grads, SgdConfig(config.critic_lr, config.batch_size))
    return loss


# -- agents ----------------------------------------------------------------


class ActorCriticAgent:
    """Policy + value networks with exact K-nearest action retrieval."""

    kind = "actor-critic"

    def __init__(self, actor: DenseNet, critic: DenseNet, target_actor: DenseNet,
                 target_critic: DenseNet, config: AgentConfig):
        self.actor = actor
        self.critic = critic
        self.target_actor = target_actor
        self.target_critic = target_critic
        self.config = config
        self.buffer = ReplayBuffer(config.buffer_capacity)

    @classmethod
    def for_env(cls, env: SchedulingEnv, config: AgentConfig,
                rng: np.random.Generator) -> "ActorCriticAgent":
        if config.rate_scale is None:
            config = dataclasses.replace(config, rate_scale=env.default_rate_scale())
        action_dim = env.n_threads * env.n_machines
        actor = make_dense_net(env.state_dim, config.hidden_sizes, action_dim, rng,
                               output_activation="tanh")
        critic = make_dense_net(env.state_dim + action_dim, config.hidden_sizes, 1, rng)
        return cls(actor, critic, clone_net(actor), clone_net(critic), config)

    def select_action(self, state: SystemState, epsilon: float,
                      rng: np.random.Generator) -> ScheduleMatrix:
        return actor_critic_select(state, self.actor, self.critic, self.config.k_candidates,
                                   rate_scale=_rate_scale(self.config), epsilon=epsilon, rng=rng)

    def train_on_batch(self, rng: np.random.Generator) -> dict:
        batch = self.buffer.sample(self.config.batch_size, rng)
        loss = critic_train_step(self.buffer, self.critic, self.target_actor,
                                 self.target_critic, self.config, rng, batch=batch)
        objective = actor_train_step(self.buffer, self.actor, self.critic,
                                     self.config, rng, batch=batch)
        soft_update(self.target_critic, self.critic, self.config.tau)
        soft_update(self.target_actor, self.actor, self.config.tau)
        return {"critic_loss": loss, "actor_objective": objective}

    def nets_dict(self) -> dict:
        return {"actor": net_to_dict(self.actor), "critic": net_to_dict(self.critic),
                "target_actor": net_to_dict(self.target_actor),
                "target_critic": net_to_dict(self.target_critic)}


class DqnAgent:
    """Value network over single-executor reassignments, epsilon-greedy."""

    kind = "dqn"

    def __init__(self, critic: DenseNet, target_critic: DenseNet, config: AgentConfig):
        self.critic = critic
        self.target_critic = target_critic
        self.config = config
        self.buffer = ReplayBuffer(config.buffer_capacity)

    @classmethod
    def for_env(cls, env: SchedulingEnv, config: AgentConfig,
                rng: np.random.Generator) -> "DqnAgent":
        if config.rate_scale is None:
            config = dataclasses.replace(config, rate_scale=env.default_rate_scale())
        action_dim = env.n_threads * env.n_machines
        critic = make_dense_net(env.state_dim + action_dim, config.hidden_sizes, 1, rng)
        return cls(critic, clone_net(critic), config)

    def select_action(self, state: SystemState, epsilon: float,
                      rng: np.random.Generator) -> ScheduleMatrix:
        return dqn_select(state, self.critic, rate_scale=_rate_scale(self.config),
                          epsilon=epsilon, rng=rng)

    def train_on_batch(self, rng: np.random.Generator) -> dict:
        loss = dqn_train_step(self.buffer, self.critic, self.target_critic,
                              self.config, rng)
        soft_update(self.target_critic, self.critic, self.config.tau)
        return {"critic_loss": loss}

    def nets_dict(self) -> dict:
        return {"critic": net_to_dict(self.critic),
                "target_critic": net_to_dict(self.target_critic)}


def save_agent_checkpoint(agent, path: str | os.PathLike) -> None:
    """Bundle an agent's networks and config into one versioned JSON file."""
    payload = {
        "format": AGENT_CHECKPOINT_FORMAT,
        "kind": agent.kind,
        "config": dataclasses.asdict(agent.config),
        "nets": agent.nets_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_agent_checkpoint(path: str | os.PathLike):
    """Reconstruct an agent (with an empty buffer) from a checkpoint."""
    from .errors import CorruptCheckpointError

    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"cannot read agent checkpoint {path}: {exc}") from exc
    try:
        if data["format"] != AGENT_CHECKPOINT_FORMAT:
            raise CorruptCheckpointError(f"unsupported agent checkpoint format {data.get('format')!r}")
        config = AgentConfig(**data["config"])
        nets = data["nets"]
        if data["kind"] == ActorCriticAgent.kind:
            return ActorCriticAgent(net_from_dict(nets["actor"]), net_from_dict(nets["critic"]),
                                    net_from_dict(nets["target_actor"]),
                                    net_from_dict(nets["target_critic"]), config)
        if data["kind"] == DqnAgent.kind:
            return DqnAgent(net_from_dict(nets["critic"]), net_from_dict(nets["target_critic"]), config)
        raise CorruptCheckpointError(f"unknown agent kind {data['kind']!r}")
    except CorruptCheckpointError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpointError(f"malformed agent checkpoint: {exc}") from exc


# -- experience collection ---------------------------------------------------


@dataclass
class EpisodeRecord:
    epoch: int
    action: ScheduleMatrix
    reward: float
    epsilon: float
    moved_threads: int
    avg_time_seconds: float


@dataclass
class EpisodeLog:
    """Per-epoch trace of one online run."""

    records: list[EpisodeRecord] = field(default_factory=list)
    workload_events: list[tuple[int, float]] = field(default_factory=list)

    CSV_HEADER = "epoch,reward,epsilon,moved-threads,avg-time-seconds"

    def append(self, record: EpisodeRecord) -> None:
        self.records.append(record)

    def rewards(self) -> np.ndarray:
        return np.array([r.reward for r in self.records])

    def avg_times(self) -> np.ndarray:
        return np.array([r.avg_time_seconds for r in self.records])

    def write_csv(self, path: str | os.PathLike) -> None:
        lines = [self.CSV_HEADER]
        for r in self.records:
            lines.append(f"{r.epoch},{r.reward!r},{r.epsilon!r},{r.moved_threads},{r.avg_time_seconds!r}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def pretrain_offline(env: SchedulingEnv, agent, n_samples: int,
                     rng: np.random.Generator) -> None:
    """Collect random-action experience, then train offline.

    Deploys ``n_samples`` random schedules in sequence, recording each
    measured reward, then runs the configured number of offline mini-batch
    steps (three per collected sample by default). With ``n_samples`` zero
    this is a no-op and the networks stay untouched.
    """
    from .baselines import random_schedule

    if n_samples == 0:
        return
    state = env.initial_state()
    for _ in range(n_samples):
        action = random_schedule(env.topology, env.cluster, rng)
        result = env.measure(action)
        next_state = SystemState(action, env.workload_vector())
        agent.buffer.push(TransitionSample(state, action,
                                           reward_from_measurement(result), next_state))
        state = next_state
    steps = agent.config.offline_train_steps
    if steps is None:
        steps = 3 * n_samples
    for _ in range(steps):
        if len(agent.buffer) >= agent.config.batch_size:
            agent.train_on_batch(rng)


def run_online(env: SchedulingEnv, agent, epochs: int,
               workload_schedule: list[tuple[int, float]] | None = None,
               rng: np.random.Generator | None = None) -> EpisodeLog:
    """The online control loop.

    Every epoch the agent picks a schedule for the observed state, the
    deployment is measured, the transition is stored, and one mini-batch
    update runs once the buffer can fill a batch. ``workload_schedule``
    entries ``(epoch, factor)`` scale the source rates at the start of the
    given epoch, mimicking workload changes; they are recorded in the log.
    Starts from the round-robin placement.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    steps = sorted(workload_schedule or [], key=lambda pair: pair[0])
    log = EpisodeLog()
    state = env.initial_state()
    for epoch in range(epochs):
        while steps and steps[0][0] == epoch:
            _, factor = steps.pop(0)
            env.scale_workload(factor)
            state = SystemState(state.schedule, env.workload_vector())
            log.workload_events.append((epoch, factor))
        eps = epsilon_at(agent.config, epoch, epochs)
        action = agent.select_action(state, eps, rng)
        result = env.measure(action)
        reward = reward_from_measurement(result)
        next_state = SystemState(action, env.workload_vector())
        agent.buffer.push(TransitionSample(state, action, reward, next_state))
        if len(agent.buffer) >= agent.config.batch_size:
            agent.train_on_batch(rng)
        log.append(EpisodeRecord(epoch, action, reward, eps,
                                 len(schedule_diff(state.schedule, action)),
                                 result.avg_tuple_processing_time))
        state = next_state
    return log

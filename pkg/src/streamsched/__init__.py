"""Model-free scheduling of distributed stream applications.

The package simulates a cluster running a stream application, measures the
average end-to-end tuple processing time of a given executor placement, and
trains schedulers against that measurement signal. Two learning schedulers
are provided (an actor-critic method that retrieves the exact K nearest
feasible schedules to its continuous proto-action, and a value-network
baseline restricted to single-executor moves) alongside round-robin and
random baselines, with a CLI and experiment harness around them.
"""

from .agents import (ActorCriticAgent, AgentConfig, DqnAgent, EpisodeLog,
                     EpisodeRecord, ReplayBuffer, SchedulingEnv,
                     TransitionSample, actor_critic_select, dqn_select,
                     encode_state, epsilon_at, explore, load_agent_checkpoint,
                     pretrain_offline, proto_action, reward_from_measurement,
                     run_online, save_agent_checkpoint)
from .baselines import (SCHEDULERS, SchedulerStats, evaluate_scheduler,
                        make_schedule, random_schedule)
from .errors import (ArchitectureMismatchError, BadWindowError, ConfigError,
                     CorruptCheckpointError, DimensionMismatchError,
                     InsufficientSamplesError, KTooLargeError,
                     NonFiniteGradientError, ScenarioMismatchError,
                     SpaceTooLargeError, TopologyError, UnknownSchedulerError,
                     UnstableSystemError)
from .harness import (ExperimentConfig, compare_report, format_comparison,
                      format_report, load_experiment_config, load_summary,
                      normalize_rewards, run_experiment, scenario_fingerprint,
                      smooth_zero_phase, stabilized_average)
from .knn import (KnnResult, action_space_size, brute_force_knn,
                  exact_distance, k_nearest_actions, nearest_action,
                  row_deltas)
from .nets import (DenseNet, Layer, SgdConfig, backward, clone_net, forward,
                   load_weights, make_dense_net, save_weights, sgd_step,
                   soft_update)
from .scenarios import (Scenario, builtin_scenario_path,
                        list_builtin_scenarios, load_scenario,
                        resolve_scenario)
from .simulator import (SimConfig, SimResult, measure_after_stabilization,
                        simulate)
from .topology import (ClusterSpec, Component, Edge, ScheduleMatrix,
                       SystemState, TopologySpec, round_robin_schedule,
                       scale_source_rates, schedule_diff, validate_topology,
                       with_source_rates)

__version__ = "0.1.0"

__all__ = [
    "ActorCriticAgent", "AgentConfig", "ArchitectureMismatchError",
    "BadWindowError", "ClusterSpec", "Component", "ConfigError",
    "CorruptCheckpointError", "DenseNet", "DimensionMismatchError",
    "DqnAgent", "Edge", "EpisodeLog", "EpisodeRecord", "ExperimentConfig",
    "InsufficientSamplesError", "KTooLargeError", "KnnResult", "Layer",
    "NonFiniteGradientError", "ReplayBuffer", "SCHEDULERS", "Scenario",
    "ScenarioMismatchError", "ScheduleMatrix", "SchedulerStats",
    "SchedulingEnv", "SgdConfig", "SimConfig", "SimResult",
    "SpaceTooLargeError", "SystemState", "TopologyError", "TopologySpec",
    "TransitionSample", "UnknownSchedulerError", "UnstableSystemError",
    "action_space_size", "actor_critic_select", "backward",
    "brute_force_knn", "builtin_scenario_path", "clone_net",
    "compare_report", "dqn_select", "encode_state", "epsilon_at",
    "evaluate_scheduler", "exact_distance", "explore", "format_comparison",
    "format_report", "forward", "k_nearest_actions", "list_builtin_scenarios",
    "load_agent_checkpoint", "load_experiment_config", "load_scenario",
    "load_summary", "load_weights", "make_dense_net", "make_schedule",
    "measure_after_stabilization", "nearest_action", "normalize_rewards",
    "pretrain_offline", "proto_action", "random_schedule",
    "resolve_scenario", "reward_from_measurement", "round_robin_schedule",
    "row_deltas", "run_experiment", "run_online", "save_agent_checkpoint",
    "save_weights", "scale_source_rates", "scenario_fingerprint",
    "schedule_diff", "sgd_step", "simulate", "smooth_zero_phase",
    "soft_update", "stabilized_average", "validate_topology",
    "with_source_rates",
]

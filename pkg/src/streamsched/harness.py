"""Experiment runner and reporting transforms.

``run_experiment`` fans one configuration out over a list of seeds, writes
one metrics tree per run, and returns the summary. The reporting helpers
(normalization, zero-phase smoothing, stabilized tail averages, run
comparison) operate on plain arrays and summary dicts so they can be used
on data produced elsewhere.

Everything written to disk is byte-reproducible: identical configurations
produce identical files. JSON is dumped with sorted keys, CSV floats use
``repr``, and no timestamps or absolute paths are recorded.

Layout of an output directory::

    summary.json            aggregate + per-seed results
    seed-<s>/episodes.csv   per-epoch trace (learning schedulers only)
    seed-<s>/curve.csv      normalized + smoothed reward curve
    seed-<s>/checkpoint.json

A baseline scheduler writes only summary.json: there is nothing to train
and the per-seed result is a single stabilized measurement.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agents import (ActorCriticAgent, AgentConfig, DqnAgent, SchedulingEnv,
                     pretrain_offline, run_online, save_agent_checkpoint)
from .baselines import SCHEDULERS, make_schedule
from .errors import (BadWindowError, ConfigError, DimensionMismatchError,
                     InsufficientSamplesError, ScenarioMismatchError,
                     UnknownSchedulerError)
from .scenarios import Scenario, resolve_scenario
from .simulator import SimConfig, measure_after_stabilization
from .topology import ClusterSpec, TopologySpec

SUMMARY_FORMAT = "experiment-summary-v1"
LEARNERS = ("dqn", "actor-critic")
CURVE_HEADER = "epoch,reward-normalized,reward-smoothed"


# -- reporting transforms ----------------------------------------------------


def normalize_rewards(rewards) -> np.ndarray:
    """Rescale a series to [0, 1] via (r - min) / (max - min).

    A constant series has no range to normalize; it comes back as zeros
    with a RuntimeWarning.
    """
    arr = np.asarray(rewards, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"reward series must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        return arr.copy()
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        warnings.warn("reward range is degenerate (min == max); returning zeros",
                      RuntimeWarning, stacklevel=2)
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def smooth_zero_phase(values, window: int) -> np.ndarray:
    """Zero-phase moving average: a forward box pass then a backward one.

    The two passes combine into a single symmetric triangle kernel of
    length ``2 * window - 1``, applied centered, so the output has no phase
    lag and the same length as the input. Near the ends the kernel is
    renormalized to the mass that falls inside the series, which keeps the
    DC gain at exactly 1. ``window`` must be odd, >= 1 and at most the
    series length; window 1 is the identity.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"series must be 1-D, got shape {arr.shape}")
    if window < 1 or window % 2 == 0:
        raise BadWindowError(f"window must be a positive odd integer, got {window}")
    if window > arr.size:
        raise BadWindowError(f"window {window} exceeds series length {arr.size}")
    if window == 1:
        return arr.copy()
    box = np.ones(window)
    kernel = np.convolve(box, box)
    # centered slice of the full convolution; 'same' mode would return the
    # kernel's length whenever 2*window-1 exceeds the series length
    start = window - 1
    num = np.convolve(arr, kernel)[start:start + arr.size]
    den = np.convolve(np.ones(arr.size), kernel)[start:start + arr.size]
    return num / den


def stabilized_average(values, tail_fraction: float = 0.25) -> float:
    """Mean of the last ``tail_fraction`` of a measurement series.

    Stands in for reading a stabilized value off a long trace; at least
    one sample is always kept.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"series must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise InsufficientSamplesError("cannot take a stabilized average of an empty series")
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    tail = max(1, int(arr.size * tail_fraction))
    return float(arr[-tail:].mean())


# -- experiment configuration ------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a scheduler on a scenario across several seeds."""

    scenario_path: str               # filesystem path or builtin scenario name
    scheduler: str                   # round-robin | random | dqn | actor-critic
    seeds: tuple[int, ...]
    output_dir: str
    agent_config: AgentConfig = AgentConfig()
    sim_config: SimConfig | None = None      # None: the scenario's own
    epochs: int | None = None                # None: agent_config.epochs
    smoothing_window: int = 1
    workload_schedule: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "workload_schedule",
                           tuple((int(e), float(f)) for e, f in self.workload_schedule))
        known = tuple(SCHEDULERS) + LEARNERS
        if self.scheduler not in known:
            raise UnknownSchedulerError(
                f"unknown scheduler {self.scheduler!r}; known: {sorted(known)}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {list(self.seeds)}")
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise BadWindowError(
                f"smoothing_window must be a positive odd integer, got {self.smoothing_window}")
        if self.workload_schedule and self.scheduler not in LEARNERS:
            raise ConfigError("workload_schedule requires a learning scheduler")
        for epoch, factor in self.workload_schedule:
            if epoch < 0:
                raise ConfigError(f"workload step epoch must be >= 0, got {epoch}")
            if not np.isfinite(factor) or factor <= 0:
                raise ConfigError(f"workload step factor must be positive, got {factor}")


def experiment_config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from the JSON document the CLI accepts.

    Keys: scenario, scheduler, seeds, output_dir; optional agent (AgentConfig
    fields), sim (SimConfig fields), epochs, smoothing_window,
    workload_schedule ([[epoch, factor], ...]).
    """
    if not isinstance(data, dict):
        raise ConfigError(f"experiment config must be a JSON object, got {type(data).__name__}")
    known = {"scenario", "scheduler", "seeds", "output_dir", "agent", "sim",
             "epochs", "smoothing_window", "workload_schedule"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown experiment config keys: {unknown}")
    try:
        agent = AgentConfig(**data.get("agent", {}))
        sim = SimConfig(**data["sim"]) if "sim" in data else None
        kwargs = dict(
            scenario_path=str(data["scenario"]),
            scheduler=str(data["scheduler"]),
            seeds=tuple(int(s) for s in data["seeds"]),
            output_dir=str(data["output_dir"]),
            agent_config=agent,
            sim_config=sim,
            epochs=int(data["epochs"]) if data.get("epochs") is not None else None,
            smoothing_window=int(data.get("smoothing_window", 1)),
            workload_schedule=tuple((int(e), float(f))
                                    for e, f in data.get("workload_schedule", ())),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc
    return ExperimentConfig(**kwargs)


def load_experiment_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read experiment config {path}: {exc}") from exc
    return experiment_config_from_dict(data)


def scenario_fingerprint(scenario: Scenario) -> str:
    """Content hash used to check that two runs deployed the same system."""
    payload = {
        "name": scenario.name,
        "components": [[c.id, c.kind, c.executor_count, c.service_time_mean]
                       for c in scenario.topology.components],
        "edges": [[e.source, e.target, e.grouping] for e in scenario.topology.edges],
        "source_rates": scenario.topology.source_rates,
        "cluster": dataclasses.asdict(scenario.cluster),
        "sim": dataclasses.asdict(scenario.sim),
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


# -- running -----------------------------------------------------------------


def _seed_sim(scenario: Scenario, config: ExperimentConfig, seed: int) -> SimConfig:
    base = config.sim_config if config.sim_config is not None else scenario.sim
    return dataclasses.replace(base, seed=seed)


def _write_curve(path: Path, rewards: np.ndarray, window: int) -> None:
    normalized = normalize_rewards(rewards)
    smoothed = smooth_zero_phase(normalized, window)
    lines = [CURVE_HEADER]
    for epoch in range(normalized.size):
        lines.append(f"{epoch},{float(normalized[epoch])!r},{float(smoothed[epoch])!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_learner_seed(scenario: Scenario, config: ExperimentConfig, seed: int,
                      seed_dir: Path) -> dict:
    env = SchedulingEnv(scenario.topology, scenario.cluster,
                        _seed_sim(scenario, config, seed))
    rng = np.random.default_rng(seed)
    cls = ActorCriticAgent if config.scheduler == "actor-critic" else DqnAgent
    agent = cls.for_env(env, config.agent_config, rng)
    pretrain_offline(env, agent, agent.config.pretrain_samples, rng)
    epochs = config.epochs if config.epochs is not None else agent.config.epochs
    log = run_online(env, agent, epochs,
                     workload_schedule=list(config.workload_schedule), rng=rng)

    seed_dir.mkdir(parents=True, exist_ok=True)
    log.write_csv(seed_dir / "episodes.csv")
    with warnings.catch_warnings():
        # a short run can plateau into a constant reward series; the curve
        # file should still be written
        warnings.simplefilter("ignore", RuntimeWarning)
        _write_curve(seed_dir / "curve.csv", log.rewards(), config.smoothing_window)
    save_agent_checkpoint(agent, seed_dir / "checkpoint.json")

    times = log.avg_times()
    return {
        "seed": seed,
        "episodes": len(log.records),
        "stabilized_avg_time": stabilized_average(times),
        "best_avg_time": float(times.min()),
        "final_avg_time": float(times[-1]),
        "workload_events": [[int(e), float(f)] for e, f in log.workload_events],
    }


def _run_baseline_seed(scenario: Scenario, config: ExperimentConfig, seed: int) -> dict:
    schedule = make_schedule(config.scheduler, scenario.topology, scenario.cluster,
                             np.random.default_rng(seed))
    result = measure_after_stabilization(scenario.topology, scenario.cluster, schedule,
                                         _seed_sim(scenario, config, seed))
    return {"seed": seed, "stabilized_avg_time": float(result.avg_tuple_processing_time)}


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the configured scheduler once per seed and persist the results.

    Returns the summary dict, which is also written to
    ``<output_dir>/summary.json``. Each seed drives the scheduler, the
    agent's initialization and the simulator, so re-running a config
    reproduces every output byte for byte.
    """
    scenario = resolve_scenario(config.scenario_path)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    per_seed = []
    for seed in config.seeds:
        if config.scheduler in LEARNERS:
            per_seed.append(_run_learner_seed(scenario, config, seed, out / f"seed-{seed}"))
        else:
            per_seed.append(_run_baseline_seed(scenario, config, seed))

    times = np.array([entry["stabilized_avg_time"] for entry in per_seed])
    epochs = None
    if config.scheduler in LEARNERS:
        epochs = config.epochs if config.epochs is not None else config.agent_config.epochs
    summary = {
        "format": SUMMARY_FORMAT,
        "scenario": scenario.name,
        "scenario_fingerprint": scenario_fingerprint(scenario),
        "scheduler": config.scheduler,
        "seeds": list(config.seeds),
        "epochs": epochs,
        "smoothing_window": config.smoothing_window,
        "per_seed": per_seed,
        "stabilized_avg_time_mean": float(times.mean()),
        "stabilized_avg_time_min": float(times.min()),
        "stabilized_avg_time_max": float(times.max()),
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


# -- reading runs back -------------------------------------------------------


def load_summary(run_dir) -> dict:
    """Read a run directory's summary.json (a direct file path also works)."""
    path = Path(run_dir)
    if path.is_dir():
        path = path / "summary.json"
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run summary {path}: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != SUMMARY_FORMAT:
        raise ConfigError(f"{path} is not an experiment summary")
    return data


def compare_report(summary_a: dict, summary_b: dict) -> dict:
    """Relative improvement of run A over run B on the same scenario.

    Improvement is (time_b - time_a) / time_b on the stabilized averages,
    so a positive value means A is faster. When both runs used the same
    seed list the report also pairs them seed by seed.
    """
    for key in ("scenario", "scenario_fingerprint"):
        if summary_a.get(key) != summary_b.get(key):
            raise ScenarioMismatchError(
                f"runs disagree on {key}: {summary_a.get(key)!r} vs {summary_b.get(key)!r}")
    time_a = float(summary_a["stabilized_avg_time_mean"])
    time_b = float(summary_b["stabilized_avg_time_mean"])
    if time_b <= 0:
        raise ValueError(f"reference stabilized time must be positive, got {time_b}")
    report = {
        "scenario": summary_a["scenario"],
        "scheduler_a": summary_a["scheduler"],
        "scheduler_b": summary_b["scheduler"],
        "avg_time_a": time_a,
        "avg_time_b": time_b,
        "improvement": (time_b - time_a) / time_b,
    }
    seeds_a = [entry["seed"] for entry in summary_a.get("per_seed", [])]
    seeds_b = [entry["seed"] for entry in summary_b.get("per_seed", [])]
    if seeds_a and seeds_a == seeds_b:
        pairs = []
        better = 0
        for ea, eb in zip(summary_a["per_seed"], summary_b["per_seed"]):
            ta, tb = float(ea["stabilized_avg_time"]), float(eb["stabilized_avg_time"])
            pairs.append({"seed": ea["seed"], "avg_time_a": ta, "avg_time_b": tb,
                          "improvement": (tb - ta) / tb if tb > 0 else 0.0})
            if ta < tb:
                better += 1
        report["per_seed"] = pairs
        report["a_better_seeds"] = better
    return report


# -- plain-text rendering for the CLI ----------------------------------------


def format_report(summary: dict) -> str:
    lines = [
        f"scenario:  {summary['scenario']}",
        f"scheduler: {summary['scheduler']}",
        f"seeds:     {', '.join(str(s) for s in summary['seeds'])}",
    ]
    if summary.get("epochs") is not None:
        lines.append(f"epochs:    {summary['epochs']}")
    for entry in summary["per_seed"]:
        line = f"  seed {entry['seed']}: stabilized {entry['stabilized_avg_time']:.6f} s"
        if "best_avg_time" in entry:
            line += (f", best {entry['best_avg_time']:.6f} s"
                     f", final {entry['final_avg_time']:.6f} s")
        for epoch, factor in entry.get("workload_events", []):
            line += f", workload x{factor:g} at epoch {epoch}"
        lines.append(line)
    lines.append(f"stabilized avg time: mean {summary['stabilized_avg_time_mean']:.6f} s, "
                 f"min {summary['stabilized_avg_time_min']:.6f} s, "
                 f"max {summary['stabilized_avg_time_max']:.6f} s")
    return "\n".join(lines)


def format_comparison(report: dict) -> str:
    lines = [
        f"scenario: {report['scenario']}",
        f"a: {report['scheduler_a']} at {report['avg_time_a']:.6f} s",
        f"b: {report['scheduler_b']} at {report['avg_time_b']:.6f} s",
        f"improvement of a over b: {100.0 * report['improvement']:.1f}%",
    ]
    if "per_seed" in report:
        for pair in report["per_seed"]:
            lines.append(f"  seed {pair['seed']}: {pair['avg_time_a']:.6f} s vs "
                         f"{pair['avg_time_b']:.6f} s ({100.0 * pair['improvement']:+.1f}%)")
        lines.append(f"a faster on {report['a_better_seeds']} of {len(report['per_seed'])} seeds")
    return "\n".join(lines)

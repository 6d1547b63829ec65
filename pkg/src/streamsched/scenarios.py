"""Scenario files: one JSON document describing a benchmark deployment.

Schema (all durations seconds, rates tuples per second)::

    {
      "name": "...",
      "topology": {
        "components": [
          {"id": "spout", "kind": "source", "executor_count": 2,
           "service_time_mean": 0.0},
          ...
        ],
        "edges": [
          {"source": "spout", "target": "query", "grouping": "shuffle"},
          ...
        ],
        "source_rates": {"spout": 100.0}
      },
      "cluster": {
        "machine_count": 4, "slots_per_machine": 10,
        "intra_machine_delay": 0.0005, "inter_machine_delay": 0.003,
        "machine_capacity": 1.0
      },
      "sim": {
        "seed": 0, "warmup_duration": 2.0, "measure_duration": 5.0,
        "measurement_samples": 5, "sample_interval": 1.0,
        "service_time_distribution": "exponential"
      }
    }

The package ships a small catalog of benchmark scenarios; see
:func:`list_builtin_scenarios`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .simulator import SimConfig
from .topology import (ClusterSpec, Component, Edge, TopologySpec,
                       validate_topology)


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: TopologySpec
    cluster: ClusterSpec
    sim: SimConfig


def _build(data: dict, origin: str) -> Scenario:
    try:
        topo = data["topology"]
        components = tuple(
            Component(
                id=str(c["id"]),
                kind=str(c["kind"]),
                executor_count=int(c["executor_count"]),
                service_time_mean=float(c.get("service_time_mean", 0.0)),
            )
            for c in topo["components"]
        )
        edges = tuple(
            Edge(source=str(e["source"]), target=str(e["target"]),
                 grouping=str(e.get("grouping", "shuffle")))
            for e in topo.get("edges", ())
        )
        rates = {str(k): float(v) for k, v in topo.get("source_rates", {}).items()}
        spec = TopologySpec(components, edges, rates)
        cluster = ClusterSpec(**{k: v for k, v in data["cluster"].items()})
        sim = SimConfig(**{k: v for k, v in data.get("sim", {}).items()})
        name = str(data.get("name", Path(origin).stem))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario {origin}: {exc}") from exc
    try:
        validate_topology(spec)
    except ValueError as exc:
        raise ConfigError(f"invalid scenario {origin}: {exc}") from exc
    return Scenario(name, spec, cluster, sim)


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario JSON file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return _build(data, str(path))


def list_builtin_scenarios() -> list[str]:
    """Names of the scenario files shipped with the package."""
    root = resources.files(__package__).joinpath("scenarios")
    return sorted(p.name[:-len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_scenario_path(name: str) -> Path:
    """Filesystem path of a shipped scenario (name without .json)."""
    root = resources.files(__package__).joinpath("scenarios")
    candidate = root.joinpath(f"{name}.json")
    if not candidate.is_file():
        raise ConfigError(f"no builtin scenario {name!r}; available: {list_builtin_scenarios()}")
    return Path(str(candidate))


def resolve_scenario(name_or_path: str | Path) -> Scenario:
    """Accept either a filesystem path or a builtin scenario name."""
    p = Path(name_or_path)
    if p.suffix == ".json" or p.exists():
        return load_scenario(p)
    return load_scenario(builtin_scenario_path(str(name_or_path)))

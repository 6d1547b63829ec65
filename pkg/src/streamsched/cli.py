"""Command line entry points.

Three main subcommands:

* ``run``: execute one experiment (scheduler x scenario x seeds) and write
  a metrics tree. The experiment can come from a JSON config file
  (``--config``), from flags, or both, with flags winning.
* ``report``: print the summary of a finished run directory.
* ``compare``: print the relative improvement of run A over run B.

Exit codes: 0 on success, 1 for configuration and usage errors, 2 for
runtime failures (an unstable deployment, unexpected exceptions).
"""

from __future__ import annotations

import argparse
import sys

from .errors import UnstableSystemError
from .harness import (ExperimentConfig, compare_report, format_comparison,
                      format_report, load_experiment_config, load_summary,
                      run_experiment)
from .scenarios import list_builtin_scenarios


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")


def _parse_workload_step(text: str) -> tuple[int, float]:
    try:
        epoch, factor = text.split(":")
        return int(epoch), float(factor)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"workload step must look like EPOCH:FACTOR, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamsched",
                     description="Schedule stream applications with learned and baseline policies.")
    # subparsers inherit _Parser, so their usage errors also exit 1
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its metrics tree")
    run.add_argument("--config", help="JSON experiment config file")
    run.add_argument("--scenario", help="builtin scenario name or path to a scenario JSON file")
    run.add_argument("--scheduler", help="round-robin | random | dqn | actor-critic")
    run.add_argument("--seeds", type=_parse_seeds,
                     help="comma-separated seed list, e.g. 0,1,2 (default 0)")
    run.add_argument("--epochs", type=int, help="online epochs per seed (learners)")
    run.add_argument("--out", help="output directory for metrics files")
    run.add_argument("--smoothing-window", type=int,
                     help="odd window for the reward curve smoothing (default 1)")
    run.add_argument("--workload-step", type=_parse_workload_step, action="append",
                     metavar="EPOCH:FACTOR",
                     help="scale source rates by FACTOR at EPOCH; may repeat")
    run.set_defaults(func=_cmd_run)

    report = sub.add_parser("report", help="print the summary of a run directory")
    report.add_argument("run_dir", help="directory written by `run` (or its summary.json)")
    report.set_defaults(func=_cmd_report)

    compare = sub.add_parser("compare",
                             help="improvement of run A over run B on the same scenario")
    compare.add_argument("run_a", help="run directory of the candidate")
    compare.add_argument("run_b", help="run directory of the reference")
    compare.set_defaults(func=_cmd_compare)

    scenarios = sub.add_parser("scenarios", help="list the builtin scenario names")
    scenarios.set_defaults(func=_cmd_scenarios)
    return parser


def _merge_run_config(args) -> ExperimentConfig:
    base = load_experiment_config(args.config) if args.config else None

    def pick(flag_value, base_value, default):
        if flag_value is not None:
            return flag_value
        return base_value if base is not None else default

    scenario = pick(args.scenario, base.scenario_path if base else None, None)
    scheduler = pick(args.scheduler, base.scheduler if base else None, None)
    out = pick(args.out, base.output_dir if base else None, None)
    missing = [flag for flag, value in
               (("--scenario", scenario), ("--scheduler", scheduler), ("--out", out))
               if value is None]
    if missing:
        raise argparse.ArgumentTypeError(
            f"missing {', '.join(missing)} (give them as flags or in --config)")

    kwargs = dict(
        scenario_path=scenario,
        scheduler=scheduler,
        seeds=tuple(pick(args.seeds, base.seeds if base else None, (0,))),
        output_dir=out,
        epochs=pick(args.epochs, base.epochs if base else None, None),
        smoothing_window=pick(args.smoothing_window,
                              base.smoothing_window if base else None, 1),
        workload_schedule=pick(tuple(args.workload_step) if args.workload_step else None,
                               base.workload_schedule if base else None, ()),
    )
    if base is not None:
        kwargs["agent_config"] = base.agent_config
        kwargs["sim_config"] = base.sim_config
    return ExperimentConfig(**kwargs)


def _cmd_run(args) -> int:
    config = _merge_run_config(args)
    summary = run_experiment(config)
    print(format_report(summary))
    print(f"metrics written to {config.output_dir}")
    return 0


def _cmd_report(args) -> int:
    print(format_report(load_summary(args.run_dir)))
    return 0


def _cmd_compare(args) -> int:
    report = compare_report(load_summary(args.run_a), load_summary(args.run_b))
    print(format_comparison(report))
    return 0


def _cmd_scenarios(args) -> int:
    for name in list_builtin_scenarios():
        print(name)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # every configuration error in the package derives from ValueError
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UnstableSystemError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

"""
Command-line entry point: `holosparse <command> [options]`.

Commands:
  run             run an experiment from a config file or preset
  preset          list the built-in configs or print one as JSON
  validate        run the invariant suite
  export-channel  write one trial's channel as JSON + CSV
  plot            render a results CSV or a variance-map CSV to PNG
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import pandas as pd

from .bench import export_channel, results_frame, run_experiment, run_variance_map
from .config import ExperimentConfig
from .errors import ConfigError, HoloSparseError
from .presets import PRESET_CATALOG, preset_factory
from .validate import run_invariants

logger = logging.getLogger("holosparse")

THREADS_ENV = "HOLOSPARSE_THREADS"


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    noise = common.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    noise.add_argument("--quiet", action="store_true", help="warnings only, no progress bar")
    return common


def _add_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="experiment config (JSON)")
    source.add_argument("--preset", choices=sorted(PRESET_CATALOG), help="built-in config")
    parser.add_argument("--seed", type=int, help="override master_seed")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="holosparse", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="run an experiment")
    _add_source(run)
    run.add_argument("--out", type=Path, help="results CSV (stdout if omitted)")
    run.add_argument("--trials", type=int, help="override the trial count")
    run.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")
    run.add_argument("--long", action="store_true", help="allow configs marked long")
    run.add_argument("--trial-log", type=Path, help="per-trial NMSE terms CSV")

    preset = commands.add_parser("preset", parents=[common], help="list or print built-in configs")
    preset.add_argument("name", nargs="?", help="preset to print")
    preset.add_argument("--out", type=Path, help="write the config here instead of stdout")

    validate = commands.add_parser("validate", parents=[common], help="run the invariant suite")
    validate.add_argument("names", nargs="*", help="run only these checks")

    export = commands.add_parser("export-channel", parents=[common], help="dump one channel realisation")
    _add_source(export)
    export.add_argument("--trial", type=int, default=0)
    export.add_argument("--sweep-index", type=int, default=0)
    export.add_argument("--out", type=Path, required=True, help="file stem for the .json and .csv files")

    plot = commands.add_parser("plot", parents=[common], help="render a CSV to PNG")
    plot.add_argument("csv", type=Path)
    plot.add_argument("--out", type=Path, help="PNG path (default: CSV path with .png)")
    plot.add_argument("--xlabel", default="sweep value")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = preset_factory(args.preset) if args.preset else ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    return dataclasses.replace(config, **overrides) if overrides else config


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        threads = flag
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(THREADS_ENV, f"must be an integer, got {raw!r}") from None
    if threads < 1:
        raise ConfigError("threads", "must be at least 1")
    return threads


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if config.long and not args.long:
        print(f"config {config.name!r} is marked long; pass --long to run it", file=sys.stderr)
        return 2
    if config.experiment == "variance_map":
        frame = run_variance_map(config, args.out)
        if args.out is None:
            frame.to_csv(sys.stdout, index=False)
        return 0
    rows = run_experiment(
        config,
        out=args.out,
        threads=resolve_threads(args.threads),
        progress=not args.quiet and sys.stderr.isatty(),
        trial_log=args.trial_log,
    )
    if args.out is None:
        results_frame(rows).to_csv(sys.stdout, index=False)
    return 0


def _cmd_preset(args: argparse.Namespace) -> int:
    if args.name is None:
        for name, factory in PRESET_CATALOG.items():
            config = factory()
            print(f"{name:12s} {config.experiment:13s} {'long' if config.long else ''}".rstrip())
        return 0
    text = preset_factory(args.name).to_json() + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    report = run_invariants(args.names or None)
    for name in report.passed:
        print(f"PASS {name}")
    for name, message in report.failed:
        print(f"FAIL {name}: {message}")
    print(f"{len(report.passed)} passed, {len(report.failed)} failed")
    return 0 if report.ok else 1


def _cmd_export(args: argparse.Namespace) -> int:
    config = _load_config(args)
    export_channel(config, args.trial, args.sweep_index, args.out)
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    from .plotting import plot_results, plot_variance_map

    out = args.out or args.csv.with_suffix(".png")
    columns = pd.read_csv(args.csv, nrows=0).columns
    if "sigma2" in columns:
        plot_variance_map(args.csv, out)
    else:
        plot_results(args.csv, out, args.xlabel)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "preset": _cmd_preset,
    "validate": _cmd_validate,
    "export-channel": _cmd_export,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return _COMMANDS[args.command](args)
    except (HoloSparseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

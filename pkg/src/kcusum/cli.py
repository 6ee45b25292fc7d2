"""Command-line front end.

Subcommands: ``trace``, ``mtbfa``, ``md``, ``bounds``, ``calibrate``.
Exit codes: 0 on success, 1 on any configuration error, 2 when a
campaign's results are unreliable (a threshold row exceeded 50%
truncation, or every replication false-alarmed).  Outputs are still
written in the exit-2 case; the code is a reliability signal.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ConfigError, ExperimentConfig, load_config
from .harness import build_context, run_experiment, write_bounds_txt

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kcusum",
        description="Streaming kernel change detection: traces, campaigns, bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("trace", "monitor one trajectory and write trace.csv (+ SVG panels)"),
        ("mtbfa", "Monte Carlo mean time between false alarms vs threshold"),
        ("md", "Monte Carlo mean detection delay vs threshold"),
        ("bounds", "evaluate closed-form guarantees and write bounds.txt"),
        ("calibrate", "run holdout calibration and print the correction"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="experiment config file")
        cmd.add_argument("--out", default=None, help="output directory override")
        cmd.add_argument("--seed", type=int, default=None, help="campaign seed override")
        cmd.add_argument(
            "--replications", type=int, default=None, help="replication count override"
        )
        cmd.add_argument(
            "--threads", type=int, default=None, help="worker thread count override"
        )
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    camp = cfg.campaign
    if args.command in ("trace", "mtbfa", "md"):
        camp = replace(camp, mode=args.command)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("campaign.seed: must fit in an unsigned 64-bit integer")
        camp = replace(camp, seed=args.seed)
    if args.replications is not None:
        if args.replications < 1:
            raise ConfigError("campaign.replications: must be >= 1")
        camp = replace(camp, replications=args.replications)
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("campaign.threads: must be >= 1")
        camp = replace(camp, threads=args.threads)
    cfg = replace(cfg, campaign=camp)
    # cross-field checks that depend on the (possibly overridden) mode
    if camp.mode == "md" and cfg.scenario.change_at is None:
        raise ConfigError("campaign.mode: md campaigns need scenario.change_at set")
    if camp.mode == "mtbfa" and cfg.scenario.change_at is not None:
        raise ConfigError("campaign.mode: mtbfa campaigns need scenario.change_at = none")
    if cfg.scenario.kind == "csv" and camp.mode != "trace":
        raise ConfigError("campaign.mode: csv scenarios support trace mode only")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)

        if args.command == "calibrate":
            if cfg.detector.correction != "calibrate":
                raise ConfigError(
                    "detector.correction: the calibrate subcommand needs "
                    "correction = calibrate"
                )
            context = build_context(cfg, cfg.campaign.seed)
            for note in context.notes:
                print(note)
            return 0

        if args.command == "bounds":
            import os

            context = build_context(cfg, cfg.campaign.seed)
            directory = args.out if args.out is not None else cfg.output.directory
            os.makedirs(directory, exist_ok=True)
            path = os.path.join(directory, "bounds.txt")
            write_bounds_txt(path, cfg, context)
            with open(path, "r", encoding="utf-8") as fh:
                print(fh.read(), end="")
            print(f"wrote {path}")
            return 0

        result = run_experiment(cfg, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    for note in result.notes:
        print(note)
    directory = args.out if args.out is not None else cfg.output.directory
    written = "trace.csv" if result.mode == "trace" else "campaign.csv"
    print(f"wrote {directory}/{written}, bounds.txt, notes.txt")
    if result.aborted:
        print(
            "campaign unreliable: every replication false-alarmed before the change",
            file=sys.stderr,
        )
        return 2
    if any(row.unreliable for row in result.rows):
        print(
            "campaign unreliable: a threshold row exceeded 50% truncation",
            file=sys.stderr,
        )
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

    genmetric evaluate <config.json>   full CAS/metrics run
    genmetric baseline <config.json>   real-data baseline only
    genmetric sweep    <config.json>   truncation sweep + correlations
    genmetric plot     <file>          SVG charts from report/CSV files

Global flags on every subcommand: --out-dir (also honored from the
GENMETRIC_OUT_DIR environment variable), --seed (master seed override),
--threads (parallel sweep points). Exit codes: 0 success, 2 config
error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_experiment_config
from .harness import (
    plot_file,
    run_baseline,
    run_evaluate,
    run_sweep,
    write_evaluate_outputs,
    write_sweep_outputs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-dir", default=None, help="output directory override")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep grid points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genmetric",
        description="Evaluate class-conditional generators by classifier "
                    "accuracy (CAS/NAS/GAN-test) and sample statistics (IS/FID/KID).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler_help in (
        ("evaluate", "run baseline + CAS + metrics from a config"),
        ("baseline", "run only the real-data baseline from a config"),
        ("sweep", "run the truncation sweep from a config"),
    ):
        cmd = sub.add_parser(name, help=handler_help)
        cmd.add_argument("config", help="path to experiment config JSON")
        _common_flags(cmd)
    plot = sub.add_parser("plot", help="render SVG charts from a report or CSV")
    plot.add_argument("input", help="report.json, per_class.csv, or sweep.csv")
    _common_flags(plot)
    return parser


def _resolve_out_dir(args) -> str | None:
    return args.out_dir or os.environ.get("GENMETRIC_OUT_DIR") or None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            written = plot_file(args.input, _resolve_out_dir(args))
            for path in written:
                print(path)
            return EXIT_OK

        overrides = {"out_dir": _resolve_out_dir(args), "seed": args.seed}
        cfg = load_experiment_config(args.config, overrides)
        if args.command == "evaluate":
            report = run_evaluate(cfg)
            written = write_evaluate_outputs(report, cfg.out_dir)
        elif args.command == "baseline":
            report = run_baseline(cfg)
            report.write(cfg.out_dir)
            written = ["report.json", "summary.csv"]
            written = [f"{cfg.out_dir}/{name}" for name in written]
        else:
            result = run_sweep(cfg, threads=max(1, args.threads))
            written = write_sweep_outputs(result, cfg.out_dir)
        for path in written:
            print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

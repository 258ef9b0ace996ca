"""Command-line entry point.

    modfun run <config.json|preset> [--out DIR] [--jobs N] [--seed SEED]
    modfun report <DIR>
    modfun presets

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 missing report inputs.  The master seed precedence is flag > MODFUN_SEED
environment variable > config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigError, ModfunError
from .experiment import (
    config_from_dict,
    format_report,
    load_config,
    preset_names,
    read_summary,
    run_experiment,
    summarize,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_MISSING = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modfun", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="path to a config JSON, or a preset name")
    run_p.add_argument("--out", default=None, help="output directory (default: ./<name>-out)")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel replicate jobs")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")

    rep_p = sub.add_parser("report", help="summarize a run directory")
    rep_p.add_argument("directory")

    sub.add_parser("presets", help="list shipped preset configs")
    return parser


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        seed = args.seed
        if seed is None and os.environ.get("MODFUN_SEED"):
            seed = int(os.environ["MODFUN_SEED"])
        if seed is not None:
            doc = dict(config.raw)
            doc["noise"] = dict(doc.get("noise", {}), master_seed=seed)
            config = config_from_dict(doc)
    except (ModfunError, json.JSONDecodeError, OSError, ValueError) as exc:
        # anything raised while parsing or validating the config is a config error
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or f"{config.name}-out"
    try:
        rows = run_experiment(config, out_dir, jobs=args.jobs)
    except ModfunError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{config.name}: {len(rows)} runs -> {out_dir}/summary.csv")
    print(format_report(summarize(rows)))
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        rows = read_summary(args.directory)
    except (FileNotFoundError, ConfigError) as exc:
        print(f"missing inputs: {exc}", file=sys.stderr)
        return EXIT_MISSING
    print(format_report(summarize(rows)))
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "report":
        return _cmd_report(args)
    for name in preset_names():
        print(name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

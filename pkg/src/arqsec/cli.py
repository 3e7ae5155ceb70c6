"""Command-line experiment runner.

    arqsec run --config FILE [--output PATH] [--jobs K] [--seed-override S]
    arqsec validate --config FILE

Exit codes: 0 success, 2 configuration error, 3 runtime error. Output CSVs
are self-describing: the first line is a canonical metadata comment that
reproduces the file byte for byte when run again. Set ARQSEC_LOG to
error, info, or debug to control logging.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace

from . import config, experiments

log = logging.getLogger("arqsec")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _setup_logging() -> None:
    level = os.environ.get("ARQSEC_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}
    if level not in levels:
        print(f"error: ARQSEC_LOG: unknown level {level!r}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    logging.basicConfig(level=levels[level],
                        format="%(levelname)s %(name)s: %(message)s")


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(spec: config.ExperimentSpec, rows: list[dict], path: str) -> None:
    """Write the CSV atomically: metadata comment, header, one row per point."""
    columns = experiments.COLUMNS[spec.kind]
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="ascii", newline="") as fh:
            fh.write(config.metadata_line(spec) + "\n")
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row[c]) for c in columns])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_spec(spec: config.ExperimentSpec, jobs: int = 1) -> None:
    rows = experiments.RUNNERS[spec.kind](spec, jobs)
    write_rows(spec, rows, spec.output_path)


def _cmd_validate(args) -> int:
    try:
        spec = config.load(args.config)
    except config.ConfigError as exc:
        return _report_config_errors(exc)
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {spec.kind} -> {spec.output_path}")
    return EXIT_OK


def _cmd_run(args) -> int:
    try:
        spec = config.load(args.config)
    except config.ConfigError as exc:
        return _report_config_errors(exc)
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed_override is not None:
        spec = replace(spec, master_seed=args.seed_override)
    if args.output is not None:
        spec = replace(spec, output_path=args.output)
    try:
        run_spec(spec, jobs=args.jobs)
    except Exception as exc:  # noqa: BLE001
        log.exception("experiment failed")
        print(f"error: runtime: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {spec.output_path}")
    return EXIT_OK



def _report_config_errors(exc: config.ConfigError) -> int:
    for err in exc.errors:
        print(f"error: {err}", file=sys.stderr)
    return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arqsec",
        description="ARQ secret-key sharing experiment workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--output", default=None,
                     help="override the config's output_path")
    run.add_argument("--jobs", type=int, default=1,
                     help="parallel workers across parameter points")
    run.add_argument("--seed-override", type=int, default=None)
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="validate a config without running")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entrypoint: run experiments, list schemes, run acceptance checks."""

import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

from pathint import __version__
from pathint.core.errors import ConfigError
from pathint.harness.checks import run_checks
from pathint.harness.config import REQUIRED_FIELDS, load_config
from pathint.harness.experiments import EXPERIMENTS
from pathint.harness.report import write_report
from pathint.harness.runner import run_experiment

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2
EXIT_INTERRUPTED = 130


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse CLI arguments.

    Args:
        argv (list[str] | None): Arguments without the program name; defaults
            to `sys.argv[1:]`.

    Returns:
        argparse.Namespace: Parsed CLI arguments.
    """
    parser = argparse.ArgumentParser(
        prog="pathint",
        description="Run path-integral regularization experiments against oracles.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help="Base logging level (default: $PATHINT_LOG_LEVEL or INFO)",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Lower the logging level one step per flag.",
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="count",
        default=0,
        help="Raise the logging level one step per flag.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment file.")
    run.add_argument("--config", required=True, help="Experiment file (.ini or .yaml).")
    run.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Override numerics.seed of stochastic experiments.",
    )
    run.add_argument(
        "--out",
        default=None,
        help="Destination directory (default: experiment.output of the config)",
    )
    run.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads for row evaluation (default: $PATHINT_THREADS or 1)",
    )
    run.add_argument(
        "--timing",
        action="store_true",
        help="Add wall-clock runtime to the result files (not reproducible).",
    )
    run.add_argument(
        "--compress",
        action="store_true",
        help="Also write a zstd-compressed minified JSON (<name>.json.zst).",
    )

    commands.add_parser("schemes", help="List available schemes and their columns.")

    check = commands.add_parser("check", help="Run the built-in acceptance checks.")
    check.add_argument(
        "--quick",
        action="store_true",
        help="Skip the Monte Carlo and reproducibility checks.",
    )
    return parser.parse_args(argv)


def resolve_log_level(name: str | None, verbose: int = 0, quiet: int = 0) -> int:
    """Level from `--log-level` or `PATHINT_LOG_LEVEL`, shifted by `-v` and `-q`.

    Each flag moves one step of ten; the result is clamped to DEBUG..CRITICAL.

    Raises:
        ValueError: If the base level is not a logging level name.
    """
    raw = name if name is not None else os.environ.get("PATHINT_LOG_LEVEL", "INFO")
    base = logging.getLevelNamesMapping().get(raw.upper())
    if base is None:
        raise ValueError(f"Invalid log level: {raw}")
    level = base + 10 * (quiet - verbose)
    return min(max(level, logging.DEBUG), logging.CRITICAL)


def configure_logging(level: int) -> None:
    """Configure root logging; DEBUG output names the worker thread of each row."""
    fmt = "%(asctime)s %(levelname)s %(name)s: %(message)s"
    if level <= logging.DEBUG:
        fmt = "%(asctime)s %(levelname)s [%(threadName)s] %(name)s: %(message)s"
    logging.basicConfig(level=level, format=fmt, datefmt="%H:%M:%S")


def resolve_threads(flag: int | None) -> int:
    """Thread count from the flag, then `PATHINT_THREADS`, then 1.

    Raises:
        ConfigError: If the value is not a positive integer.
    """
    raw = flag if flag is not None else os.environ.get("PATHINT_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"threads: not an integer: {raw!r}") from None
    if threads < 1:
        raise ConfigError(f"threads: must be at least 1, got {threads}")
    return threads


def command_run(args: argparse.Namespace) -> int:
    """Run one experiment and write its result files."""
    try:
        config = load_config(args.config, seed=args.seed)
        threads = resolve_threads(args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    record = run_experiment(config, threads=threads)
    out_dir = Path(args.out if args.out is not None else config.experiment.output)
    write_report(record, out_dir, timing=args.timing, compress=args.compress)
    if record.rows and all(row["status"] == "error" for row in record.rows):
        log.error("Every row of %s failed", config.name)
        return EXIT_NUMERIC
    if record.passed is False:
        for failure in record.acceptance.failures:
            log.error("Acceptance: %s", failure)
        return EXIT_NUMERIC
    return EXIT_OK


def command_schemes() -> int:
    """Print every scheme with its description, required fields and columns."""
    for scheme, cls in EXPERIMENTS.items():
        print(f"{scheme}: {cls.description}")
        print(f"  requires: {', '.join(REQUIRED_FIELDS[scheme])}")
        print(f"  columns:  {', '.join(cls.columns())}")
    return EXIT_OK


def command_check(args: argparse.Namespace) -> int:
    """Run the acceptance checks and summarize."""
    report = run_checks(include_slow=not args.quick)
    for issue in report.issues:
        print(f"FAIL {issue.check}: {issue.message}")
    print(
        f"{len(report.ran)} checks run, {len(report.skipped)} skipped, "
        f"{len(report.issues)} issues"
    )
    return EXIT_OK if report.passed else EXIT_NUMERIC


def main(argv: list[str] | None = None) -> None:
    """Entry point for the CLI application."""
    args = parse_args(argv)
    load_dotenv()

    try:
        level = resolve_log_level(args.log_level, args.verbose, args.quiet)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)
    configure_logging(level)

    try:
        match args.command:
            case "run":
                code = command_run(args)
            case "schemes":
                code = command_schemes()
            case "check":
                code = command_check(args)
    except KeyboardInterrupt:
        log.warning("Interrupted")
        sys.exit(EXIT_INTERRUPTED)
    sys.exit(code)


if __name__ == "__main__":
    main()

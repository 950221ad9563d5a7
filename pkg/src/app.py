import argparse
import logging
import os
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

from src.config import ConfigError, load_metrics_file, load_sweep_config
from src.metrics import export_metrics
from src.services.artifact_service import (
    load_result,
    mirror_artifacts,
    summarize,
    write_csv,
)
from src.services.sweep_service import run_sweep
from src.version import VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2


def configure_logging() -> None:
    if logging.getLogger().handlers:
        return
    level_name = os.getenv("LOG_LEVEL", "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)

    class UTCFormatter(logging.Formatter):
        def formatTime(self, record, datefmt=None):
            dt = datetime.fromtimestamp(record.created, tz=timezone.utc)
            if datefmt:
                return dt.strftime(datefmt)
            return dt.isoformat()

    formatter = UTCFormatter(
        fmt="[%(asctime)s] [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S %z",
    )

    handler = logging.StreamHandler()
    handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.addHandler(handler)


class CommandLineParser(argparse.ArgumentParser):
    """Argument parser whose usage errors are configuration errors."""

    def error(self, message):
        raise ConfigError(f"command line: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = CommandLineParser(
        prog="proto-rmdp",
        description="Online robust MDP learning with transition prototypes.",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a seeded sweep")
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument(
        "--algo",
        action="append",
        dest="algorithms",
        help="algorithm tag; repeat for several",
    )
    run.add_argument("--episodes")
    run.add_argument("--sims")
    run.add_argument("--seed")
    run.add_argument("--delta")
    run.add_argument("--prototypes")
    run.add_argument("--mode")
    run.add_argument("--gap")
    run.add_argument("--early-stop", dest="early_stop")
    run.add_argument("--bonus-scale", dest="ucbvi_bonus_scale")
    run.add_argument("--shared-prototypes", dest="shared_prototypes")
    run.add_argument("--out")

    show = commands.add_parser("summarize", help="summarize a finished sweep")
    show.add_argument("--in", dest="directory", required=True)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    overrides = {
        key: getattr(args, key)
        for key in (
            "episodes",
            "sims",
            "seed",
            "delta",
            "prototypes",
            "mode",
            "gap",
            "early_stop",
            "ucbvi_bonus_scale",
            "shared_prototypes",
            "out",
        )
        if getattr(args, key) is not None
    }
    if args.algorithms:
        overrides["algorithms"] = ",".join(args.algorithms)
    return overrides


def _run(args: argparse.Namespace) -> int:
    config = load_sweep_config(args.config, _overrides(args))
    result = run_sweep(config)
    write_csv(result, config.out)
    mirror_artifacts(config.out, result.config_echo)
    metrics_file = load_metrics_file()
    if metrics_file:
        export_metrics(metrics_file)
    sys.stdout.write(summarize(result))
    return EXIT_OK


def _summarize(args: argparse.Namespace) -> int:
    sys.stdout.write(summarize(load_result(args.directory)))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0 on success, 1 on config errors, 2 otherwise."""
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        if args.command == "run":
            return _run(args)
        return _summarize(args)
    except ConfigError as exc:
        logger.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG_ERROR
    except Exception:
        logger.exception("Sweep failed.")
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``holorenorm <mode> --config run.toml --out runs/x``."""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

import structlog

from .errors import ConfigError, RenormalizationError
from .experiments import ExperimentOrchestrator, write_failure_manifest
from .logging_config import configure_logging
from .models.config import ExperimentConfig, Mode, parse_config
from .settings import load_settings

logger = structlog.get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holorenorm",
        description="Polynomial renormalization of iterated elementary maps of C^2",
    )
    subparsers = parser.add_subparsers(dest="mode", required=True, metavar="mode")
    for mode in Mode:
        sub = subparsers.add_parser(mode.value, help=f"run the {mode.value} experiment")
        sub.add_argument("--config", required=True, help="TOML experiment config")
        sub.add_argument("--out", default=None, help="output directory for tables and manifest")
        sub.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
        sub.add_argument(
            "--tolerance", type=float, default=None, help="override the verification tolerance"
        )
    return parser


def apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Apply the command line flags on top of the file config."""
    if config.mode.value != args.mode:
        raise ConfigError(
            f"config mode '{config.mode.value}' does not match subcommand '{args.mode}'",
            "mode",
            "matches subcommand",
        )
    update = {}
    if args.out is not None:
        update["output_dir"] = args.out
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative", "seed", "ge=0")
        update["seed"] = args.seed
    if args.tolerance is not None:
        if not args.tolerance > 0:
            raise ConfigError("tolerance must be positive", "tolerance", "gt=0")
        update["tolerance"] = config.tolerance.model_copy(update={"verification": args.tolerance})
    return config.model_copy(update=update) if update else config


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return the process exit code.

    0 on success, 2 for config errors, 3 for violated preconditions or
    hypotheses, 4 for numerical diagnostics, 1 for anything else.
    """
    args = build_parser().parse_args(argv)
    settings = load_settings()
    configure_logging(settings.log_level, settings.log_json)
    orchestrator = ExperimentOrchestrator(settings)
    out = args.out or settings.output_dir

    try:
        config = apply_overrides(parse_config(args.config), args)
    except RenormalizationError as e:
        logger.error("config_rejected", error=e.message, type=e.__class__.__name__)
        write_failure_manifest(Path(out), args.mode, e)
        return e.exit_code

    try:
        manifest = orchestrator.run(config)
    except RenormalizationError as e:
        return e.exit_code
    except Exception:
        logger.exception("run_crashed", mode=args.mode)
        return 1
    logger.info("run_succeeded", mode=manifest.mode, files=[f.name for f in manifest.files])
    return 0


if __name__ == "__main__":
    sys.exit(main())

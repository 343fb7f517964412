"""Main entry point for the pabeam CLI."""

import sys
from pathlib import Path

from pabeam.cli import (
    beamform_overrides,
    build_cli_parser,
    parse_depths_mm,
    parse_int_list,
    validate_cli_args,
)
from pabeam.config import BeamformSettings
from pabeam.exceptions import BeamformingError, classify_exception
from pabeam.runner import PipelineRunner
from pabeam.utils import reset_logger, setup_logger


def _log_directory(args) -> Path:
    if args.command in ("report", "experiment"):
        return args.output
    return args.output.parent


def _run_name(args) -> str:
    source = args.config if hasattr(args, "config") else args.rf_file
    return f"{source.stem}_{args.command}"


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand.

    Args:
        argv: Command-line arguments (default: sys.argv[1:])

    Returns:
        Exit status: 0 on success, 1 when an error was reported
    """
    # Parse arguments
    parser = build_cli_parser()
    args = parser.parse_args(argv)

    # Validate arguments
    validation_error = validate_cli_args(args)
    if validation_error:
        parser.error(validation_error)

    logger = setup_logger(_run_name(args), args.log_level, export_path=_log_directory(args))

    try:
        if args.command == "simulate":
            PipelineRunner(logger=logger).simulate(args.config, args.output, seed=args.seed)
            return 0

        settings = BeamformSettings.from_overrides(**beamform_overrides(args))
        runner = PipelineRunner(settings, logger)

        if args.command == "beamform":
            runner.beamform(args.rf_file, args.output, seed=args.seed)
        elif args.command == "report":
            runner.report(
                args.rf_file,
                args.targets,
                args.output,
                profile_depths=parse_depths_mm(args.profile_depths),
            )
        else:
            averaged = runner.experiment(
                args.config,
                args.output,
                parse_int_list(args.seeds),
                profile_depths=parse_depths_mm(args.profile_depths),
            )
            logger.info(f"Experiment complete: {averaged.get_summary()}")
        return 0

    except BeamformingError as e:
        logger.error(f"{e.code}: {e.message}")
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 1
    except Exception as e:
        classified = classify_exception(e)
        logger.error(f"Fatal error [{classified.code}]: {classified.message}")
        logger.debug("Full traceback:", exc_info=True)
        return 1
    finally:
        reset_logger()


def cli() -> None:
    """Execute the synchronous CLI entry point."""
    sys.exit(main())


if __name__ == "__main__":
    cli()

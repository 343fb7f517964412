"""CLI argument parsing for the beamforming toolkit."""

import argparse
from pathlib import Path

from pabeam.beamformers import Method


def _add_beamform_options(parser: argparse.ArgumentParser) -> None:
    """Options shared by beamform, report and experiment."""
    parser.add_argument(
        "--dynamic-range-db",
        type=float,
        default=None,
        help="Display dynamic range in dB (default: 60)",
    )

    parser.add_argument(
        "--subarray-l",
        type=int,
        default=None,
        help="MV subarray length L (default: M/2)",
    )

    parser.add_argument(
        "--temporal-k",
        type=int,
        default=None,
        help="MV temporal averaging half window K (default: 5)",
    )

    parser.add_argument(
        "--loading-delta",
        type=float,
        default=None,
        help="MV diagonal loading factor delta (default: 1/(100 L))",
    )

    parser.add_argument(
        "--sound-speed-scale",
        type=float,
        default=None,
        help="Scale the recorded speed of sound when computing delays (default: 1.0)",
    )

    parser.add_argument(
        "--grid",
        type=str,
        default=None,
        help=(
            "Grid as x_min,x_max,z_min,z_max,dx,dz in mm, written --grid=-20,... when x_min is "
            "negative (default: -20,20,0.1,75,0.1,0.1)"
        ),
    )

    parser.add_argument(
        "--interpolation",
        type=str,
        choices=["linear", "nearest"],
        default=None,
        help="Fractional delay interpolation (default: linear)",
    )

    parser.add_argument(
        "--no-sign-root",
        action="store_true",
        help="Use raw samples instead of the sign-root transform inside MVB-DMAS",
    )

    parser.add_argument(
        "--bandpass",
        action="store_true",
        help="Band-pass DMAS and MVB-DMAS images around twice the center frequency",
    )

    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Threads used for reconstruction (default: CPU count, at most 8)",
    )


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--log-level",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Logging level (default: INFO)",
    )


def build_cli_parser() -> argparse.ArgumentParser:
    """Build CLI argument parser for the pabeam command.

    Returns:
        Configured ArgumentParser instance
    """
    parser = argparse.ArgumentParser(
        description="Photoacoustic beamforming: DAS, DMAS, MV and MVB-DMAS",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  pabeam simulate phantom.cfg --output phantom.rf
  pabeam beamform phantom.rf --method mvb-dmas --output mvb.pgm
  pabeam beamform phantom.rf --method mv --sound-speed-scale 1.05 --output mv.pgm
  pabeam beamform phantom.rf --method mv --grid=-5,5,25,35,0.1,0.1 --output zoom.pgm
  pabeam report phantom.rf --output report/
  pabeam experiment phantom.cfg --seeds 0,1,2,3,4 --output experiment/
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Simulate RF channel data")
    simulate.add_argument("config", type=Path, help="Configuration file (key = value)")
    simulate.add_argument("--output", type=Path, required=True, help="RF file to write")
    simulate.add_argument(
        "--seed", type=int, default=None, help="Noise seed (overrides the configuration)"
    )
    _add_common_options(simulate)

    beamform = subparsers.add_parser("beamform", help="Reconstruct an image from an RF file")
    beamform.add_argument("rf_file", type=Path, help="RF file written by 'simulate'")
    beamform.add_argument(
        "--method",
        type=str,
        default="das",
        help=f"Beamformer: {', '.join(m.value for m in Method)} (default: das)",
    )
    beamform.add_argument(
        "--output", type=Path, required=True, help="Image path (.pgm; .txt/.raw.txt/.image.json alongside)"
    )
    beamform.add_argument("--seed", type=int, default=None, help="Seed recorded with the image")
    _add_beamform_options(beamform)
    _add_common_options(beamform)

    report = subparsers.add_parser("report", help="Compare all methods on an RF file")
    report.add_argument("rf_file", type=Path, help="RF file written by 'simulate'")
    report.add_argument(
        "--targets",
        type=Path,
        default=None,
        help="Targets CSV with x_mm,z_mm (default: <rf_file>.targets.csv)",
    )
    report.add_argument("--output", type=Path, default=Path("report"), help="Output directory")
    report.add_argument(
        "--profile-depths",
        type=str,
        default="30,45",
        help="Comma-separated lateral profile depths in mm (default: 30,45)",
    )
    _add_beamform_options(report)
    _add_common_options(report)

    experiment = subparsers.add_parser("experiment", help="Seed-averaged method comparison")
    experiment.add_argument("config", type=Path, help="Configuration file (key = value)")
    experiment.add_argument(
        "--seeds", type=str, default="0,1,2,3,4", help="Comma-separated seeds (default: 0,1,2,3,4)"
    )
    experiment.add_argument(
        "--output", type=Path, default=Path("experiment"), help="Output directory"
    )
    experiment.add_argument(
        "--profile-depths",
        type=str,
        default="30,45",
        help="Comma-separated lateral profile depths in mm (default: 30,45)",
    )
    _add_beamform_options(experiment)
    _add_common_options(experiment)

    return parser


def parse_int_list(text: str) -> list[int]:
    """Parse ``"0,1,2"`` into integers, ignoring empty entries."""
    return [int(part) for part in text.split(",") if part.strip()]


def parse_depths_mm(text: str) -> tuple[float, ...]:
    """Parse comma-separated millimeter depths into meters."""
    return tuple(float(part) * 1e-3 for part in text.split(",") if part.strip())


def validate_cli_args(args: argparse.Namespace) -> str | None:
    """Validate CLI arguments and return error message if invalid.

    Args:
        args: Parsed command-line arguments

    Returns:
        Error message string if validation fails, None if valid
    """
    # Check input files exist
    if hasattr(args, "config") and not args.config.exists():
        return f"Configuration file not found: {args.config}"

    if hasattr(args, "rf_file") and not args.rf_file.exists():
        return f"RF file not found: {args.rf_file}"

    if getattr(args, "targets", None) and not args.targets.exists():
        return f"Targets file not found: {args.targets}"

    # Validate list arguments
    if hasattr(args, "seeds"):
        try:
            if not parse_int_list(args.seeds):
                return "At least one seed required"
        except ValueError:
            return f"Seeds must be comma-separated integers: {args.seeds}"

    if hasattr(args, "profile_depths"):
        try:
            parse_depths_mm(args.profile_depths)
        except ValueError:
            return f"Profile depths must be comma-separated numbers: {args.profile_depths}"

    if getattr(args, "workers", None) is not None and args.workers < 1:
        return "Workers must be at least 1"

    return None


def beamform_overrides(args: argparse.Namespace) -> dict:
    """Map parsed beamforming flags onto BeamformSettings fields.

    Flags that were not given map to None and keep their defaults.
    """
    return {
        "method": getattr(args, "method", None),
        "dynamic_range_db": args.dynamic_range_db,
        "subarray_length": args.subarray_l,
        "temporal_half_window": args.temporal_k,
        "loading_factor": args.loading_delta,
        "sound_speed_scale": args.sound_speed_scale,
        "grid_mm": args.grid,
        "interpolation": args.interpolation,
        "sign_root": False if args.no_sign_root else None,
        "bandpass": True if args.bandpass else None,
        "max_workers": args.workers,
    }

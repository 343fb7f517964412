"""Pipeline orchestration behind the CLI subcommands."""

import logging
import time
from dataclasses import dataclass
from pathlib import Path

import pydantic

from pabeam.beamformers import Method
from pabeam.config import BeamformSettings, SimulationSettings
from pabeam.exceptions import (
    BeamformingError,
    FormatError,
    MetricError,
    ValidationError,
    format_pydantic_error,
)
from pabeam.formats import (
    read_geometry,
    read_rf,
    read_targets,
    sidecar_path,
    targets_path,
    write_csv,
    write_matrix,
    write_metadata,
    write_pgm,
    write_rf,
    write_targets,
)
from pabeam.imaging import (
    bandpass,
    envelope,
    lateral_profile,
    log_compress,
    reconstruct,
    second_harmonic_band,
)
from pabeam.metrics import RegionSpec, fwhm_mm, peak_sidelobe_db, snr_db
from pabeam.model import ArrayGeometry, BeamformedImage, ImagingGrid, RfFrame
from pabeam.result import (
    METRIC_COLUMNS,
    PROFILE_COLUMNS,
    MetricRow,
    ProfileRow,
    ReportResult,
    average_reports,
)
from pabeam.simulator import report_targets, simulate

# Depth band reconstructed around every report target
REPORT_BAND_HALF_DEPTH = 3e-3
# Lateral window of the per-target profile; neighbouring absorbers sit 8 mm apart
TARGET_WINDOW_HALF_WIDTH = 4e-3
DEFAULT_PROFILE_DEPTHS = (30e-3, 45e-3)
# RF files store float32; header and sidecar agree to this relative precision
HEADER_TOLERANCE = 1e-9


@dataclass
class BeamformOutputs:
    """Files written by a beamform run."""

    image: Path
    matrix: Path
    raw_matrix: Path
    metadata: Path


def _micrometers(depth: float) -> int:
    return int(round(depth * 1e6))


def _with_extension(output: Path, extension: str) -> Path:
    base = output.with_suffix("") if output.suffix == ".pgm" else output
    return base.with_name(base.name + extension)


class PipelineRunner:
    """Runs simulate, beamform, report and experiment pipelines.

    Every output is written atomically; identical inputs give byte-identical
    files.
    """

    def __init__(self, settings: BeamformSettings | None = None, logger: logging.Logger | None = None):
        """Initialize the runner.

        Args:
            settings: Beamforming settings (defaults when omitted)
            logger: Optional logger instance
        """
        self.settings = settings or BeamformSettings()
        self.logger = logger or logging.getLogger(__name__)

    def simulate(self, config_path: Path, output: Path, seed: int | None = None) -> Path:
        """Simulate an RF frame from a configuration file.

        Writes the RF file, its JSON sidecar and the report target list.

        Args:
            config_path: ``key = value`` configuration
            output: RF file to write
            seed: Noise seed overriding the configuration

        Returns:
            Path of the RF file
        """
        sim_settings = SimulationSettings.from_file(config_path, seed=seed)
        return self.simulate_settings(sim_settings, output)

    def simulate_settings(self, sim_settings: SimulationSettings, output: Path) -> Path:
        """Simulate an RF frame from loaded settings (see ``simulate``)."""
        cfg = sim_settings.sim_config()
        self.logger.info(
            f"Simulating {len(cfg.absorbers)} absorbers, {cfg.geometry.n_elements} elements, "
            f"seed {sim_settings.seed}"
        )
        frame = simulate(cfg, seed=sim_settings.seed)

        write_rf(output, frame, cfg.geometry.sound_speed)
        write_metadata(
            sidecar_path(output),
            {
                "geometry": cfg.geometry.model_dump(mode="json"),
                "absorbers": [a.model_dump(mode="json") for a in cfg.absorbers],
                "n_samples": cfg.n_samples,
                "noise_snr_db": cfg.noise_snr_db,
                "noise_reference": cfg.noise_reference,
                "seed": sim_settings.seed,
            },
        )
        write_targets(targets_path(output), report_targets(cfg))
        self.logger.info(f"RF frame written to: {output}")
        self.logger.debug(f"Sidecars written to: {sidecar_path(output)}, {targets_path(output)}")
        return output

    def load(self, rf_path: Path) -> tuple[RfFrame, ArrayGeometry]:
        """Read an RF file and the geometry recorded next to it.

        Raises:
            FormatError: If header and sidecar disagree
        """
        frame, header = read_rf(rf_path)
        geometry = read_geometry(rf_path)
        if geometry.n_elements != header.n_elements:
            raise FormatError(
                f"{rf_path}: header lists {header.n_elements} elements, "
                f"sidecar geometry has {geometry.n_elements}"
            )
        for name in ("sampling_frequency", "sound_speed"):
            recorded, declared = getattr(header, name), getattr(geometry, name)
            if abs(recorded - declared) > HEADER_TOLERANCE * abs(declared):
                raise FormatError(f"{rf_path}: {name} differs between header and sidecar")
        return frame, geometry

    def image(
        self,
        frame: RfFrame,
        geometry: ArrayGeometry,
        method: Method,
        grid: ImagingGrid,
    ) -> BeamformedImage:
        """Raw image of one method, band-passed when configured.

        Args:
            frame: RF channel data
            geometry: Recorded geometry (the sound-speed scale is applied here)
            method: Beamformer
            grid: Pixel grid

        Returns:
            Raw-stage image
        """
        settings = self.settings
        assumed = settings.beamforming_geometry(geometry)
        cfg = settings.mv_config(geometry.n_elements) if method.is_adaptive else None
        raw = reconstruct(
            frame,
            assumed,
            grid,
            method,
            cfg=cfg,
            interpolation=settings.interpolation,
            sign_root=settings.sign_root,
            chunk_size=settings.chunk_size,
            max_workers=settings.max_workers,
        )
        if settings.bandpass and method in (Method.DMAS, Method.MVB_DMAS):
            low, high = second_harmonic_band(assumed)
            raw = bandpass(raw, low, high, assumed.sound_speed)
        return raw

    def beamform(self, rf_path: Path, output: Path, seed: int | None = None) -> BeamformOutputs:
        """Beamform an RF file over the configured grid.

        Writes ``<output>.pgm`` (16-bit image), ``<output>.txt`` (dB matrix),
        ``<output>.raw.txt`` (raw beamformer output) and ``<output>.image.json``.
        The metadata name never collides with the RF file's own ``.json`` sidecar.

        Args:
            rf_path: RF file written by ``simulate``
            output: Output path, with or without the ``.pgm`` extension
            seed: Seed recorded in the metadata

        Returns:
            BeamformOutputs

        Raises:
            ValidationError: If an output would overwrite the RF file or its sidecar
        """
        settings = self.settings
        metadata_path = _with_extension(output, ".image.json")
        inputs = {rf_path.resolve(), sidecar_path(rf_path).resolve()}
        if metadata_path.resolve() in inputs or _with_extension(output, ".pgm").resolve() in inputs:
            raise ValidationError(f"output: {output} would overwrite the input {rf_path}")
        frame, geometry = self.load(rf_path)
        grid = settings.grid()

        start_time = time.time()
        raw = self.image(frame, geometry, settings.method, grid)
        compressed = log_compress(envelope(raw), settings.dynamic_range_db)

        outputs = BeamformOutputs(
            image=write_pgm(_with_extension(output, ".pgm"), compressed),
            matrix=write_matrix(_with_extension(output, ".txt"), compressed.pixels),
            raw_matrix=write_matrix(_with_extension(output, ".raw.txt"), raw.pixels),
            metadata=write_metadata(
                metadata_path,
                {
                    "rf_file": str(rf_path),
                    "settings": settings.model_dump(mode="json"),
                    "grid": grid.model_dump(mode="json"),
                    "seed": seed,
                },
            ),
        )
        self.logger.info(f"{settings.method.label} image finished in {time.time() - start_time:.2f} s")
        self.logger.info(f"Image written to: {outputs.image}")
        return outputs

    def _band_grid(self, depth: float) -> ImagingGrid:
        x_min, x_max, _, _, dx, dz = (value * 1e-3 for value in self.settings.grid_mm)
        z_min = max(depth - REPORT_BAND_HALF_DEPTH, dz)
        return ImagingGrid.from_spacing(x_min, x_max, z_min, depth + REPORT_BAND_HALF_DEPTH, dx, dz)

    def _measure(self, image: BeamformedImage, method: Method, x: float, z: float) -> MetricRow:
        row = MetricRow(method=method, depth_mm=z * 1e3)
        try:
            row.snr_db = snr_db(image, RegionSpec.around_target(x, z))
        except (MetricError, ValidationError) as e:
            self.logger.warning(f"{method.label} at {z * 1e3:.1f} mm: SNR not measured ({e.message})")
        except pydantic.ValidationError as e:
            message = format_pydantic_error(e)
            self.logger.warning(f"{method.label} at {z * 1e3:.1f} mm: SNR not measured ({message})")

        window = (x - TARGET_WINDOW_HALF_WIDTH, x + TARGET_WINDOW_HALF_WIDTH)
        profile = lateral_profile(image, z, x_range=window)
        try:
            row.fwhm_mm = fwhm_mm(profile)
        except MetricError as e:
            self.logger.warning(f"{method.label} at {z * 1e3:.1f} mm: FWHM not measured ({e.message})")
        try:
            row.psl_db = peak_sidelobe_db(profile)
        except MetricError as e:
            self.logger.warning(f"{method.label} at {z * 1e3:.1f} mm: PSL not measured ({e.message})")
        return row

    def evaluate(
        self,
        frame: RfFrame,
        geometry: ArrayGeometry,
        targets: list[tuple[float, float]],
        profile_depths: tuple[float, ...] = DEFAULT_PROFILE_DEPTHS,
        methods: tuple[Method, ...] = tuple(Method),
    ) -> ReportResult:
        """Measure every method at every target and export lateral profiles.

        Each target (and each profile depth) is reconstructed over a depth
        band of the configured grid.

        Args:
            frame: RF channel data
            geometry: Recorded geometry
            targets: ``(x, z)`` targets in meters
            profile_depths: Depths of the exported full-width profiles
            methods: Beamformers to compare

        Returns:
            ReportResult
        """
        result = ReportResult()
        # bands keyed by depth in micrometers
        band_targets: dict[int, list[tuple[float, float]]] = {}
        for x, z in targets:
            band_targets.setdefault(_micrometers(z), []).append((x, z))
        profile_keys = {_micrometers(depth) for depth in profile_depths}

        for key in sorted(set(band_targets) | profile_keys):
            depth = key * 1e-6
            grid = self._band_grid(depth)
            for method in methods:
                detected = envelope(self.image(frame, geometry, method, grid))
                for x, z in band_targets.get(key, []):
                    result.metrics.append(self._measure(detected, method, x, z))
                if key in profile_keys:
                    profile = lateral_profile(detected, depth)
                    result.profiles.extend(
                        ProfileRow(method=method, depth_mm=depth * 1e3, x_mm=x * 1e3, db=db)
                        for x, db in profile.as_pairs()
                    )
            self.logger.info(f"Depth {depth * 1e3:.1f} mm evaluated for {len(methods)} methods")
        return result

    def write_report(self, result: ReportResult, output_dir: Path, prefix: str = "") -> Path:
        """Write ``metrics.csv`` and, when profiles exist, ``profiles.csv``.

        Returns:
            Path of the metrics table
        """
        metrics_file = write_csv(
            output_dir / f"{prefix}metrics.csv",
            METRIC_COLUMNS,
            [row.to_csv_row() for row in result.sorted_metrics()],
        )
        self.logger.info(f"Metrics written to: {metrics_file}")
        if result.profiles:
            profiles_file = write_csv(
                output_dir / f"{prefix}profiles.csv",
                PROFILE_COLUMNS,
                [row.to_csv_row() for row in result.sorted_profiles()],
            )
            self.logger.info(f"Profiles written to: {profiles_file}")
        return metrics_file

    def report(
        self,
        rf_path: Path,
        targets_file: Path | None,
        output_dir: Path,
        profile_depths: tuple[float, ...] = DEFAULT_PROFILE_DEPTHS,
    ) -> ReportResult:
        """Compare all four methods on an RF file.

        Args:
            rf_path: RF file
            targets_file: ``x_mm,z_mm`` CSV (default: the one written by simulate)
            output_dir: Directory receiving metrics.csv and profiles.csv
            profile_depths: Profile depths in meters

        Returns:
            ReportResult
        """
        frame, geometry = self.load(rf_path)
        targets = read_targets(targets_file or targets_path(rf_path))
        self.logger.info(f"Report on {rf_path}: {len(targets)} targets")
        result = self.evaluate(frame, geometry, targets, profile_depths)
        self.write_report(result, output_dir)
        self.logger.info(f"Report complete: {result.get_summary()}")
        return result

    def experiment(
        self,
        config_path: Path,
        output_dir: Path,
        seeds: list[int],
        profile_depths: tuple[float, ...] = DEFAULT_PROFILE_DEPTHS,
    ) -> ReportResult:
        """Seed-averaged comparison on the configured phantom.

        For every seed: simulate, evaluate, write ``seed<N>_metrics.csv``.
        Finally writes ``experiment.csv`` with the averaged table.

        Args:
            config_path: Simulation configuration
            output_dir: Output directory
            seeds: Noise seeds
            profile_depths: Profile depths in meters

        Returns:
            Averaged ReportResult
        """
        if not seeds:
            raise ValidationError("seeds: at least one seed required")

        results = []
        total = len(seeds)
        for i, seed in enumerate(seeds, 1):
            self.logger.info(f"Processing seed {seed} ({i}/{total})")
            sim_settings = SimulationSettings.from_file(config_path, seed=seed)
            rf_path = self.simulate_settings(sim_settings, output_dir / f"seed{seed}.rf")
            frame, geometry = self.load(rf_path)
            try:
                result = self.evaluate(frame, geometry, read_targets(targets_path(rf_path)), profile_depths)
            except BeamformingError as e:
                self.logger.error(f"Seed {seed} failed [{e.code}]: {e.message}")
                raise
            result.seed = seed
            self.write_report(result, output_dir, prefix=f"seed{seed}_")
            results.append(result)

        averaged = average_reports(results)
        experiment_file = write_csv(
            output_dir / "experiment.csv",
            METRIC_COLUMNS,
            [row.to_csv_row() for row in averaged.sorted_metrics()],
        )
        self.logger.info(f"Seed-averaged metrics over {total} seeds written to: {experiment_file}")
        return averaged

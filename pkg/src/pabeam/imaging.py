"""Image assembly and the display chain.

``reconstruct`` applies one beamformer at every grid pixel. Pixels are processed
in independent blocks (optionally on a thread pool); each block writes only its
own slice of the output, so the result does not depend on evaluation order.
The display chain follows: envelope along depth, then log compression.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, hilbert, sosfiltfilt

from pabeam.beamformers import Method, das, dmas, mv, mv_weights, mvb_dmas
from pabeam.delay import Interpolation, align_samples, aligned_context, pixel_delays
from pabeam.exceptions import SolverError, ValidationError
from pabeam.model import (
    ArrayGeometry,
    BeamformedImage,
    ImageStage,
    ImagingGrid,
    MvConfig,
    RfFrame,
    validate_geometry,
)
from pabeam.utils import get_logger

logger = get_logger()

DEFAULT_DYNAMIC_RANGE_DB = 60.0
DEFAULT_CHUNK_SIZE = 256


def _beamform_block(
    samples: np.ndarray,
    delays: np.ndarray,
    method: Method,
    cfg: MvConfig | None,
    interpolation: Interpolation,
    sign_root: bool,
) -> np.ndarray:
    aligned = align_samples(samples, delays, interpolation)
    if method is Method.DAS:
        return das(aligned)
    if method is Method.DMAS:
        return dmas(aligned)

    assert cfg is not None
    context, usable = aligned_context(samples, delays, cfg.temporal_half_window, interpolation)
    if method is Method.MV:
        weights = mv_weights(aligned, context, cfg, usable=usable)
        return mv(aligned, weights, cfg)
    return mvb_dmas(aligned, context, cfg, usable=usable, sign_root=sign_root)


def reconstruct(
    frame: RfFrame,
    g: ArrayGeometry,
    grid: ImagingGrid,
    method: Method | str,
    cfg: MvConfig | None = None,
    interpolation: Interpolation = "linear",
    sign_root: bool = True,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_workers: int = 1,
) -> BeamformedImage:
    """Beamform every pixel of a grid.

    Args:
        frame: RF channel data
        g: Geometry used to compute delays (may assume a different sound speed
            than the one the frame was simulated with)
        grid: Pixel grid
        method: Beamformer
        cfg: MV settings; defaults to L = M/2, K = 5, delta = 1/(100 L)
        interpolation: Fractional delay interpolation
        sign_root: Sign-root correction inside MVB-DMAS
        chunk_size: Pixels per processing block
        max_workers: Threads used to process blocks

    Returns:
        Raw-stage BeamformedImage

    Raises:
        ValidationError: On inconsistent inputs
        SolverError: With pixel coordinates when an MV solve fails
    """
    validate_geometry(g)
    frame.check_geometry(g)
    method = Method.parse(method)
    if method.is_adaptive:
        cfg = cfg or MvConfig.for_aperture(g.n_elements)
        cfg.check_aperture(g.n_elements)

    n_pixels = grid.nx * grid.nz
    x_axis, z_axis = grid.x_axis, grid.z_axis
    output = np.empty(n_pixels)
    samples = frame.samples
    blocks = [(start, min(start + chunk_size, n_pixels)) for start in range(0, n_pixels, chunk_size)]

    def run_block(block: tuple[int, int]) -> None:
        start, stop = block
        flat = np.arange(start, stop)
        iz, ix = np.divmod(flat, grid.nx)
        delays = pixel_delays(g, x_axis[ix], z_axis[iz])
        try:
            output[start:stop] = _beamform_block(samples, delays, method, cfg, interpolation, sign_root)
        except SolverError as e:
            index = start + (e.index or 0)
            row, column = divmod(index, grid.nx)
            raise SolverError(e.message, index=index, pixel=(column, row)) from e
        logger.debug(f"{method.label}: pixels {start}-{stop - 1} of {n_pixels} done")

    logger.info(f"Reconstructing {grid.nz} x {grid.nx} pixels with {method.label}")
    start_time = time.time()
    if max_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            # list() re-raises the first block failure
            list(pool.map(run_block, blocks))
    else:
        for block in blocks:
            run_block(block)
    logger.info(f"{method.label} reconstruction finished in {time.time() - start_time:.2f} s")

    return BeamformedImage(
        pixels=output.reshape(grid.shape),
        stage=ImageStage.RAW,
        grid=grid,
        method=method.label,
    )


def _require_stage(image: BeamformedImage, stage: ImageStage) -> None:
    if image.stage is not stage:
        raise ValidationError(f"stage: expected a {stage.value} image, got {image.stage.value}")


def envelope(image: BeamformedImage) -> BeamformedImage:
    """Magnitude of the analytic signal along depth, column by column.

    Args:
        image: Raw-stage image

    Returns:
        Envelope-stage image
    """
    _require_stage(image, ImageStage.RAW)
    detected = np.abs(hilbert(image.pixels, axis=0))
    return BeamformedImage(
        pixels=detected, stage=ImageStage.ENVELOPE, grid=image.grid, method=image.method
    )


def log_compress(
    image: BeamformedImage, dynamic_range_db: float = DEFAULT_DYNAMIC_RANGE_DB
) -> BeamformedImage:
    """Convert an envelope image to dB relative to its maximum.

    Args:
        image: Envelope-stage image
        dynamic_range_db: Values below -dynamic_range_db are clamped

    Returns:
        Log-compressed image in [-dynamic_range_db, 0]

    Raises:
        ValidationError: For an all-zero image
    """
    _require_stage(image, ImageStage.ENVELOPE)
    if not dynamic_range_db > 0:
        raise ValidationError("dynamic_range_db: must be positive")
    peak = float(image.pixels.max())
    if peak <= 0:
        raise ValidationError("pixels: all-zero image has no reference maximum")
    with np.errstate(divide="ignore"):
        decibels = 20.0 * np.log10(image.pixels / peak)
    return BeamformedImage(
        pixels=np.clip(decibels, -dynamic_range_db, 0.0),
        stage=ImageStage.LOG_COMPRESSED,
        grid=image.grid,
        dynamic_range_db=dynamic_range_db,
        method=image.method,
    )


def bandpass(
    image: BeamformedImage, low_hz: float, high_hz: float, sound_speed: float, order: int = 4
) -> BeamformedImage:
    """Zero-phase Butterworth band-pass along depth.

    The depth axis is treated as one-way travel time, sampled at c / dz.

    Args:
        image: Raw-stage image
        low_hz: Lower band edge in Hz
        high_hz: Upper band edge in Hz
        sound_speed: Speed of sound in m/s
        order: Filter order

    Returns:
        Filtered raw-stage image

    Raises:
        ValidationError: If the band exceeds the grid's Nyquist limit or the
            image has too few rows to filter
    """
    _require_stage(image, ImageStage.RAW)
    if image.grid.nz < 2:
        raise ValidationError("nz: band-pass filtering needs at least two rows")
    sampling_rate = sound_speed / image.grid.dz
    nyquist = sampling_rate / 2.0
    if not 0 < low_hz < high_hz < nyquist:
        raise ValidationError(
            f"dz: band {low_hz / 1e6:.2f}-{high_hz / 1e6:.2f} MHz needs an axial sampling rate above "
            f"{2 * high_hz / 1e6:.2f} MHz; this grid gives {sampling_rate / 1e6:.2f} MHz"
        )
    sos = butter(order, [low_hz, high_hz], btype="bandpass", fs=sampling_rate, output="sos")
    pad = 3 * (2 * len(sos) + 1)
    if image.grid.nz <= pad:
        raise ValidationError(f"nz: band-pass filtering needs more than {pad} rows")
    filtered = sosfiltfilt(sos, image.pixels, axis=0)
    return BeamformedImage(
        pixels=filtered, stage=ImageStage.RAW, grid=image.grid, method=image.method
    )


def second_harmonic_band(g: ArrayGeometry) -> tuple[float, float]:
    """Band around 2 f0 holding the DMAS signal content, in Hz."""
    half_width = g.fractional_bandwidth * g.center_frequency
    return (2 * g.center_frequency - half_width, 2 * g.center_frequency + half_width)


@dataclass(frozen=True)
class LateralProfile:
    """One image row in dB relative to its own maximum.

    Attributes:
        x: Lateral positions in meters
        db: Values in dB, maximum exactly 0
        depth: Depth of the row in meters
    """

    x: np.ndarray
    db: np.ndarray
    depth: float

    def as_pairs(self) -> list[tuple[float, float]]:
        """Return ``(lateral position, dB value)`` pairs."""
        return [(float(x), float(v)) for x, v in zip(self.x, self.db)]


def lateral_profile(
    image: BeamformedImage, depth: float, x_range: tuple[float, float] | None = None
) -> LateralProfile:
    """Extract the row nearest a depth, normalized to its own maximum.

    Args:
        image: Envelope-stage image
        depth: Requested depth in meters
        x_range: Optional ``(x_lo, x_hi)`` lateral window in meters

    Returns:
        LateralProfile

    Raises:
        ValidationError: If the depth lies outside the grid or the row is empty
    """
    _require_stage(image, ImageStage.ENVELOPE)
    row = image.grid.row_index(depth)
    x = image.grid.x_axis
    values = image.pixels[row]
    if x_range is not None:
        keep = (x >= x_range[0]) & (x <= x_range[1])
        x, values = x[keep], values[keep]
    if values.size == 0:
        raise ValidationError("x_range: lateral window contains no pixels")
    peak = float(values.max())
    if peak <= 0:
        raise ValidationError("pixels: profile row is all zero")
    floor = np.finfo(np.float64).tiny
    decibels = 20.0 * np.log10(np.maximum(values, floor) / peak)
    return LateralProfile(x=x.copy(), db=decibels, depth=float(image.grid.z_axis[row]))

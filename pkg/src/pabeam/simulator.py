"""Analytic forward model for photoacoustic RF channel data.

Each absorber is an ideal point source. Element i receives
``pulse(t - r_i / c) * amplitude / r_i`` where the pulse is a Gaussian-modulated
sinusoid at the array's center frequency whose -6 dB spectral width equals
``fractional_bandwidth * center_frequency``. Contributions superpose linearly.
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.signal import gausspulse

from pabeam.exceptions import ValidationError
from pabeam.model import ArrayGeometry, RfFrame, validate_geometry
from pabeam.utils import get_logger

logger = get_logger()

# Spectral level at which the fractional bandwidth is measured
BANDWIDTH_REFERENCE_DB = -6.0
# Envelope level treated as the end of the pulse
PULSE_CUTOFF_DB = -60.0

NoiseReference = Literal["mean_power", "peak"]


class PointAbsorber(BaseModel):
    """Point-like initial-pressure source.

    Attributes:
        x: Lateral position in meters
        z: Depth in meters (> 0)
        amplitude: Dimensionless source strength
    """

    model_config = ConfigDict(frozen=True)

    x: float
    z: float
    amplitude: float = 1.0

    @field_validator("z")
    @classmethod
    def validate_depth(cls, v):
        """Require the absorber to lie in front of the array."""
        if not v > 0:
            raise ValueError("z: absorber must lie in front of the array (z > 0)")
        return v

    @field_validator("x", "amplitude")
    @classmethod
    def validate_finite(cls, v, info):
        """Reject infinities and NaN."""
        if not np.isfinite(v):
            raise ValueError(f"{info.field_name}: must be finite")
        return v


def pulse_half_length(geometry: ArrayGeometry) -> float:
    """Time from the pulse center to its -60 dB envelope cutoff, in seconds."""
    return float(
        gausspulse(
            "cutoff",
            fc=geometry.center_frequency,
            bw=geometry.fractional_bandwidth,
            bwr=BANDWIDTH_REFERENCE_DB,
            tpr=PULSE_CUTOFF_DB,
        )
    )


def _ranges(geometry: ArrayGeometry, absorber: PointAbsorber) -> np.ndarray:
    positions = geometry.positions()
    return np.hypot(positions[:, 0] - absorber.x, positions[:, 1] - absorber.z)


class SimConfig(BaseModel):
    """Forward-simulation settings.

    Attributes:
        absorbers: Point sources, summed in order
        geometry: Receiving array
        n_samples: Samples per channel
        noise_snr_db: Channel SNR of added white noise; None for a noiseless frame
        noise_reference: ``mean_power`` (SNR against the frame's mean square) or
            ``peak`` (noise standard deviation relative to the peak amplitude)
    """

    model_config = ConfigDict(frozen=True)

    absorbers: tuple[PointAbsorber, ...]
    geometry: ArrayGeometry
    n_samples: int = 5000
    noise_snr_db: float | None = None
    noise_reference: NoiseReference = "mean_power"

    @model_validator(mode="after")
    def check_record_length(self) -> "SimConfig":
        """Ensure every arrival plus the pulse tail fits in the record."""
        violation = record_length_violation(self)
        if violation:
            raise ValueError(violation)
        return self


def record_length_violation(cfg: SimConfig) -> str | None:
    """Describe why the record is too short for the configured absorbers.

    Returns:
        ``"n_samples: ..."`` or None when every arrival fits
    """
    if cfg.n_samples < 1:
        return "n_samples: must be positive"
    if not cfg.absorbers:
        return None
    latest = max(float(_ranges(cfg.geometry, a).max()) for a in cfg.absorbers) / cfg.geometry.sound_speed
    last_needed = (latest + pulse_half_length(cfg.geometry)) * cfg.geometry.sampling_frequency
    if last_needed > cfg.n_samples - 1:
        return (
            f"n_samples: {cfg.n_samples} samples cannot hold the latest arrival "
            f"plus pulse tail ({int(np.ceil(last_needed)) + 1} samples needed)"
        )
    return None


def simulate_rf(cfg: SimConfig) -> RfFrame:
    """Generate noiseless RF channel data for the configured absorbers.

    Args:
        cfg: Simulation settings

    Returns:
        RfFrame with one channel per element

    Raises:
        ValidationError: If an arrival does not fit in ``n_samples``
    """
    geometry = validate_geometry(cfg.geometry)
    violation = record_length_violation(cfg)
    if violation:
        raise ValidationError(violation)

    time = np.arange(cfg.n_samples) / geometry.sampling_frequency
    channels = np.zeros((geometry.n_elements, cfg.n_samples))

    for absorber in cfg.absorbers:
        ranges = _ranges(geometry, absorber)
        arrivals = ranges / geometry.sound_speed
        pulse = gausspulse(
            time[None, :] - arrivals[:, None],
            fc=geometry.center_frequency,
            bw=geometry.fractional_bandwidth,
            bwr=BANDWIDTH_REFERENCE_DB,
        )
        channels += pulse * (absorber.amplitude / ranges)[:, None]

    if cfg.absorbers:
        logger.debug(
            f"Simulated {len(cfg.absorbers)} absorbers on {geometry.n_elements} channels "
            f"x {cfg.n_samples} samples"
        )
    return RfFrame(samples=channels, sampling_frequency=geometry.sampling_frequency)


def add_noise(
    frame: RfFrame,
    snr_db: float | None,
    seed: int,
    reference: NoiseReference = "mean_power",
) -> RfFrame:
    """Add zero-mean white Gaussian noise at a given SNR.

    Args:
        frame: Channel data
        snr_db: Target SNR in dB; None or +inf returns the frame unchanged
        seed: Seed for ``numpy.random.default_rng``
        reference: ``mean_power`` or ``peak`` (see SimConfig)

    Returns:
        Noisy RfFrame, identical for identical inputs
    """
    if snr_db is None or np.isposinf(snr_db):
        return frame

    samples = frame.samples.astype(np.float64)
    if reference == "mean_power":
        noise_std = np.sqrt(np.mean(samples**2) / 10.0 ** (snr_db / 10.0))
    elif reference == "peak":
        noise_std = np.max(np.abs(samples)) / 10.0 ** (snr_db / 20.0)
    else:
        raise ValidationError(f"noise_reference: unknown reference '{reference}'")

    rng = np.random.default_rng(seed)
    noisy = samples + rng.normal(0.0, noise_std, size=samples.shape)
    return RfFrame(samples=noisy, sampling_frequency=frame.sampling_frequency)


def simulate(cfg: SimConfig, seed: int = 0) -> RfFrame:
    """Simulate a frame and add the configured noise.

    Args:
        cfg: Simulation settings
        seed: Noise seed

    Returns:
        RfFrame
    """
    frame = simulate_rf(cfg)
    return add_noise(frame, cfg.noise_snr_db, seed, cfg.noise_reference)


def standard_phantom(
    geometry: ArrayGeometry | None = None,
    lateral_positions: tuple[float, ...] = (-8e-3, 0.0, 8e-3),
    n_samples: int = 5000,
    noise_snr_db: float | None = 50.0,
) -> SimConfig:
    """Thirty point absorbers: three per depth, every 5 mm from 25 to 70 mm.

    Args:
        geometry: Receiving array (128 elements at 5 MHz by default)
        lateral_positions: Lateral positions used at every depth, in meters
        n_samples: Samples per channel
        noise_snr_db: Channel SNR of added noise

    Returns:
        SimConfig for the phantom
    """
    depths = [(25 + 5 * row) * 1e-3 for row in range(10)]
    absorbers = tuple(PointAbsorber(x=x, z=z) for z in depths for x in lateral_positions)
    return SimConfig(
        absorbers=absorbers,
        geometry=geometry or ArrayGeometry.linear(),
        n_samples=n_samples,
        noise_snr_db=noise_snr_db,
    )


def report_targets(cfg: SimConfig) -> list[tuple[float, float]]:
    """The absorber closest to the array axis at every distinct depth.

    Returns:
        ``(x, z)`` pairs in meters, sorted by depth
    """
    by_depth: dict[float, PointAbsorber] = {}
    for absorber in cfg.absorbers:
        current = by_depth.get(absorber.z)
        if current is None or abs(absorber.x) < abs(current.x):
            by_depth[absorber.z] = absorber
    return [(by_depth[z].x, z) for z in sorted(by_depth)]

"""Configuration models for simulation and beamforming runs.

Defines SimulationSettings (loaded from flat ``key = value`` files with ``#``
comments) and BeamformSettings (built from CLI flags), with validation that
names the offending field in every error.
"""

import os
from pathlib import Path
from typing import Literal

import pydantic
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pabeam.beamformers import Method
from pabeam.exceptions import FileError, FormatError, ValidationError, format_pydantic_error
from pabeam.model import (
    DEFAULT_FRACTIONAL_BANDWIDTH,
    DEFAULT_PITCH,
    ArrayGeometry,
    ImagingGrid,
    MvConfig,
)
from pabeam.simulator import NoiseReference, PointAbsorber, SimConfig, standard_phantom

# x_min, x_max, z_min, z_max, dx, dz in millimeters
DEFAULT_GRID_MM = (-20.0, 20.0, 0.1, 75.0, 0.1, 0.1)
# Pixel blocks are independent; results do not depend on the thread count
MAX_DEFAULT_WORKERS = 8


def default_workers() -> int:
    """Threads used when none are configured: the CPU count, capped."""
    return max(1, min(MAX_DEFAULT_WORKERS, os.cpu_count() or 1))


def _validated(cls, values: dict):
    try:
        return cls(**values)
    except pydantic.ValidationError as e:
        raise ValidationError(format_pydantic_error(e)) from e


class SimulationSettings(BaseModel):
    """Settings of a ``simulate`` run.

    Attributes:
        n_elements: Number of array elements
        center_frequency: Center frequency in Hz
        sampling_frequency: Sampling rate in Hz
        sound_speed: Speed of sound in m/s
        pitch: Element spacing in meters (default: 40 mm / 127)
        fractional_bandwidth: -6 dB fractional bandwidth (default: 0.77)
        n_samples: Samples per channel (default: 5000)
        noise_snr_db: Channel SNR in dB, or None for no noise (default: 50)
        noise_reference: 'mean_power' or 'peak' (default: 'mean_power')
        seed: Noise seed (default: 0)
        phantom: 'standard' for the 30-absorber phantom
        absorbers: Explicit point absorbers, used when no phantom is named
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Geometry
    n_elements: int
    center_frequency: float
    sampling_frequency: float
    sound_speed: float
    pitch: float = DEFAULT_PITCH
    fractional_bandwidth: float = DEFAULT_FRACTIONAL_BANDWIDTH

    # Acquisition
    n_samples: int = 5000
    noise_snr_db: float | None = 50.0
    noise_reference: NoiseReference = "mean_power"
    seed: int = 0

    # Sources
    phantom: Literal["standard"] | None = None
    absorbers: tuple[PointAbsorber, ...] = Field(default_factory=tuple)

    @field_validator("noise_snr_db", mode="before")
    @classmethod
    def parse_noise(cls, v):
        """Accept 'none' (any case) or an empty value as no noise.

        Args:
            v: Raw value

        Returns:
            None or the value unchanged
        """
        if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none", "inf")):
            return None
        return v

    @field_validator("absorbers", mode="before")
    @classmethod
    def parse_absorbers(cls, v):
        """Parse absorbers from ``x z amplitude; x z amplitude`` text.

        Args:
            v: String or sequence of absorbers

        Returns:
            Sequence of absorber mappings

        Raises:
            ValueError: If an entry does not hold two or three numbers
        """
        if not isinstance(v, str):
            return v
        parsed = []
        for entry in (part.strip() for part in v.split(";")):
            if not entry:
                continue
            numbers = entry.replace(",", " ").split()
            if len(numbers) not in (2, 3):
                raise ValueError(f"absorbers: entry '{entry}' must be 'x z [amplitude]'")
            try:
                values = [float(n) for n in numbers]
            except ValueError:
                raise ValueError(f"absorbers: entry '{entry}' is not numeric")
            absorber = {"x": values[0], "z": values[1]}
            if len(values) == 3:
                absorber["amplitude"] = values[2]
            parsed.append(absorber)
        return parsed

    @model_validator(mode="after")
    def check_sources(self) -> "SimulationSettings":
        """Require exactly one source description."""
        if self.phantom is None and not self.absorbers:
            raise ValueError("absorbers: provide 'absorbers' or 'phantom = standard'")
        if self.phantom is not None and self.absorbers:
            raise ValueError("phantom: cannot be combined with explicit absorbers")
        return self

    @classmethod
    def from_file(cls, path: Path, **overrides) -> "SimulationSettings":
        """Load settings from a ``key = value`` file with optional overrides.

        Args:
            path: Configuration file
            **overrides: Values taking precedence over the file (None ignored)

        Returns:
            SimulationSettings

        Raises:
            FileError: If the file does not exist
            FormatError: If a line has a key without a value
            ValidationError: Naming every missing or invalid field
        """
        if not path.exists():
            raise FileError(f"Configuration file not found: {path}")

        raw = dotenv_values(path, interpolate=False)
        config_dict = {}
        for key, value in raw.items():
            if value is None:
                raise FormatError(f"{path}: '{key}' has no value (expected 'key = value')")
            config_dict[key.strip().lower()] = value.strip()

        filtered_overrides = {k: v for k, v in overrides.items() if v is not None}
        config_dict.update(filtered_overrides)

        return _validated(cls, config_dict)

    def geometry(self) -> ArrayGeometry:
        """Build the receiving array."""
        try:
            return ArrayGeometry.linear(
                n_elements=self.n_elements,
                pitch=self.pitch,
                center_frequency=self.center_frequency,
                fractional_bandwidth=self.fractional_bandwidth,
                sampling_frequency=self.sampling_frequency,
                sound_speed=self.sound_speed,
            )
        except pydantic.ValidationError as e:
            raise ValidationError(format_pydantic_error(e)) from e

    def sim_config(self) -> SimConfig:
        """Build the forward-simulation configuration.

        Raises:
            ValidationError: If the record is too short for the absorbers
        """
        geometry = self.geometry()
        try:
            if self.phantom == "standard":
                base = standard_phantom(
                    geometry=geometry, n_samples=self.n_samples, noise_snr_db=self.noise_snr_db
                )
                return base.model_copy(update={"noise_reference": self.noise_reference})
            return SimConfig(
                absorbers=self.absorbers,
                geometry=geometry,
                n_samples=self.n_samples,
                noise_snr_db=self.noise_snr_db,
                noise_reference=self.noise_reference,
            )
        except pydantic.ValidationError as e:
            raise ValidationError(format_pydantic_error(e)) from e


class BeamformSettings(BaseModel):
    """Settings of a beamforming run.

    Attributes:
        method: Beamformer (default: DAS)
        dynamic_range_db: Display dynamic range (default: 60)
        subarray_length: MV subarray length L (default: M/2)
        temporal_half_window: MV temporal half window K (default: 5)
        loading_factor: MV diagonal loading delta (default: 1/(100 L))
        sound_speed_scale: Factor applied to the recorded speed of sound
        grid_mm: ``x_min, x_max, z_min, z_max, dx, dz`` in millimeters
        interpolation: 'linear' or 'nearest'
        sign_root: Sign-root correction inside MVB-DMAS
        bandpass: Band-pass DMAS/MVB-DMAS images around 2 f0
        max_workers: Threads used by the pixel loop (default: CPU count, at most 8)
        chunk_size: Pixels per processing block
    """

    model_config = ConfigDict(frozen=True)

    method: Method = Method.DAS
    dynamic_range_db: float = 60.0
    subarray_length: int | None = None
    temporal_half_window: int = 5
    loading_factor: float | None = None
    sound_speed_scale: float = 1.0
    grid_mm: tuple[float, float, float, float, float, float] = DEFAULT_GRID_MM
    interpolation: Literal["linear", "nearest"] = "linear"
    sign_root: bool = True
    bandpass: bool = False
    max_workers: int = Field(default_factory=default_workers)
    chunk_size: int = 256

    @field_validator("method", mode="before")
    @classmethod
    def parse_method(cls, v):
        """Accept method names in any case, with '-' or '_'."""
        try:
            return Method.parse(v)
        except ValidationError as e:
            raise ValueError(e.message)

    @field_validator("grid_mm", mode="before")
    @classmethod
    def parse_grid(cls, v):
        """Parse a comma-separated grid specification.

        Raises:
            ValueError: Unless exactly six numbers are given
        """
        if isinstance(v, str):
            parts = [p.strip() for p in v.split(",") if p.strip()]
            if len(parts) != 6:
                raise ValueError("grid_mm: expected x_min,x_max,z_min,z_max,dx,dz")
            try:
                return tuple(float(p) for p in parts)
            except ValueError:
                raise ValueError(f"grid_mm: '{v}' is not numeric")
        return v

    @field_validator("dynamic_range_db", "sound_speed_scale")
    @classmethod
    def validate_positive(cls, v, info):
        """Require positive values."""
        if not v > 0:
            raise ValueError(f"{info.field_name}: must be positive")
        return v

    @field_validator("max_workers", "chunk_size")
    @classmethod
    def validate_count(cls, v, info):
        """Require at least one."""
        if v < 1:
            raise ValueError(f"{info.field_name}: must be at least 1")
        return v

    @model_validator(mode="after")
    def check_grid(self) -> "BeamformSettings":
        """Validate the grid specification eagerly."""
        try:
            self.grid()
        except pydantic.ValidationError as e:
            raise ValueError(f"grid_mm: {format_pydantic_error(e)}")
        return self

    @classmethod
    def from_overrides(cls, **overrides) -> "BeamformSettings":
        """Build settings from keyword values, ignoring None.

        Raises:
            ValidationError: Naming every invalid field
        """
        return _validated(cls, {k: v for k, v in overrides.items() if v is not None})

    def grid(self) -> ImagingGrid:
        """Pixel grid in meters."""
        x_min, x_max, z_min, z_max, dx, dz = (value * 1e-3 for value in self.grid_mm)
        return ImagingGrid.from_spacing(x_min, x_max, z_min, z_max, dx, dz)

    def mv_config(self, n_elements: int) -> MvConfig:
        """MV settings for an aperture of n_elements.

        Raises:
            ValidationError: If L exceeds M/2 or a value is invalid
        """
        try:
            return MvConfig.for_aperture(
                n_elements,
                subarray_length=self.subarray_length,
                temporal_half_window=self.temporal_half_window,
                loading_factor=self.loading_factor,
            )
        except pydantic.ValidationError as e:
            raise ValidationError(format_pydantic_error(e)) from e

    def beamforming_geometry(self, geometry: ArrayGeometry) -> ArrayGeometry:
        """Geometry with the assumed speed of sound scaled."""
        if self.sound_speed_scale == 1.0:
            return geometry
        return geometry.with_sound_speed(geometry.sound_speed * self.sound_speed_scale)

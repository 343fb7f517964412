"""Domain types shared by every stage of the beamforming pipeline.

Defines the transducer geometry, the imaging grid, RF channel frames, delay
tables, minimum-variance settings and beamformed images. All models are frozen
pydantic models; arrays held by them are copied and marked read-only, so a
constructed value can be shared between workers without locking.
"""

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from pabeam.exceptions import ValidationError

# Spacing tolerance for a uniformly sampled linear array
UNIFORM_SPACING_TOLERANCE = 1e-12

# 128 elements spanning the 40 mm lateral imaging region
DEFAULT_N_ELEMENTS = 128
DEFAULT_PITCH = 40e-3 / 127
DEFAULT_CENTER_FREQUENCY = 5e6
DEFAULT_FRACTIONAL_BANDWIDTH = 0.77
DEFAULT_SAMPLING_FREQUENCY = 50e6
DEFAULT_SOUND_SPEED = 1540.0


def _readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


class ArrayGeometry(BaseModel):
    """Linear receive array and acquisition parameters.

    Attributes:
        element_x: Lateral element positions in meters, strictly increasing
        element_z: Elevation positions in meters (all zero for a linear array)
        pitch: Element spacing in meters
        center_frequency: Transducer center frequency in Hz
        fractional_bandwidth: -6 dB fractional bandwidth (0-1]
        sampling_frequency: RF sampling rate in Hz
        sound_speed: Assumed speed of sound in m/s
    """

    model_config = ConfigDict(frozen=True)

    element_x: tuple[float, ...]
    element_z: tuple[float, ...]
    pitch: float
    center_frequency: float
    fractional_bandwidth: float
    sampling_frequency: float
    sound_speed: float

    @model_validator(mode="after")
    def check_invariants(self) -> "ArrayGeometry":
        """Reject geometries that violate any invariant.

        Raises:
            ValueError: Naming the first violated invariant
        """
        violation = geometry_violation(self)
        if violation:
            raise ValueError(violation)
        return self

    @classmethod
    def linear(
        cls,
        n_elements: int = DEFAULT_N_ELEMENTS,
        pitch: float = DEFAULT_PITCH,
        center_frequency: float = DEFAULT_CENTER_FREQUENCY,
        fractional_bandwidth: float = DEFAULT_FRACTIONAL_BANDWIDTH,
        sampling_frequency: float = DEFAULT_SAMPLING_FREQUENCY,
        sound_speed: float = DEFAULT_SOUND_SPEED,
    ) -> "ArrayGeometry":
        """Build a linear array centered on the lateral origin.

        Args:
            n_elements: Number of elements M
            pitch: Element spacing in meters
            center_frequency: Center frequency in Hz
            fractional_bandwidth: -6 dB fractional bandwidth
            sampling_frequency: Sampling rate in Hz
            sound_speed: Speed of sound in m/s

        Returns:
            Validated ArrayGeometry
        """
        offsets = np.arange(n_elements, dtype=float) - (n_elements - 1) / 2.0
        return cls(
            element_x=tuple(float(x) for x in offsets * pitch),
            element_z=tuple(0.0 for _ in range(n_elements)),
            pitch=pitch,
            center_frequency=center_frequency,
            fractional_bandwidth=fractional_bandwidth,
            sampling_frequency=sampling_frequency,
            sound_speed=sound_speed,
        )

    @property
    def n_elements(self) -> int:
        """Number of array elements M."""
        return len(self.element_x)

    @property
    def wavelength(self) -> float:
        """Wavelength at the center frequency in meters."""
        return self.sound_speed / self.center_frequency

    def positions(self) -> np.ndarray:
        """Return element positions as an (M, 2) array of (x, z) meters."""
        return np.column_stack(
            [np.asarray(self.element_x, dtype=float), np.asarray(self.element_z, dtype=float)]
        )

    def with_sound_speed(self, sound_speed: float) -> "ArrayGeometry":
        """Return a copy assuming a different speed of sound.

        Args:
            sound_speed: New speed of sound in m/s

        Returns:
            Validated ArrayGeometry
        """
        return type(self).model_validate({**self.model_dump(), "sound_speed": sound_speed})


def geometry_violation(g: ArrayGeometry) -> str | None:
    """Return a description of the first violated geometry invariant.

    Args:
        g: Geometry to check (possibly built without validation)

    Returns:
        ``"<invariant>: <reason>"`` or None when every invariant holds
    """
    n_elements = len(g.element_x)
    if n_elements < 2:
        return f"n_elements: at least 2 elements required, got {n_elements}"
    if len(g.element_z) != n_elements:
        return f"element_z: expected {n_elements} entries, got {len(g.element_z)}"

    element_x = np.asarray(g.element_x, dtype=float)
    scalars = {
        "pitch": g.pitch,
        "center_frequency": g.center_frequency,
        "fractional_bandwidth": g.fractional_bandwidth,
        "sampling_frequency": g.sampling_frequency,
        "sound_speed": g.sound_speed,
    }
    if not np.all(np.isfinite(element_x)) or not np.all(np.isfinite(g.element_z)):
        return "element_x: positions must be finite"
    for name, value in scalars.items():
        if not np.isfinite(value):
            return f"{name}: must be finite"

    spacing = np.diff(element_x)
    if np.any(spacing <= 0):
        return "element_x: positions must be strictly increasing"
    if np.max(np.abs(spacing - spacing[0])) > UNIFORM_SPACING_TOLERANCE:
        return "element_x: positions must be uniformly spaced"
    if abs(spacing[0] - g.pitch) > UNIFORM_SPACING_TOLERANCE:
        return f"pitch: {g.pitch} m does not match element spacing {spacing[0]} m"
    if g.center_frequency <= 0:
        return "center_frequency: must be positive"
    if not 0 < g.fractional_bandwidth <= 1:
        return "fractional_bandwidth: must lie in (0, 1]"
    if g.sampling_frequency < 2 * g.center_frequency:
        return (
            f"sampling_frequency: {g.sampling_frequency:g} Hz is below the Nyquist "
            f"rate 2 x center_frequency = {2 * g.center_frequency:g} Hz"
        )
    if g.sound_speed <= 0:
        return "sound_speed: must be positive"
    return None


def validate_geometry(g: ArrayGeometry) -> ArrayGeometry:
    """Check every geometry invariant.

    Args:
        g: Geometry to check

    Returns:
        The same geometry, unchanged

    Raises:
        ValidationError: Naming the first violated invariant
    """
    violation = geometry_violation(g)
    if violation:
        raise ValidationError(violation)
    return g


class ImagingGrid(BaseModel):
    """Rectangular pixel grid in front of the array.

    Both axes include their end points; a single-sample axis sits at its minimum.
    """

    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    z_min: float
    z_max: float
    nx: int
    nz: int

    @model_validator(mode="after")
    def check_invariants(self) -> "ImagingGrid":
        """Validate extents and pixel counts."""
        if not self.x_min < self.x_max:
            raise ValueError("x_min: must be smaller than x_max")
        if not self.z_min < self.z_max:
            raise ValueError("z_min: must be smaller than z_max")
        if self.z_min <= 0:
            raise ValueError("z_min: grid must lie in front of the transducer (z_min > 0)")
        if self.nx < 1:
            raise ValueError("nx: at least one lateral pixel required")
        if self.nz < 1:
            raise ValueError("nz: at least one axial pixel required")
        return self

    @classmethod
    def from_spacing(
        cls, x_min: float, x_max: float, z_min: float, z_max: float, dx: float, dz: float
    ) -> "ImagingGrid":
        """Build a grid from extents and pixel spacing.

        Args:
            x_min: Left edge in meters
            x_max: Right edge in meters
            z_min: Shallowest depth in meters
            z_max: Deepest depth in meters
            dx: Lateral spacing in meters
            dz: Axial spacing in meters

        Returns:
            ImagingGrid whose spacing matches dx, dz as closely as the extents allow
        """
        if dx <= 0 or dz <= 0:
            raise ValueError("dx: pixel spacing must be positive")
        nx = int(round((x_max - x_min) / dx)) + 1
        nz = int(round((z_max - z_min) / dz)) + 1
        return cls(x_min=x_min, x_max=x_max, z_min=z_min, z_max=z_max, nx=nx, nz=nz)

    @property
    def shape(self) -> tuple[int, int]:
        """Image shape (nz, nx)."""
        return (self.nz, self.nx)

    @property
    def x_axis(self) -> np.ndarray:
        """Lateral pixel positions in meters."""
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def z_axis(self) -> np.ndarray:
        """Axial pixel positions in meters."""
        return np.linspace(self.z_min, self.z_max, self.nz)

    @property
    def dz(self) -> float:
        """Axial pixel spacing in meters (0 for a single row)."""
        return (self.z_max - self.z_min) / (self.nz - 1) if self.nz > 1 else 0.0

    def row_index(self, depth: float) -> int:
        """Index of the row nearest to a depth.

        Raises:
            ValidationError: If the depth lies outside the grid
        """
        if not self.z_min <= depth <= self.z_max:
            raise ValidationError(
                f"depth: {depth * 1e3:.3f} mm lies outside the grid "
                f"[{self.z_min * 1e3:.3f}, {self.z_max * 1e3:.3f}] mm"
            )
        return int(np.argmin(np.abs(self.z_axis - depth)))


class RfFrame(BaseModel):
    """Per-element sampled channel data.

    Samples are stored as float32 so frames round-trip bit-exactly through
    the RF file format.

    Attributes:
        samples: (M, N) channel-major amplitudes in arbitrary linear units
        sampling_frequency: Sampling rate in Hz
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray
    sampling_frequency: float

    @field_validator("samples", mode="before")
    @classmethod
    def parse_samples(cls, v):
        """Copy samples into a read-only float32 matrix."""
        array = np.array(v, dtype=np.float32, copy=True)
        if array.ndim != 2:
            raise ValueError(f"samples: expected an (M, N) matrix, got {array.ndim} dimensions")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError("samples: frame must not be empty")
        if not np.all(np.isfinite(array)):
            raise ValueError("samples: all values must be finite")
        return _readonly(array)

    @field_validator("sampling_frequency")
    @classmethod
    def validate_sampling_frequency(cls, v):
        """Require a positive sampling rate."""
        if not v > 0:
            raise ValueError("sampling_frequency: must be positive")
        return v

    @property
    def n_elements(self) -> int:
        """Number of channels M."""
        return int(self.samples.shape[0])

    @property
    def n_samples(self) -> int:
        """Number of time samples N."""
        return int(self.samples.shape[1])

    def check_geometry(self, g: ArrayGeometry) -> None:
        """Ensure this frame was produced by the given geometry.

        Raises:
            ValidationError: On channel count or sampling rate mismatch
        """
        if self.n_elements != g.n_elements:
            raise ValidationError(
                f"n_elements: frame has {self.n_elements} channels, geometry has {g.n_elements}"
            )
        if self.sampling_frequency != g.sampling_frequency:
            raise ValidationError(
                f"sampling_frequency: frame sampled at {self.sampling_frequency:g} Hz, "
                f"geometry expects {g.sampling_frequency:g} Hz"
            )


class DelayTable(BaseModel):
    """Fractional one-way sample delays for every pixel and element.

    Attributes:
        delays: (nz, nx, M) delays in samples
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    delays: np.ndarray

    @field_validator("delays", mode="before")
    @classmethod
    def parse_delays(cls, v):
        """Validate and freeze the delay array."""
        array = np.array(v, dtype=np.float64, copy=True)
        if array.ndim != 3:
            raise ValueError(f"delays: expected (nz, nx, M), got {array.ndim} dimensions")
        if not np.all(np.isfinite(array)):
            raise ValueError("delays: all delays must be finite")
        if np.any(array < 0):
            raise ValueError("delays: all delays must be nonnegative")
        if array.shape[0] > 1 and np.any(np.diff(array, axis=0) < 0):
            raise ValueError("delays: must be nondecreasing with pixel depth")
        return _readonly(array)

    @property
    def shape(self) -> tuple[int, int, int]:
        """(nz, nx, M)."""
        nz, nx, m = self.delays.shape
        return (nz, nx, m)


class MvConfig(BaseModel):
    """Minimum-variance covariance estimation settings.

    Attributes:
        subarray_length: Subarray length L (1 <= L <= M/2)
        temporal_half_window: Temporal averaging half window K in samples
        loading_factor: Diagonal loading factor delta; epsilon = delta * trace(R)
    """

    model_config = ConfigDict(frozen=True)

    subarray_length: int
    temporal_half_window: int = 5
    loading_factor: float

    @field_validator("subarray_length")
    @classmethod
    def validate_subarray_length(cls, v):
        """Require at least one element per subarray."""
        if v < 1:
            raise ValueError("subarray_length: must be at least 1")
        return v

    @field_validator("temporal_half_window")
    @classmethod
    def validate_temporal_half_window(cls, v):
        """Require a nonnegative half window."""
        if v < 0:
            raise ValueError("temporal_half_window: must be nonnegative")
        return v

    @field_validator("loading_factor")
    @classmethod
    def validate_loading_factor(cls, v):
        """Require strictly positive, finite loading."""
        if not (np.isfinite(v) and v > 0):
            raise ValueError("loading_factor: must be positive and finite")
        return v

    @classmethod
    def for_aperture(
        cls,
        n_elements: int,
        subarray_length: int | None = None,
        temporal_half_window: int = 5,
        loading_factor: float | None = None,
    ) -> "MvConfig":
        """Build settings with the standard defaults for an M-element aperture.

        Defaults are L = M/2 and delta = 1 / (100 L).

        Args:
            n_elements: Aperture size M
            subarray_length: Override for L
            temporal_half_window: K
            loading_factor: Override for delta

        Returns:
            Validated MvConfig
        """
        length = subarray_length if subarray_length is not None else max(1, n_elements // 2)
        loading = loading_factor if loading_factor is not None else 1.0 / (100.0 * length)
        config = cls(
            subarray_length=length,
            temporal_half_window=temporal_half_window,
            loading_factor=loading,
        )
        config.check_aperture(n_elements)
        return config

    def check_aperture(self, n_elements: int) -> None:
        """Ensure the subarray fits the aperture.

        Raises:
            ValidationError: If L exceeds M/2
        """
        if 2 * self.subarray_length > n_elements:
            raise ValidationError(
                f"subarray_length: L={self.subarray_length} exceeds M/2 = {n_elements / 2:g}"
            )

    def n_subarrays(self, n_elements: int) -> int:
        """Number of overlapping subarrays M - L + 1."""
        return n_elements - self.subarray_length + 1


class ImageStage(str, Enum):
    """Processing stage of a beamformed image."""

    RAW = "raw"
    ENVELOPE = "envelope"
    LOG_COMPRESSED = "log_compressed"


class BeamformedImage(BaseModel):
    """Scalar pixel grid at one stage of the display chain.

    Attributes:
        pixels: (nz, nx) values; signed when raw, nonnegative as envelope,
            within [-dynamic_range_db, 0] when log compressed
        stage: Processing stage
        grid: Grid the pixels are sampled on
        dynamic_range_db: Display range, only meaningful when log compressed
        method: Name of the beamformer that produced the image
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pixels: np.ndarray
    stage: ImageStage
    grid: ImagingGrid
    dynamic_range_db: float | None = None
    method: str | None = None

    @field_validator("pixels", mode="before")
    @classmethod
    def parse_pixels(cls, v):
        """Copy pixels into a read-only float64 matrix."""
        array = np.array(v, dtype=np.float64, copy=True)
        if array.ndim != 2:
            raise ValueError(f"pixels: expected an (nz, nx) matrix, got {array.ndim} dimensions")
        return _readonly(array)

    @model_validator(mode="after")
    def check_stage(self) -> "BeamformedImage":
        """Enforce shape and the per-stage value range."""
        if self.pixels.shape != self.grid.shape:
            raise ValueError(
                f"pixels: shape {self.pixels.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixels: all values must be finite")
        if self.stage is ImageStage.ENVELOPE and np.any(self.pixels < 0):
            raise ValueError("pixels: envelope images must be nonnegative")
        if self.stage is ImageStage.LOG_COMPRESSED:
            if self.dynamic_range_db is None or not self.dynamic_range_db > 0:
                raise ValueError("dynamic_range_db: required and positive for log-compressed images")
            if np.any(self.pixels > 0) or np.any(self.pixels < -self.dynamic_range_db):
                raise ValueError("pixels: log-compressed values must lie in [-dynamic_range_db, 0]")
        return self

"""Image-quality metrics: SNR, -6 dB mainlobe width and peak sidelobe level.

All functions are pure; the SNR is scale invariant and the profile metrics are
computed on dB profiles produced by ``imaging.lateral_profile``.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from pabeam.exceptions import MetricError, ValidationError
from pabeam.imaging import LateralProfile
from pabeam.model import BeamformedImage, ImageStage, ImagingGrid

MAINLOBE_DROP_DB = 6.0


class Box(BaseModel):
    """Axis-aligned rectangle given by center and half widths, in meters."""

    model_config = ConfigDict(frozen=True)

    x: float
    z: float
    half_width_x: float
    half_width_z: float

    @field_validator("half_width_x", "half_width_z")
    @classmethod
    def validate_half_width(cls, v, info):
        """Require positive half widths."""
        if not v > 0:
            raise ValueError(f"{info.field_name}: must be positive")
        return v

    def overlaps(self, other: "Box") -> bool:
        """Whether the two rectangles share any area."""
        return (
            abs(self.x - other.x) < self.half_width_x + other.half_width_x
            and abs(self.z - other.z) < self.half_width_z + other.half_width_z
        )

    def inside(self, grid: ImagingGrid) -> bool:
        """Whether the rectangle lies within the grid extents."""
        return (
            self.x - self.half_width_x >= grid.x_min
            and self.x + self.half_width_x <= grid.x_max
            and self.z - self.half_width_z >= grid.z_min
            and self.z + self.half_width_z <= grid.z_max
        )

    def mask(self, grid: ImagingGrid) -> np.ndarray:
        """Boolean (nz, nx) mask of pixels inside the rectangle."""
        lateral = np.abs(grid.x_axis - self.x) <= self.half_width_x
        axial = np.abs(grid.z_axis - self.z) <= self.half_width_z
        return axial[:, None] & lateral[None, :]


class RegionSpec(BaseModel):
    """Signal and noise regions for an SNR measurement.

    Attributes:
        signal_box: Region holding the target peak
        noise_box: Target-free background region
    """

    model_config = ConfigDict(frozen=True)

    signal_box: Box
    noise_box: Box

    @model_validator(mode="after")
    def check_disjoint(self) -> "RegionSpec":
        """Reject overlapping regions."""
        if self.signal_box.overlaps(self.noise_box):
            raise ValueError("noise_box: must not overlap signal_box")
        return self

    @classmethod
    def around_target(
        cls,
        x: float,
        z: float,
        signal_half_width: float = 1e-3,
        noise_center_x: float = 17e-3,
        noise_half_widths: tuple[float, float] = (2.5e-3, 2e-3),
    ) -> "RegionSpec":
        """Default regions for a point target.

        The signal box spans +-1 mm around the target. The noise box is a
        5 mm x 4 mm region at the same depth, centered |noise_center_x| off
        axis on the side opposite the target so near-broadside clutter and
        off-axis absorbers stay out of it.
        """
        side = -1.0 if x > 0 else 1.0
        return cls(
            signal_box=Box(x=x, z=z, half_width_x=signal_half_width, half_width_z=signal_half_width),
            noise_box=Box(
                x=side * abs(noise_center_x),
                z=z,
                half_width_x=noise_half_widths[0],
                half_width_z=noise_half_widths[1],
            ),
        )

    def check_within(self, grid: ImagingGrid) -> None:
        """Ensure both boxes lie inside the grid.

        Raises:
            ValidationError: Naming the box that leaves the grid
        """
        for name, box in (("signal_box", self.signal_box), ("noise_box", self.noise_box)):
            if not box.inside(grid):
                raise ValidationError(f"{name}: lies outside the imaging grid")


def snr_db(image: BeamformedImage, spec: RegionSpec) -> float:
    """Peak envelope in the signal box over the noise box's standard deviation.

    Args:
        image: Envelope-stage image
        spec: Signal and noise regions

    Returns:
        20 log10(peak / std) in dB

    Raises:
        MetricError: If a box holds no pixels or the ratio is undefined
    """
    if image.stage is not ImageStage.ENVELOPE:
        raise ValidationError(f"stage: expected an envelope image, got {image.stage.value}")
    spec.check_within(image.grid)

    signal = image.pixels[spec.signal_box.mask(image.grid)]
    noise = image.pixels[spec.noise_box.mask(image.grid)]
    if signal.size == 0:
        raise MetricError("signal_box: contains no pixels")
    if noise.size == 0:
        raise MetricError("noise_box: contains no pixels")

    peak = float(signal.max())
    spread = float(noise.std())
    if spread == 0 or peak == 0:
        raise MetricError("snr: undefined for a zero peak or constant noise region")
    return 20.0 * np.log10(peak / spread)


def _check_profile(profile: LateralProfile) -> tuple[np.ndarray, np.ndarray, int]:
    x = np.asarray(profile.x, dtype=np.float64)
    db = np.asarray(profile.db, dtype=np.float64)
    if x.size != db.size or x.size == 0:
        raise MetricError("profile: positions and values must be non-empty and equally long")
    return x, db, int(np.argmax(db))


def _crossing(x: np.ndarray, db: np.ndarray, peak: int, threshold: float, step: int) -> float:
    index = peak
    while 0 <= index + step < db.size:
        outer = index + step
        if db[outer] <= threshold:
            # db[index] > threshold >= db[outer]
            fraction = (db[index] - threshold) / (db[index] - db[outer])
            return float(x[index] + fraction * (x[outer] - x[index]))
        index = outer
    raise MetricError(f"profile: never falls {MAINLOBE_DROP_DB:g} dB below its peak")


def fwhm_mm(profile: LateralProfile) -> float:
    """Width of the -6 dB mainlobe around the global maximum.

    Crossings are located by linear interpolation between samples.

    Args:
        profile: Lateral profile in dB

    Returns:
        Width in millimeters

    Raises:
        MetricError: If the profile stays above -6 dB on either side
    """
    x, db, peak = _check_profile(profile)
    threshold = db[peak] - MAINLOBE_DROP_DB
    left = _crossing(x, db, peak, threshold, -1)
    right = _crossing(x, db, peak, threshold, +1)
    return (right - left) * 1e3


def response_center(profile: LateralProfile) -> float:
    """Lateral center of the region lying within 6 dB of the peak.

    The center is the midpoint of the outermost -6 dB crossings, so a split
    or doubled mainlobe is localized at its middle rather than at one lobe.

    Args:
        profile: Lateral profile in dB

    Returns:
        Lateral position in meters

    Raises:
        MetricError: If the profile stays above -6 dB on either side
    """
    x, db, peak = _check_profile(profile)
    threshold = db[peak] - MAINLOBE_DROP_DB
    above = np.flatnonzero(db > threshold)
    left = _crossing(x, db, int(above[0]), threshold, -1)
    right = _crossing(x, db, int(above[-1]), threshold, +1)
    return 0.5 * (left + right)


def mainlobe_bounds(profile: LateralProfile) -> tuple[int, int]:
    """Indices of the first local minima on either side of the peak."""
    _, db, peak = _check_profile(profile)
    left = peak
    while left > 0 and db[left - 1] < db[left]:
        left -= 1
    right = peak
    while right < db.size - 1 and db[right + 1] < db[right]:
        right += 1
    return left, right


def peak_sidelobe_db(profile: LateralProfile) -> float:
    """Highest profile value outside the mainlobe.

    Args:
        profile: Lateral profile in dB

    Returns:
        Peak sidelobe level in the profile's dB scale

    Raises:
        MetricError: If nothing lies outside the mainlobe
    """
    _, db, _ = _check_profile(profile)
    left, right = mainlobe_bounds(profile)
    outside = np.concatenate([db[:left], db[right + 1 :]])
    if outside.size == 0:
        raise MetricError("profile: no samples outside the mainlobe")
    return float(outside.max())

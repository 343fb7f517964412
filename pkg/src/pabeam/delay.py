"""One-way propagation delays and delay-aligned channel snapshots.

Photoacoustic sources emit on their own, so a pixel's delay to element i is the
pixel-to-element distance divided by the speed of sound, expressed in samples.
Alignment reads every channel at its own fractional delay, interpolating
between the two bracketing samples; delays outside the record contribute 0.
"""

from typing import Literal

import numpy as np

from pabeam.exceptions import ValidationError
from pabeam.model import ArrayGeometry, DelayTable, ImagingGrid, RfFrame, validate_geometry

Interpolation = Literal["linear", "nearest"]


def pixel_delays(g: ArrayGeometry, x, z) -> np.ndarray:
    """Fractional sample delays from pixels at (x, z) to every element.

    Args:
        g: Array geometry
        x: Lateral pixel positions in meters (any shape)
        z: Pixel depths in meters, broadcastable against x

    Returns:
        (..., M) delays in samples
    """
    positions = g.positions()
    x = np.asarray(x, dtype=np.float64)[..., None]
    z = np.asarray(z, dtype=np.float64)[..., None]
    distance = np.hypot(x - positions[:, 0], z - positions[:, 1])
    return distance / g.sound_speed * g.sampling_frequency


def build_delay_table(g: ArrayGeometry, grid: ImagingGrid) -> DelayTable:
    """Compute fractional sample delays from every pixel to every element.

    Args:
        g: Array geometry (sound speed and sampling rate set the scale)
        grid: Pixel grid

    Returns:
        DelayTable of shape (nz, nx, M)
    """
    validate_geometry(g)
    return DelayTable(delays=pixel_delays(g, grid.x_axis[None, :], grid.z_axis[:, None]))


def align_samples(
    samples: np.ndarray, delays: np.ndarray, interpolation: Interpolation = "linear"
) -> np.ndarray:
    """Read each channel at its delay.

    Args:
        samples: (M, N) channel data
        delays: (..., M) fractional delays in samples, one per channel
        interpolation: ``"linear"`` between bracketing samples or ``"nearest"``

    Returns:
        (..., M) float64 aligned amplitudes; out-of-range delays give 0
    """
    samples = np.asarray(samples)
    delays = np.asarray(delays, dtype=np.float64)
    n_elements, n_samples = samples.shape
    if delays.shape[-1] != n_elements:
        raise ValidationError(
            f"n_elements: delays cover {delays.shape[-1]} channels, frame has {n_elements}"
        )

    channels = np.arange(n_elements)
    in_range = (delays >= 0) & (delays <= n_samples - 1)

    if interpolation == "nearest":
        index = np.clip(np.rint(delays).astype(np.intp), 0, n_samples - 1)
        values = samples[channels, index].astype(np.float64)
    elif interpolation == "linear":
        lower = np.floor(delays)
        fraction = delays - lower
        i0 = np.clip(lower.astype(np.intp), 0, n_samples - 1)
        i1 = np.clip(i0 + 1, 0, n_samples - 1)
        values = samples[channels, i0] * (1.0 - fraction) + samples[channels, i1] * fraction
    else:
        raise ValidationError(f"interpolation: unknown mode '{interpolation}'")

    return np.where(in_range, values, 0.0)


def aligned_context(
    samples: np.ndarray,
    delays: np.ndarray,
    half_window: int,
    interpolation: Interpolation = "linear",
) -> tuple[np.ndarray, np.ndarray]:
    """Aligned snapshots at the 2K+1 time indices around each focal sample.

    A snapshot at offset n is usable only if every channel's shifted delay
    stays inside the record; the central snapshot is always usable. Callers
    average over usable snapshots only, so the window clamps at frame edges.

    Args:
        samples: (M, N) channel data
        delays: (..., M) delays of the focal samples
        half_window: K
        interpolation: Interpolation mode

    Returns:
        ``(context, usable)`` with shapes (..., 2K+1, M) and (..., 2K+1)
    """
    delays = np.asarray(delays, dtype=np.float64)
    n_samples = np.asarray(samples).shape[1]
    offsets = np.arange(-half_window, half_window + 1, dtype=np.float64)

    shifted = delays[..., None, :] + offsets[:, None]
    context = align_samples(samples, shifted, interpolation)

    earliest = delays.min(axis=-1)[..., None] + offsets
    latest = delays.max(axis=-1)[..., None] + offsets
    usable = (earliest >= 0) & (latest <= n_samples - 1)
    usable[..., half_window] = True
    return context, usable


def _pixel_delays(frame: RfFrame, table: DelayTable, pixel: tuple[int, int]) -> np.ndarray:
    ix, iz = pixel
    nz, nx, n_elements = table.shape
    if not (0 <= ix < nx and 0 <= iz < nz):
        raise ValidationError(f"pixel: ({ix}, {iz}) lies outside the {nx} x {nz} table")
    if n_elements != frame.n_elements:
        raise ValidationError(
            f"n_elements: delay table has {n_elements} elements, frame has {frame.n_elements}"
        )
    return table.delays[iz, ix]


def extract_aligned_samples(
    frame: RfFrame,
    table: DelayTable,
    pixel: tuple[int, int],
    interpolation: Interpolation = "linear",
) -> np.ndarray:
    """Return x_i(k - delta_i) for every element at one pixel.

    Args:
        frame: RF channel data
        table: Delay table built from the same geometry
        pixel: ``(ix, iz)`` lateral and axial pixel index
        interpolation: Interpolation mode

    Returns:
        Vector of M aligned amplitudes
    """
    return align_samples(frame.samples, _pixel_delays(frame, table, pixel), interpolation)


def extract_temporal_context(
    frame: RfFrame,
    table: DelayTable,
    pixel: tuple[int, int],
    half_window: int,
    interpolation: Interpolation = "linear",
) -> tuple[np.ndarray, np.ndarray]:
    """Aligned snapshots around one pixel's focal sample.

    Returns:
        ``(context, usable)`` with shapes (2K+1, M) and (2K+1,)
    """
    delays = _pixel_delays(frame, table, pixel)
    return aligned_context(frame.samples, delays, half_window, interpolation)

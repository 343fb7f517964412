"""File formats: RF frames, JSON sidecars, images and CSV tables.

RF file layout (little endian, no padding):

    magic "PARF" | version u16 | M u32 | N u32 | fs f64 | c f64 | M*N float32

Samples are stored channel-major. Every writer goes through
``utils.atomic_write_bytes``.
"""

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from pabeam.exceptions import FileError, FormatError
from pabeam.model import ArrayGeometry, BeamformedImage, ImageStage, RfFrame
from pabeam.utils import atomic_write_bytes, atomic_write_text

RF_MAGIC = b"PARF"
RF_VERSION = 1
RF_HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u2"),
        ("n_elements", "<u4"),
        ("n_samples", "<u4"),
        ("sampling_frequency", "<f8"),
        ("sound_speed", "<f8"),
    ]
)
PGM_MAX_LEVEL = 65535


@dataclass(frozen=True)
class RfHeader:
    """Fixed header fields of an RF file."""

    version: int
    n_elements: int
    n_samples: int
    sampling_frequency: float
    sound_speed: float


def _read_bytes(path: Path) -> bytes:
    if not path.exists():
        raise FileError(f"File not found: {path}")
    try:
        return path.read_bytes()
    except OSError as e:
        raise FileError(f"Failed to read {path}: {e}") from e


def write_rf(path: Path, frame: RfFrame, sound_speed: float) -> Path:
    """Write an RF frame.

    Args:
        path: Destination file
        frame: Channel data
        sound_speed: Speed of sound stored in the header

    Returns:
        The destination path
    """
    header = np.zeros(1, dtype=RF_HEADER)
    header["magic"] = RF_MAGIC
    header["version"] = RF_VERSION
    header["n_elements"] = frame.n_elements
    header["n_samples"] = frame.n_samples
    header["sampling_frequency"] = frame.sampling_frequency
    header["sound_speed"] = sound_speed
    payload = header.tobytes() + np.ascontiguousarray(frame.samples, dtype="<f4").tobytes()
    return atomic_write_bytes(path, payload)


def read_rf(path: Path) -> tuple[RfFrame, RfHeader]:
    """Read an RF frame written by ``write_rf``.

    Args:
        path: RF file

    Returns:
        ``(frame, header)``

    Raises:
        FileError: If the file cannot be read
        FormatError: On bad magic, unsupported version or truncated payload
    """
    raw = _read_bytes(path)
    if len(raw) < RF_HEADER.itemsize:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")

    fields = np.frombuffer(raw, dtype=RF_HEADER, count=1)[0]
    if bytes(fields["magic"]) != RF_MAGIC:
        raise FormatError(f"{path}: not an RF file (bad magic {bytes(fields['magic'])!r})")
    if int(fields["version"]) != RF_VERSION:
        raise FormatError(f"{path}: unsupported format version {int(fields['version'])}")

    header = RfHeader(
        version=int(fields["version"]),
        n_elements=int(fields["n_elements"]),
        n_samples=int(fields["n_samples"]),
        sampling_frequency=float(fields["sampling_frequency"]),
        sound_speed=float(fields["sound_speed"]),
    )
    expected = RF_HEADER.itemsize + header.n_elements * header.n_samples * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")

    samples = np.frombuffer(raw, dtype="<f4", offset=RF_HEADER.itemsize)
    frame = RfFrame(
        samples=samples.reshape(header.n_elements, header.n_samples),
        sampling_frequency=header.sampling_frequency,
    )
    return frame, header


def sidecar_path(path: Path) -> Path:
    """JSON metadata file next to an output."""
    return path.with_suffix(".json")


def targets_path(path: Path) -> Path:
    """Target list written next to a simulated RF file."""
    return path.with_suffix(".targets.csv")


def write_metadata(path: Path, metadata: dict) -> Path:
    """Write a JSON record with sorted keys (byte-stable for equal input)."""
    return atomic_write_text(path, json.dumps(metadata, indent=4, sort_keys=True) + "\n")


def read_metadata(path: Path) -> dict:
    """Load a JSON record.

    Raises:
        FileError: If the file is missing
        FormatError: If the JSON is malformed
    """
    try:
        return json.loads(_read_bytes(path).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: malformed metadata ({e})") from e


def read_geometry(rf_path: Path) -> ArrayGeometry:
    """Load the geometry recorded in an RF file's sidecar.

    Raises:
        FileError: If the sidecar is missing
        FormatError: If it holds no geometry record
    """
    metadata = read_metadata(sidecar_path(rf_path))
    if "geometry" not in metadata:
        raise FormatError(f"{sidecar_path(rf_path)}: missing 'geometry' record")
    return ArrayGeometry.model_validate(metadata["geometry"])


def write_pgm(path: Path, image: BeamformedImage) -> Path:
    """Write a log-compressed image as a 16-bit binary PGM.

    [-dynamic_range_db, 0] dB maps linearly to [0, 65535]; row 0 is the
    shallowest depth.
    """
    if image.stage is not ImageStage.LOG_COMPRESSED or image.dynamic_range_db is None:
        raise FormatError("PGM output requires a log-compressed image")
    dynamic_range = image.dynamic_range_db
    levels = np.rint((image.pixels + dynamic_range) / dynamic_range * PGM_MAX_LEVEL)
    nz, nx = image.pixels.shape
    header = f"P5\n{nx} {nz}\n{PGM_MAX_LEVEL}\n".encode("ascii")
    return atomic_write_bytes(path, header + levels.astype(">u2").tobytes())


def write_matrix(path: Path, pixels: np.ndarray) -> Path:
    """Write a matrix as whitespace-separated text, one image row per line."""
    buffer = io.StringIO()
    np.savetxt(buffer, np.atleast_2d(pixels), fmt="%.17g")
    return atomic_write_text(path, buffer.getvalue())


def read_matrix(path: Path) -> np.ndarray:
    """Read a matrix written by ``write_matrix``."""
    return np.atleast_2d(np.loadtxt(io.StringIO(_read_bytes(path).decode("utf-8")), ndmin=2))


def write_csv(path: Path, columns: list[str], rows: list[list]) -> Path:
    """Write a CSV table with a header row."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return atomic_write_text(path, buffer.getvalue())


def write_targets(path: Path, targets: list[tuple[float, float]]) -> Path:
    """Write ``(x, z)`` targets in meters as an ``x_mm,z_mm`` CSV."""
    rows = [[f"{x * 1e3:.6f}", f"{z * 1e3:.6f}"] for x, z in targets]
    return write_csv(path, ["x_mm", "z_mm"], rows)


def read_targets(path: Path) -> list[tuple[float, float]]:
    """Read an ``x_mm,z_mm`` target CSV.

    Returns:
        ``(x, z)`` pairs in meters

    Raises:
        FormatError: On missing columns or non-numeric entries
    """
    text = _read_bytes(path).decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"x_mm", "z_mm"} <= set(reader.fieldnames):
        raise FormatError(f"{path}: expected columns x_mm,z_mm")
    targets = []
    for line_number, row in enumerate(reader, start=2):
        try:
            targets.append((float(row["x_mm"]) * 1e-3, float(row["z_mm"]) * 1e-3))
        except (TypeError, ValueError) as e:
            raise FormatError(f"{path}:{line_number}: malformed target ({e})") from e
    if not targets:
        raise FormatError(f"{path}: no targets listed")
    return targets

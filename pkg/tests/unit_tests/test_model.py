"""Domain type tests."""

import numpy as np
import pydantic
import pytest

from pabeam.exceptions import ValidationError
from pabeam.model import (
    DEFAULT_PITCH,
    ArrayGeometry,
    BeamformedImage,
    DelayTable,
    ImageStage,
    ImagingGrid,
    MvConfig,
    RfFrame,
    validate_geometry,
)


class TestArrayGeometry:
    """Test array geometry construction and invariants."""

    def test_default_array_spans_40_mm(self):
        """Test the default array has 128 elements over 40 mm."""
        g = ArrayGeometry.linear()
        assert g.n_elements == 128
        assert g.element_x[-1] - g.element_x[0] == pytest.approx(40e-3)
        assert g.pitch == pytest.approx(DEFAULT_PITCH)

    def test_array_is_centered(self, small_geometry):
        """Test element positions are symmetric around x = 0."""
        x = np.asarray(small_geometry.element_x)
        assert np.allclose(x, -x[::-1])
        assert all(z == 0.0 for z in small_geometry.element_z)

    def test_wavelength(self, array_geometry):
        """Test wavelength is c / f0."""
        assert array_geometry.wavelength == pytest.approx(0.308e-3)

    def test_positions_shape(self, small_geometry):
        """Test positions returns (M, 2)."""
        assert small_geometry.positions().shape == (16, 2)

    def test_single_element_rejected(self):
        """Test fewer than two elements is rejected."""
        with pytest.raises(pydantic.ValidationError, match="n_elements"):
            ArrayGeometry.linear(n_elements=1)

    def test_undersampled_rejected(self):
        """Test sampling below 2 f0 is rejected."""
        with pytest.raises(pydantic.ValidationError, match="sampling_frequency"):
            ArrayGeometry.linear(n_elements=8, sampling_frequency=8e6)

    def test_bandwidth_range(self):
        """Test fractional bandwidth outside (0, 1] is rejected."""
        with pytest.raises(pydantic.ValidationError, match="fractional_bandwidth"):
            ArrayGeometry.linear(n_elements=8, fractional_bandwidth=1.5)

    def test_nonuniform_spacing_rejected(self):
        """Test irregular element spacing is rejected."""
        with pytest.raises(pydantic.ValidationError, match="element_x"):
            ArrayGeometry(
                element_x=(0.0, 1e-3, 3e-3),
                element_z=(0.0, 0.0, 0.0),
                pitch=1e-3,
                center_frequency=5e6,
                fractional_bandwidth=0.77,
                sampling_frequency=50e6,
                sound_speed=1540.0,
            )

    def test_with_sound_speed(self, small_geometry):
        """Test sound speed replacement keeps everything else."""
        scaled = small_geometry.with_sound_speed(1617.0)
        assert scaled.sound_speed == 1617.0
        assert scaled.element_x == small_geometry.element_x

    def test_validate_geometry_raises_toolkit_error(self, small_geometry):
        """Test validate_geometry reports the violated invariant."""
        broken = small_geometry.model_construct(**{**small_geometry.model_dump(), "sound_speed": -1.0})
        with pytest.raises(ValidationError, match="sound_speed"):
            validate_geometry(broken)
        assert validate_geometry(small_geometry) is small_geometry


class TestImagingGrid:
    """Test imaging grid construction."""

    def test_from_spacing_default_region(self):
        """Test the 40 x 75 mm region at 0.1 mm spacing."""
        grid = ImagingGrid.from_spacing(-20e-3, 20e-3, 0.1e-3, 75e-3, 0.1e-3, 0.1e-3)
        assert grid.nx == 401
        assert grid.nz == 750
        assert grid.shape == (750, 401)
        assert grid.dz == pytest.approx(0.1e-3)

    def test_axes_include_end_points(self, point_grid):
        """Test both axes include their extents."""
        assert point_grid.x_axis[0] == pytest.approx(-1e-3)
        assert point_grid.x_axis[-1] == pytest.approx(1e-3)
        assert point_grid.z_axis[-1] == pytest.approx(11e-3)

    def test_grid_behind_array_rejected(self):
        """Test z_min <= 0 is rejected."""
        with pytest.raises(pydantic.ValidationError, match="z_min"):
            ImagingGrid(x_min=-1e-3, x_max=1e-3, z_min=0.0, z_max=1e-3, nx=3, nz=3)

    def test_row_index(self, point_grid):
        """Test the nearest row is found and outside depths raise."""
        assert point_grid.z_axis[point_grid.row_index(10.01e-3)] == pytest.approx(10e-3)
        with pytest.raises(ValidationError, match="depth"):
            point_grid.row_index(20e-3)


class TestRfFrame:
    """Test RF frames."""

    def test_samples_are_read_only_float32(self):
        """Test samples are copied to a frozen float32 matrix."""
        source = np.ones((2, 5))
        frame = RfFrame(samples=source, sampling_frequency=50e6)
        source[0, 0] = 7.0
        assert frame.samples.dtype == np.float32
        assert frame.samples[0, 0] == 1.0
        with pytest.raises(ValueError):
            frame.samples[0, 0] = 2.0

    def test_non_finite_rejected(self):
        """Test NaN samples are rejected."""
        with pytest.raises(pydantic.ValidationError, match="finite"):
            RfFrame(samples=[[0.0, np.nan]], sampling_frequency=50e6)

    def test_check_geometry(self, point_frame, array_geometry):
        """Test channel count mismatch is reported."""
        with pytest.raises(ValidationError, match="n_elements"):
            point_frame.check_geometry(array_geometry)


class TestDelayTable:
    """Test delay tables."""

    def test_negative_delays_rejected(self):
        """Test negative delays are rejected."""
        with pytest.raises(pydantic.ValidationError, match="nonnegative"):
            DelayTable(delays=-np.ones((1, 1, 2)))

    def test_decreasing_with_depth_rejected(self):
        """Test delays must not decrease with depth."""
        delays = np.array([[[2.0, 2.0]], [[1.0, 1.0]]])
        with pytest.raises(pydantic.ValidationError, match="nondecreasing"):
            DelayTable(delays=delays)


class TestMvConfig:
    """Test minimum-variance settings."""

    def test_defaults_for_128_elements(self):
        """Test L = M/2 and delta = 1/(100 L)."""
        cfg = MvConfig.for_aperture(128)
        assert cfg.subarray_length == 64
        assert cfg.temporal_half_window == 5
        assert cfg.loading_factor == pytest.approx(1 / 6400)
        assert cfg.n_subarrays(128) == 65

    def test_subarray_longer_than_half_aperture(self):
        """Test L > M/2 is rejected."""
        with pytest.raises(ValidationError, match="subarray_length"):
            MvConfig.for_aperture(16, subarray_length=9)

    def test_zero_loading_rejected(self):
        """Test delta must be positive."""
        with pytest.raises(pydantic.ValidationError, match="loading_factor"):
            MvConfig(subarray_length=4, loading_factor=0.0)


class TestBeamformedImage:
    """Test per-stage image invariants."""

    def test_shape_must_match_grid(self, point_grid):
        """Test mismatched pixel shape is rejected."""
        with pytest.raises(pydantic.ValidationError, match="shape"):
            BeamformedImage(pixels=np.zeros((2, 2)), stage=ImageStage.RAW, grid=point_grid)

    def test_negative_envelope_rejected(self, point_grid):
        """Test envelope images must be nonnegative."""
        pixels = -np.ones(point_grid.shape)
        with pytest.raises(pydantic.ValidationError, match="nonnegative"):
            BeamformedImage(pixels=pixels, stage=ImageStage.ENVELOPE, grid=point_grid)

    def test_log_values_within_range(self, point_grid):
        """Test log-compressed values must lie in [-DR, 0]."""
        pixels = np.full(point_grid.shape, -70.0)
        with pytest.raises(pydantic.ValidationError, match="dynamic_range_db"):
            BeamformedImage(
                pixels=pixels,
                stage=ImageStage.LOG_COMPRESSED,
                grid=point_grid,
                dynamic_range_db=60.0,
            )

"""Forward simulator tests."""

import numpy as np
import pydantic
import pytest

from pabeam.exceptions import ValidationError
from pabeam.model import RfFrame
from pabeam.simulator import (
    PointAbsorber,
    SimConfig,
    add_noise,
    pulse_half_length,
    report_targets,
    simulate,
    simulate_rf,
    standard_phantom,
)


def _config(geometry, absorbers, n_samples=1000, **kwargs):
    return SimConfig(absorbers=tuple(absorbers), geometry=geometry, n_samples=n_samples, **kwargs)


class TestPointAbsorber:
    """Test absorber validation."""

    def test_behind_array_rejected(self):
        """Test z <= 0 is rejected."""
        with pytest.raises(pydantic.ValidationError, match="z"):
            PointAbsorber(x=0.0, z=0.0)

    def test_default_amplitude(self):
        """Test amplitude defaults to 1."""
        assert PointAbsorber(x=0.0, z=1e-3).amplitude == 1.0


class TestSimulateRf:
    """Test noiseless channel data."""

    def test_frame_shape(self, point_frame):
        """Test one channel per element and the configured length."""
        assert point_frame.samples.shape == (16, 1000)
        assert point_frame.sampling_frequency == 50e6

    def test_arrival_time(self, small_geometry, point_frame):
        """Test each channel peaks at its one-way travel time."""
        ranges = np.hypot(np.asarray(small_geometry.element_x), 10e-3)
        expected = ranges / small_geometry.sound_speed * small_geometry.sampling_frequency
        peaks = np.argmax(np.abs(point_frame.samples), axis=1)
        assert np.all(np.abs(peaks - expected) <= 1.0)

    def test_amplitude_scales_linearly(self, small_geometry):
        """Test doubling the amplitude doubles the channel data."""
        single = simulate_rf(_config(small_geometry, [PointAbsorber(x=0.0, z=10e-3)]))
        double = simulate_rf(_config(small_geometry, [PointAbsorber(x=0.0, z=10e-3, amplitude=2.0)]))
        assert np.allclose(double.samples, 2 * single.samples, rtol=1e-6, atol=1e-9)

    def test_superposition(self, small_geometry):
        """Test contributions of several absorbers add up."""
        first = PointAbsorber(x=-1e-3, z=8e-3)
        second = PointAbsorber(x=1e-3, z=12e-3)
        both = simulate_rf(_config(small_geometry, [first, second]))
        separate = simulate_rf(_config(small_geometry, [first])).samples.astype(float) + simulate_rf(
            _config(small_geometry, [second])
        ).samples.astype(float)
        assert np.allclose(both.samples, separate, rtol=1e-5, atol=1e-4)

    def test_mirrored_absorber_reverses_channels(self, small_geometry):
        """Test an absorber mirrored about the array axis gives channel-reversed data."""
        right = simulate_rf(_config(small_geometry, [PointAbsorber(x=2e-3, z=10e-3)])).samples
        left = simulate_rf(_config(small_geometry, [PointAbsorber(x=-2e-3, z=10e-3)])).samples
        assert np.allclose(left, right[::-1], rtol=1e-6, atol=1e-6 * np.abs(right).max())

    def test_spreading_loss(self, small_geometry):
        """Test a deeper absorber arrives weaker by 1/r."""
        near = simulate_rf(_config(small_geometry, [PointAbsorber(x=0.0, z=5e-3)]))
        far = simulate_rf(_config(small_geometry, [PointAbsorber(x=0.0, z=10e-3)]))
        ratio = np.abs(far.samples).max() / np.abs(near.samples).max()
        assert ratio == pytest.approx(0.5, rel=0.1)

    def test_record_too_short(self, small_geometry):
        """Test arrivals beyond the record are rejected."""
        with pytest.raises(pydantic.ValidationError, match="n_samples"):
            _config(small_geometry, [PointAbsorber(x=0.0, z=10e-3)], n_samples=100)

    def test_empty_phantom(self, small_geometry):
        """Test no absorbers gives a silent frame."""
        frame = simulate_rf(_config(small_geometry, [], n_samples=50))
        assert not frame.samples.any()

    def test_pulse_half_length(self, array_geometry):
        """Test the pulse lasts well under a microsecond at 5 MHz."""
        assert 0 < pulse_half_length(array_geometry) < 1e-6


class TestNoise:
    """Test additive channel noise."""

    def test_noise_calibration(self, small_geometry):
        """Test 50 dB mean-power noise measures 50 +- 0.5 dB."""
        cfg = _config(
            small_geometry,
            [PointAbsorber(x=x, z=z) for x in (-2e-3, 0.0, 2e-3) for z in (10e-3, 30e-3, 50e-3)],
            n_samples=8000,
        )
        clean = simulate_rf(cfg)
        assert clean.samples.size >= 10**5
        noisy = add_noise(clean, 50.0, seed=0)
        signal = clean.samples.astype(float)
        noise = noisy.samples.astype(float) - signal
        measured = 10 * np.log10(np.mean(signal**2) / np.mean(noise**2))
        assert measured == pytest.approx(50.0, abs=0.5)

    def test_peak_reference(self, small_geometry):
        """Test peak-referenced noise has std = peak / 10^(snr/20)."""
        clean = simulate_rf(_config(small_geometry, [PointAbsorber(x=0.0, z=10e-3)], n_samples=8000))
        noisy = add_noise(clean, 40.0, seed=1, reference="peak")
        noise = noisy.samples.astype(float) - clean.samples.astype(float)
        expected = np.abs(clean.samples).max() / 100.0
        assert noise.std() == pytest.approx(expected, rel=0.05)

    def test_same_seed_same_noise(self, point_frame):
        """Test identical seeds give identical frames."""
        first = add_noise(point_frame, 20.0, seed=7)
        second = add_noise(point_frame, 20.0, seed=7)
        third = add_noise(point_frame, 20.0, seed=8)
        assert np.array_equal(first.samples, second.samples)
        assert not np.array_equal(first.samples, third.samples)

    def test_no_noise(self, point_frame):
        """Test None and +inf leave the frame unchanged."""
        assert add_noise(point_frame, None, seed=0) is point_frame
        assert add_noise(point_frame, float("inf"), seed=0) is point_frame

    def test_unknown_reference(self, point_frame):
        """Test unknown references are rejected."""
        with pytest.raises(ValidationError, match="noise_reference"):
            add_noise(point_frame, 20.0, seed=0, reference="rms")

    def test_simulate_applies_configured_noise(self, small_geometry):
        """Test simulate is simulate_rf plus the configured noise."""
        cfg = _config(small_geometry, [PointAbsorber(x=0.0, z=10e-3)], noise_snr_db=30.0)
        expected = add_noise(simulate_rf(cfg), 30.0, seed=5)
        assert np.array_equal(simulate(cfg, seed=5).samples, expected.samples)
        assert isinstance(simulate(cfg), RfFrame)


class TestStandardPhantom:
    """Test the 30-absorber phantom."""

    def test_layout(self):
        """Test three absorbers every 5 mm from 25 to 70 mm."""
        cfg = standard_phantom()
        assert len(cfg.absorbers) == 30
        depths = sorted({round(a.z * 1e3, 6) for a in cfg.absorbers})
        assert depths == [25, 30, 35, 40, 45, 50, 55, 60, 65, 70]
        assert {round(a.x * 1e3, 6) for a in cfg.absorbers} == {-8, 0, 8}
        assert cfg.geometry.n_elements == 128
        assert cfg.noise_snr_db == 50.0

    def test_report_targets_on_axis(self):
        """Test one on-axis target per depth, sorted by depth."""
        targets = report_targets(standard_phantom())
        assert len(targets) == 10
        assert all(x == 0.0 for x, _ in targets)
        assert [z for _, z in targets] == sorted(z for _, z in targets)

"""Tests for configuration loading and validation."""

import pytest

from pabeam.beamformers import Method
from pabeam.config import BeamformSettings, SimulationSettings
from pabeam.exceptions import FileError, FormatError, ValidationError
from pabeam.model import ArrayGeometry


PHANTOM_CONFIG = """n_elements = 128
center_frequency = 5e6
sampling_frequency = 50e6
sound_speed = 1540
phantom = standard
noise_reference = peak
"""


class TestSimulationSettings:
    """Test simulation settings loaded from key = value files."""

    def test_load_from_file(self, config_file):
        """Test a complete file loads with typed values."""
        settings = SimulationSettings.from_file(config_file())
        assert settings.n_elements == 16
        assert settings.sound_speed == 1540.0
        assert settings.noise_snr_db is None
        assert settings.seed == 3
        assert len(settings.absorbers) == 1
        assert settings.absorbers[0].z == pytest.approx(10e-3)

    def test_defaults(self, config_file):
        """Test optional keys keep their defaults."""
        text = "n_elements = 16\npitch = 0.0003\ncenter_frequency = 5e6\nsampling_frequency = 50e6\n"
        text += "sound_speed = 1540\nabsorbers = 0 0.01\n"
        settings = SimulationSettings.from_file(config_file(text=text))
        assert settings.n_samples == 5000
        assert settings.noise_snr_db == 50.0
        assert settings.noise_reference == "mean_power"
        assert settings.fractional_bandwidth == 0.77
        assert settings.absorbers[0].amplitude == 1.0

    def test_numeric_noise(self, config_file):
        """Test a numeric noise level is kept."""
        assert SimulationSettings.from_file(config_file(noise="30")).noise_snr_db == 30.0

    def test_overrides(self, config_file):
        """Test overrides win over the file and None is ignored."""
        settings = SimulationSettings.from_file(config_file(), seed=9, noise_snr_db=None)
        assert settings.seed == 9
        assert settings.noise_snr_db is None

    def test_keys_case_insensitive(self, config_file):
        """Test upper-case keys are accepted."""
        text = "N_ELEMENTS = 16\nPITCH = 0.0003\nCENTER_FREQUENCY = 5e6\n"
        text += "SAMPLING_FREQUENCY = 50e6\nSOUND_SPEED = 1540\nABSORBERS = 0 0.01\n"
        assert SimulationSettings.from_file(config_file(text=text)).n_elements == 16

    def test_missing_required_key_named(self, config_file):
        """Test a missing required key is reported by name."""
        text = "n_elements = 16\ncenter_frequency = 5e6\nsampling_frequency = 50e6\nabsorbers = 0 0.01\n"
        with pytest.raises(ValidationError, match="sound_speed"):
            SimulationSettings.from_file(config_file(text=text))

    def test_unknown_key_rejected(self, config_file):
        """Test misspelled keys are not silently ignored."""
        path = config_file()
        path.write_text(path.read_text() + "sound_sped = 1500\n")
        with pytest.raises(ValidationError, match="sound_sped"):
            SimulationSettings.from_file(path)

    def test_key_without_value(self, config_file):
        """Test a bare key is a format error."""
        path = config_file()
        path.write_text(path.read_text() + "seed\n")
        with pytest.raises(FormatError, match="seed"):
            SimulationSettings.from_file(path)

    def test_missing_file(self, tmp_path):
        """Test a missing file is a file error."""
        with pytest.raises(FileError):
            SimulationSettings.from_file(tmp_path / "absent.cfg")

    def test_several_absorbers(self, config_file):
        """Test absorbers separated by semicolons with amplitudes."""
        settings = SimulationSettings.from_file(config_file(absorbers="-0.001 0.008 2; 0.001, 0.012"))
        assert [(a.x, a.z, a.amplitude) for a in settings.absorbers] == [
            (-0.001, 0.008, 2.0),
            (0.001, 0.012, 1.0),
        ]

    def test_malformed_absorber(self, config_file):
        """Test an absorber entry with one number is rejected."""
        with pytest.raises(ValidationError, match="absorbers"):
            SimulationSettings.from_file(config_file(absorbers="0.01"))

    def test_requires_a_source(self, config_file):
        """Test a configuration without absorbers or phantom is rejected."""
        with pytest.raises(ValidationError, match="absorbers"):
            SimulationSettings.from_file(config_file(absorbers=""))

    def test_invalid_geometry(self, config_file):
        """Test geometry invariants surface as validation errors."""
        settings = SimulationSettings.from_file(config_file(), sampling_frequency=8e6)
        with pytest.raises(ValidationError, match="sampling_frequency"):
            settings.geometry()

    def test_record_too_short(self, config_file):
        """Test absorbers beyond the record are rejected when building the simulation."""
        settings = SimulationSettings.from_file(config_file(absorbers="0 0.05"))
        with pytest.raises(ValidationError, match="n_samples"):
            settings.sim_config()

    def test_explicit_sim_config(self, config_file):
        """Test explicit absorbers reach the simulation config."""
        cfg = SimulationSettings.from_file(config_file()).sim_config()
        assert cfg.geometry == ArrayGeometry.linear(n_elements=16, pitch=0.0003)
        assert cfg.n_samples == 1000
        assert cfg.noise_snr_db is None

    def test_standard_phantom(self, config_file):
        """Test 'phantom = standard' builds the 30-absorber phantom."""
        cfg = SimulationSettings.from_file(config_file(text=PHANTOM_CONFIG)).sim_config()
        assert len(cfg.absorbers) == 30
        assert cfg.noise_reference == "peak"
        assert cfg.noise_snr_db == 50.0

    def test_phantom_and_absorbers_exclusive(self, config_file):
        """Test a phantom cannot be combined with absorbers."""
        path = config_file()
        path.write_text(path.read_text() + "phantom = standard\n")
        with pytest.raises(ValidationError, match="phantom"):
            SimulationSettings.from_file(path)


class TestBeamformSettings:
    """Test beamforming settings."""

    def test_defaults(self):
        """Test default settings."""
        settings = BeamformSettings()
        assert settings.method is Method.DAS
        assert settings.dynamic_range_db == 60.0
        assert settings.sign_root is True
        assert settings.bandpass is False
        assert settings.grid().shape == (750, 401)

    def test_method_names(self):
        """Test method names in any case, with '_' or '-'."""
        assert BeamformSettings.from_overrides(method="MVB_DMAS").method is Method.MVB_DMAS
        assert BeamformSettings.from_overrides(method="Mv").method is Method.MV

    def test_unknown_method(self):
        """Test unknown methods are rejected by name."""
        with pytest.raises(ValidationError, match="method: unknown method 'fdmas'"):
            BeamformSettings.from_overrides(method="fdmas")

    def test_overrides_ignore_none(self):
        """Test None overrides keep the defaults."""
        settings = BeamformSettings.from_overrides(method=None, dynamic_range_db=40.0)
        assert settings.method is Method.DAS
        assert settings.dynamic_range_db == 40.0

    def test_grid_string(self):
        """Test the grid is parsed from millimeters into meters."""
        grid = BeamformSettings.from_overrides(grid_mm="-5,5,20,30,0.2,0.1").grid()
        assert grid.shape == (101, 51)
        assert grid.x_min == pytest.approx(-5e-3)
        assert grid.z_max == pytest.approx(30e-3)

    def test_grid_wrong_count(self):
        """Test grids need six numbers."""
        with pytest.raises(ValidationError, match="grid_mm"):
            BeamformSettings.from_overrides(grid_mm="1,2,3")

    def test_grid_behind_array(self):
        """Test grids must lie in front of the transducer."""
        with pytest.raises(ValidationError, match="z_min"):
            BeamformSettings.from_overrides(grid_mm="-5,5,0,30,0.1,0.1")

    def test_grid_zero_spacing(self):
        """Test zero pixel spacing is rejected."""
        with pytest.raises(ValidationError, match="dx"):
            BeamformSettings.from_overrides(grid_mm="-5,5,1,30,0,0.1")

    @pytest.mark.parametrize("field", ["dynamic_range_db", "sound_speed_scale"])
    def test_positive_values(self, field):
        """Test range and scale must be positive."""
        with pytest.raises(ValidationError, match=field):
            BeamformSettings.from_overrides(**{field: 0.0})

    def test_workers_at_least_one(self):
        """Test thread count must be at least one."""
        with pytest.raises(ValidationError, match="max_workers"):
            BeamformSettings.from_overrides(max_workers=0)

    def test_default_workers_follow_cpu_count(self, monkeypatch):
        """Test the default thread count is the CPU count, capped at 8."""
        monkeypatch.setattr("pabeam.config.os.cpu_count", lambda: 4)
        assert BeamformSettings().max_workers == 4
        monkeypatch.setattr("pabeam.config.os.cpu_count", lambda: 64)
        assert BeamformSettings().max_workers == 8
        monkeypatch.setattr("pabeam.config.os.cpu_count", lambda: None)
        assert BeamformSettings().max_workers == 1

    def test_mv_defaults(self):
        """Test L = M/2 and delta = 1/(100 L)."""
        cfg = BeamformSettings().mv_config(16)
        assert cfg.subarray_length == 8
        assert cfg.loading_factor == pytest.approx(1 / 800)
        assert cfg.temporal_half_window == 5

    def test_mv_subarray_too_long(self):
        """Test L above M/2 is rejected."""
        settings = BeamformSettings.from_overrides(subarray_length=9)
        with pytest.raises(ValidationError, match="subarray_length"):
            settings.mv_config(16)

    def test_mv_bad_loading(self):
        """Test nonpositive loading is rejected."""
        settings = BeamformSettings.from_overrides(loading_factor=-1.0)
        with pytest.raises(ValidationError, match="loading_factor"):
            settings.mv_config(16)

    def test_sound_speed_scale(self, small_geometry):
        """Test the scale multiplies the recorded speed of sound."""
        scaled = BeamformSettings.from_overrides(sound_speed_scale=1.05).beamforming_geometry(small_geometry)
        assert scaled.sound_speed == pytest.approx(1617.0)
        assert BeamformSettings().beamforming_geometry(small_geometry) is small_geometry

import os

import numpy as np
import pytest

from pabeam.model import ArrayGeometry, ImagingGrid
from pabeam.simulator import PointAbsorber, SimConfig, simulate_rf
from pabeam.utils import reset_logger


@pytest.fixture
def small_geometry():
    """16 elements at 0.3 mm pitch, 5 MHz, 50 MHz sampling, 1540 m/s."""
    return ArrayGeometry.linear(n_elements=16, pitch=0.3e-3)


@pytest.fixture
def array_geometry():
    """128 elements spanning 40 mm."""
    return ArrayGeometry.linear()


@pytest.fixture
def point_frame(small_geometry):
    """Noiseless frame of one absorber on axis at 10 mm."""
    cfg = SimConfig(
        absorbers=(PointAbsorber(x=0.0, z=10e-3),),
        geometry=small_geometry,
        n_samples=1000,
    )
    return simulate_rf(cfg)


@pytest.fixture
def point_grid():
    """Grid of 1 mm x 2 mm around the absorber of point_frame."""
    return ImagingGrid.from_spacing(-1e-3, 1e-3, 9e-3, 11e-3, 0.1e-3, 0.05e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def clean_logger():
    yield
    reset_logger()


@pytest.fixture
def skip_if_not_slow():
    """Skip long experiment reproductions unless enabled."""
    if not os.getenv("PABEAM_RUN_SLOW"):
        pytest.skip("slow experiment - set PABEAM_RUN_SLOW=1 to run")


CONFIG_TEMPLATE = """# small test array
n_elements = 16
pitch = 0.0003
center_frequency = 5e6
sampling_frequency = 50e6
sound_speed = 1540
n_samples = 1000
noise_snr_db = {noise}
seed = 3
absorbers = {absorbers}
"""


@pytest.fixture
def config_file(tmp_path):
    """Write a simulation configuration file and return its path."""

    def write(noise="none", absorbers="0 0.010 1.0", name="sim.cfg", text=None):
        path = tmp_path / name
        path.write_text(text if text is not None else CONFIG_TEMPLATE.format(noise=noise, absorbers=absorbers))
        return path

    return write

import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

from ttdensity.densities import RadarSpec
from ttdensity.experiments import gauss_grid, radar_grid, radar_matrix

# golden-file generator lives next to its data
sys.path.insert(0, str(Path(__file__).parent / "golden"))


@pytest.fixture(scope="session")
def radar_setup():
    grid = radar_grid(0.2)
    return grid, radar_matrix(RadarSpec(), grid)


@pytest.fixture(scope="session")
def gauss4_grid():
    return gauss_grid(0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def no_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        yield

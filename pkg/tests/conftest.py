import numpy as np
import pytest

from rydcz.hilbert import GateSystem, LevelScheme
from rydcz.pulses import preset


def single_photon_system(pulse, blockade_TB=1.0e4) -> GateSystem:
    return GateSystem(LevelScheme.SINGLE_PHOTON, blockade=blockade_TB / pulse.duration_T)


@pytest.fixture(scope="session")
def levine_pichler():
    return preset("LevinePichler")


@pytest.fixture(scope="session")
def time_optimal():
    return preset("TimeOptimal")


@pytest.fixture(scope="session")
def robust_rect():
    return preset("RobustRect")


@pytest.fixture(scope="session")
def robust_smooth():
    return preset("RobustSmooth")


def max_abs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))

import numpy as np
import pytest

from dsdrive import (
    DEFAULT_MOTOR,
    DesignSpec,
    optimize_ntf_fir,
    synthesize_standard,
    weighting_from_admittance,
)

SIGMAS = (0.043, 0.2, 0.6)


@pytest.fixture(scope="session")
def motor_params():
    return DEFAULT_MOTOR


@pytest.fixture(scope="session")
def weightings():
    return {s: weighting_from_admittance(DEFAULT_MOTOR, s, 100e3, m=8)
            for s in SIGMAS}


@pytest.fixture(scope="session")
def optimized_ntfs(weightings):
    spec = DesignSpec()
    return {s: optimize_ntf_fir(weightings[s], spec) for s in SIGMAS}


@pytest.fixture(scope="session")
def standard_ntf():
    return synthesize_standard(DesignSpec(order=4))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20120909)

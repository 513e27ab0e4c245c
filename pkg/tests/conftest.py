import pytest

from mmwmcast.training import calibrate_composite


@pytest.fixture(scope="session")
def calib64_mag():
    """Full-size magnitude-variance calibration (N=64, Q=4000)."""
    return calibrate_composite(64, 4000, 256, "magnitude")


@pytest.fixture(scope="session")
def calib64_cx():
    """Full-size complex-variance calibration (N=64, Q=4000)."""
    return calibrate_composite(64, 4000, 256, "complex")


@pytest.fixture(scope="session")
def calib16_mag():
    return calibrate_composite(16, 4000, 256, "magnitude")

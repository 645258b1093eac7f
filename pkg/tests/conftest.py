import numpy as np
import pytest

from rtbvc.geometry import CurvedDomain
from rtbvc.mesh import generate_mesh


@pytest.fixture(scope="session")
def disk():
    return CurvedDomain.disk()


@pytest.fixture(scope="session")
def annulus():
    return CurvedDomain.annulus(0.5, 1.0)


@pytest.fixture(scope="session")
def square():
    return CurvedDomain.from_name("square")


@pytest.fixture(scope="session")
def disk_mesh8(disk):
    return generate_mesh(disk, 1 / 8)


@pytest.fixture(scope="session")
def annulus_mesh8(annulus):
    return generate_mesh(annulus, 1 / 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

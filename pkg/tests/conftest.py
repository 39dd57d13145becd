import numpy as np
import pytest

from bubblelab.grid import gauss_grid, geometric_grid


@pytest.fixture(scope="session")
def quad7():
    """High-accuracy quadrature grid, N=7."""
    return gauss_grid(7)


@pytest.fixture(scope="session")
def mesh7():
    """Operator mesh, N=7."""
    return geometric_grid(7, r_max=1000.0, r_cell=1e-3, per_decade=320)


@pytest.fixture(scope="session")
def mesh7_fine():
    """Fine mesh for quadrature-accuracy-limited energy identities."""
    return geometric_grid(7, r_max=2000.0, r_cell=1.2e-4, per_decade=5600)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)

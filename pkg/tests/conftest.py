import numpy as np
import pytest

from ringdat.lattice import RingTopology

J1_LH1 = 600.0
J2_LH1 = 377.0
J_LH1 = 0.5 * (J1_LH1 + J2_LH1)


@pytest.fixture
def lh1():
    return RingTopology.dimerized(32, J1_LH1, J2_LH1)


@pytest.fixture
def iso32():
    return RingTopology.isotropic(32, J_LH1)


@pytest.fixture
def rng():
    return np.random.default_rng(20161014)


def random_density_matrix(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def prominent_peaks(times, values, fraction=0.5):
    """Times of local maxima reaching at least ``fraction`` of the global maximum."""
    v = np.asarray(values)
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] >= fraction * v.max())
    return np.asarray(times)[1:-1][inner]

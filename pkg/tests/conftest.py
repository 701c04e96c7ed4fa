import numpy as np
import pytest

from expcircle import invariant_density, linear_map, perturbed_map

M = 4096
X = np.arange(M) / M


@pytest.fixture(scope="session")
def doubling():
    return linear_map(2)


@pytest.fixture(scope="session")
def tripling():
    return linear_map(3)


@pytest.fixture(scope="session")
def bent():
    """The workhorse non-linear map: degree 2, eps = 0.05."""
    return perturbed_map(2, 0.05)


@pytest.fixture(scope="session")
def bent_phi(bent):
    phi, _ = invariant_density(bent)
    return phi

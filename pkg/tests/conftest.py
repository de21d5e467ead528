import numpy as np
import pytest

from grushin import GrushinSpace
from grushin.coefficients import BlockFamily, IdentityCoefficients


@pytest.fixture
def sp11():
    return GrushinSpace(1, 1, 1.0)


@pytest.fixture
def identity11(sp11):
    return IdentityCoefficients(sp11)


@pytest.fixture
def block11(sp11):
    return BlockFamily(sp11, 0.1, 0.1, 0.1)


@pytest.fixture
def cloud11(sp11):
    from grushin.geometry import sample_annulus

    z, t = sample_annulus(sp11, 100, rho_range=(0.2, 0.95), psi_range=(1e-3, 1.0), seed=3, min_abs_z=0.05)
    return z, t

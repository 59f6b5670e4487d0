import numpy as np
import pytest

from mixbound.measures import ParameterSpace, new_spd_scale


@pytest.fixture
def space1():
    return ParameterSpace(dim=1, radius=1.0, lambda_min=0.5, lambda_max=2.0)


@pytest.fixture
def space2():
    return ParameterSpace(dim=2, radius=1.0, lambda_min=0.5, lambda_max=2.0)


@pytest.fixture
def identity1(space1):
    return new_spd_scale([[1.0]], space1)


@pytest.fixture
def identity2(space2):
    return new_spd_scale(np.eye(2), space2)


def random_spd(rng, space):
    """Random admissible scale: uniform interior eigenvalues, Haar rotation."""
    lo, hi = space.lambda_min, space.lambda_max
    delta = 0.05 * (hi - lo)
    lam = rng.uniform(lo + delta, hi - delta, size=space.dim)
    if space.dim == 1:
        return new_spd_scale([[lam[0]]], space)
    q, _ = np.linalg.qr(rng.standard_normal((space.dim, space.dim)))
    return new_spd_scale((q * lam) @ q.T, space)

import numpy as np
import pytest

from mixbound.errors import (
    DegenerateMeasureError,
    EigenvalueBoxError,
    ShapeError,
    SupportViolationError,
)
from mixbound.measures import (
    ParameterSpace,
    jacobi_eigh,
    new_discrete_measure,
    new_spd_scale,
    operator_norm_distance,
)

from conftest import random_spd


def test_parameter_space_validation():
    with pytest.raises(EigenvalueBoxError):
        ParameterSpace(dim=1, radius=1.0, lambda_min=2.0, lambda_max=0.5)
    with pytest.raises(ShapeError):
        ParameterSpace(dim=0, radius=1.0, lambda_min=0.5, lambda_max=2.0)


def test_single_dirac(space1):
    m = new_discrete_measure([[0.0]], [1.0], space1)
    assert m.weights.tolist() == [1.0]
    assert m.atoms.shape == (1, 1)


def test_weight_normalization(space1):
    m = new_discrete_measure([[0.0], [1.0]], [2.0, 2.0], space1)
    assert np.allclose(m.weights, [0.5, 0.5])
    assert abs(m.weights.sum() - 1.0) <= 1e-12


def test_support_violation(space1):
    with pytest.raises(SupportViolationError):
        new_discrete_measure([[0.0], [1.5]], [0.5, 0.5], space1)


def test_degenerate_and_shape_errors(space1):
    with pytest.raises(DegenerateMeasureError):
        new_discrete_measure([[0.0]], [0.0], space1)
    with pytest.raises(DegenerateMeasureError):
        new_discrete_measure([[0.0]], [-1.0], space1)
    with pytest.raises(ShapeError):
        new_discrete_measure([[0.0], [0.5]], [1.0], space1)


def test_spd_scale_identity(space2):
    s = new_spd_scale(np.eye(2), space2)
    assert np.allclose(s.eigenvalues, [1.0, 1.0])


def test_spd_scale_diagonal(space2):
    s = new_spd_scale(np.diag([2.0, 0.5]), space2)
    assert np.allclose(s.eigenvalues, [2.0, 0.5])


def test_spd_scale_box_error(space2):
    with pytest.raises(EigenvalueBoxError):
        new_spd_scale(np.diag([3.0, 1.0]), space2)
    with pytest.raises(ShapeError):
        new_spd_scale(np.array([[1.0, np.nan], [np.nan, 1.0]]), space2)


def test_spd_symmetrization(space2):
    s = new_spd_scale(np.array([[1.0, 0.1 + 5e-13], [0.1, 1.0]]), space2)
    assert np.allclose(s.matrix, s.matrix.T)


def test_operator_norm_examples(space2):
    i2 = new_spd_scale(np.eye(2), space2)
    d2 = new_spd_scale(np.diag([2.0, 0.5]), space2)
    assert operator_norm_distance(i2, i2) == 0.0
    assert abs(operator_norm_distance(d2, i2) - 1.0) < 1e-12


def test_operator_norm_random_direction_oracle():
    space3 = ParameterSpace(dim=3, radius=1.0, lambda_min=0.5, lambda_max=2.0)
    rng = np.random.default_rng(5)
    a = random_spd(rng, space3)
    b = random_spd(rng, space3)
    got = operator_norm_distance(a, b)
    v = rng.standard_normal((10 ** 5, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    diff = a.matrix - b.matrix
    probe = np.abs(np.einsum("ni,ij,nj->n", v, diff, v)).max()
    assert probe <= got + 1e-12
    assert got - probe < 1e-3


def test_operator_norm_metric_axioms(space2):
    rng = np.random.default_rng(11)
    scales = [random_spd(rng, space2) for _ in range(6)]
    for a in scales:
        assert operator_norm_distance(a, a) <= 1e-12
        for b in scales:
            dab = operator_norm_distance(a, b)
            assert abs(dab - operator_norm_distance(b, a)) <= 1e-9
            assert dab <= np.linalg.norm(a.matrix - b.matrix) + 1e-12
            for c in scales:
                assert dab <= (operator_norm_distance(a, c)
                               + operator_norm_distance(c, b) + 1e-9)


def test_jacobi_against_numpy():
    rng = np.random.default_rng(2)
    for n in (1, 2, 3, 5, 8):
        a = rng.standard_normal((n, n))
        m = 0.5 * (a + a.T)
        lam, q = jacobi_eigh(m)
        ref = np.sort(np.linalg.eigvalsh(m))[::-1]
        assert np.allclose(lam, ref, atol=1e-10)
        assert np.max(np.abs((q * lam) @ q.T - m)) <= 1e-9
        assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-10


def test_eigen_reconstruction(space2):
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = random_spd(rng, space2)
        rebuilt = (s.eigenvectors * s.eigenvalues) @ s.eigenvectors.T
        assert np.max(np.abs(rebuilt - s.matrix)) <= 1e-9


def test_serialization_round_trip(space1):
    m = new_discrete_measure([[0.2], [-0.4]], [0.3, 0.7], space1)
    d = m.to_dict()
    m2 = new_discrete_measure(d["atoms"], d["weights"], space1)
    assert np.array_equal(m.atoms, m2.atoms)
    assert np.array_equal(m.weights, m2.weights)

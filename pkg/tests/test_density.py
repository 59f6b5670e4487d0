import math

import numpy as np
import pytest

from mixbound.density import (
    draw_mixture,
    hermite_moment_functional,
    l1_distance,
    mixture_charfn,
    mixture_density,
)
from mixbound.errors import InsufficientBudgetError, UnsupportedDimensionError
from mixbound.kernels import kernel_family
from mixbound.measures import (
    MixtureConfig,
    ParameterSpace,
    new_discrete_measure,
    new_spd_scale,
)
from mixbound.rngs import derive_rng

from conftest import random_spd


def _cfg(atoms, weights, scale, space):
    return MixtureConfig(new_discrete_measure(atoms, weights, space),
                         scale, space)


def _gauss_l1_shift(delta, sigma2=1.0):
    # closed-form L1 between equal-scale Gaussians a distance delta apart
    from math import erf, sqrt
    z = abs(delta) / (2.0 * sqrt(sigma2))
    return 2.0 * erf(z / sqrt(2.0))


def test_mixture_density_examples(space1, identity1):
    g = kernel_family("gaussian", 1)
    G = _cfg([[0.0]], [1.0], identity1, space1)
    assert mixture_density(G, g, [0.0]) == pytest.approx(0.3989422804014327, abs=1e-12)
    G2 = _cfg([[-1.0], [1.0]], [0.5, 0.5], identity1, space1)
    want = math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert mixture_density(G2, g, [0.0]) == pytest.approx(want, abs=1e-12)


def test_zero_weight_atom_inert(space1, identity1):
    g = kernel_family("gaussian", 1)
    Ga = _cfg([[0.3]], [1.0], identity1, space1)
    Gb = _cfg([[0.3], [-0.7]], [1.0, 0.0], identity1, space1)
    x = np.linspace(-3, 3, 11)[:, None]
    assert np.array_equal(mixture_density(Ga, g, x), mixture_density(Gb, g, x))


def test_l1_identical_zero(space1, identity1):
    g = kernel_family("gaussian", 1)
    G = _cfg([[0.2]], [1.0], identity1, space1)
    est = l1_distance(G, G, g, 10 ** 5, 0)
    assert est.value <= 1e-10
    assert est.std_error == 0.0 and est.method == "quadrature"


def test_l1_disjoint_two():
    space = ParameterSpace(dim=1, radius=10.0, lambda_min=0.5, lambda_max=2.0)
    ident = new_spd_scale([[1.0]], space)
    g = kernel_family("gaussian", 1)
    Ga = _cfg([[-10.0]], [1.0], ident, space)
    Gb = _cfg([[10.0]], [1.0], ident, space)
    est = l1_distance(Ga, Gb, g, 10 ** 5, 0)
    assert abs(est.value - 2.0) <= 1e-6


def test_l1_gaussian_closed_form():
    space = ParameterSpace(dim=1, radius=2.0, lambda_min=0.5, lambda_max=2.0)
    ident = new_spd_scale([[1.0]], space)
    g = kernel_family("gaussian", 1)
    Ga = _cfg([[0.0]], [1.0], ident, space)
    Gb = _cfg([[1.0]], [1.0], ident, space)
    est = l1_distance(Ga, Gb, g, 2 * 10 ** 5, 0)
    assert est.value == pytest.approx(_gauss_l1_shift(1.0), abs=2e-5)


def test_l1_cauchy_scale_closed_form(space1):
    # exact arctan formula for scale-only univariate Cauchy pairs
    c = kernel_family("cauchy", 1)
    P = new_discrete_measure([[0.0]], [1.0], space1)
    Ga = MixtureConfig(P, new_spd_scale([[1.0]], space1), space1)
    Gb = MixtureConfig(P, new_spd_scale([[1.2]], space1), space1)
    est = l1_distance(Ga, Gb, c, 2 * 10 ** 5, 0)
    g, gp = 1.0, math.sqrt(1.2)
    closed = (4 / math.pi) * abs(math.atan(math.sqrt(gp / g)) - math.atan(math.sqrt(g / gp)))
    assert est.value == pytest.approx(closed, abs=5e-6)


def test_l1_budget_guard(space1, identity1):
    g = kernel_family("gaussian", 1)
    G = _cfg([[0.0]], [1.0], identity1, space1)
    with pytest.raises(InsufficientBudgetError):
        l1_distance(G, G, g, 999, 0)


def test_l1_mc_agrees_with_quadrature(space2, identity2):
    rng = np.random.default_rng(4)
    g = kernel_family("gaussian", 2)
    hits = 0
    trials = 30
    for t in range(trials):
        Ga = _cfg(rng.uniform(-0.6, 0.6, (2, 2)), rng.dirichlet(np.ones(2)),
                  random_spd(rng, space2), space2)
        Gb = _cfg(rng.uniform(-0.6, 0.6, (2, 2)), rng.dirichlet(np.ones(2)),
                  random_spd(rng, space2), space2)
        quad = l1_distance(Ga, Gb, g, 3 * 10 ** 5, t)
        mc = l1_distance(Ga, Gb, g, 4 * 10 ** 4, t, method="importance_mc")
        if abs(mc.value - quad.value) <= 3.0 * mc.std_error + 1e-4:
            hits += 1
    assert hits >= int(0.95 * trials) - 1


def test_l1_symmetry_and_triangle(space1, identity1):
    g = kernel_family("gaussian", 1)
    rng = np.random.default_rng(6)
    Gs = [_cfg(rng.uniform(-0.8, 0.8, (2, 1)), rng.dirichlet(np.ones(2)),
               random_spd(rng, space1), space1) for _ in range(3)]
    d01 = l1_distance(Gs[0], Gs[1], g, 10 ** 5, 0)
    d10 = l1_distance(Gs[1], Gs[0], g, 10 ** 5, 0)
    assert abs(d01.value - d10.value) <= 1e-6
    d02 = l1_distance(Gs[0], Gs[2], g, 10 ** 5, 0)
    d12 = l1_distance(Gs[1], Gs[2], g, 10 ** 5, 0)
    assert d01.value <= d02.value + d12.value + 1e-4


def test_forward_continuity(space1, identity1):
    # l1 <= const * (W1 + dsig): ratio l1/t stays bounded along G_t -> G
    g = kernel_family("gaussian", 1)
    base = _cfg([[0.0], [0.4]], [0.5, 0.5], identity1, space1)
    ratios = []
    vals = []
    for t in (0.2, 0.1, 0.05, 0.025):
        shifted = _cfg([[0.0 + t / 2], [0.4 + t / 2]], [0.5, 0.5],
                       identity1, space1)
        est = l1_distance(base, shifted, g, 10 ** 5, 0)
        vals.append(est.value)
        ratios.append(est.value / t)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert max(ratios) <= 10.0 * ratios[0]


def test_mixture_charfn_basics(space1, identity1):
    g = kernel_family("gaussian", 1)
    G = _cfg([[0.0]], [1.0], identity1, space1)
    assert mixture_charfn(G, g, [0.0]) == pytest.approx(1.0)
    from mixbound.kernels import charfn

    xi = np.array([0.7])
    assert mixture_charfn(G, g, xi) == pytest.approx(complex(charfn(g, xi, identity1)))


def test_mixture_charfn_transform_oracle(space1):
    # trapezoid Fourier quadrature of the density matches the closed form
    rng = np.random.default_rng(8)
    g = kernel_family("gaussian", 1)
    s = random_spd(rng, space1)
    G = _cfg(rng.uniform(-0.7, 0.7, (3, 1)), rng.dirichlet(np.ones(3)), s, space1)
    x = np.linspace(-25, 25, 60001)
    dens = mixture_density(G, g, x[:, None])
    h = x[1] - x[0]
    for _ in range(5):
        xi = float(rng.uniform(-4, 4))
        numeric = np.sum(np.exp(1j * xi * x) * dens) * h
        assert abs(numeric - mixture_charfn(G, g, [xi])) <= 1e-4


def test_hermite_examples(space1, identity1):
    G = _cfg([[0.5]], [1.0], identity1, space1)
    assert hermite_moment_functional(1, 1.0, G) == pytest.approx(0.25, rel=1e-5)
    G0 = _cfg([[0.0]], [1.0], identity1, space1)
    assert abs(hermite_moment_functional(2, 1.0, G0)) <= 1e-8
    Gpm = _cfg([[-1.0], [1.0]], [0.5, 0.5], identity1, space1)
    assert hermite_moment_functional(1, 1.0, Gpm) == pytest.approx(1.0, rel=1e-5)


def test_hermite_matches_mixing_moments(space1, identity1):
    rng = np.random.default_rng(9)
    G = _cfg(rng.uniform(-0.8, 0.8, (3, 1)), rng.dirichlet(np.ones(3)),
             identity1, space1)
    for k in (1, 2, 3, 4, 5):
        want = float(np.sum(G.mixing.weights * G.mixing.atoms[:, 0] ** (2 * k)))
        got = hermite_moment_functional(k, 1.0, G)
        assert got == pytest.approx(want, rel=1e-5, abs=1e-7)


def test_hermite_dimension_guard(space2, identity2):
    G = _cfg([[0.0, 0.0]], [1.0], identity2, space2)
    with pytest.raises(UnsupportedDimensionError):
        hermite_moment_functional(1, 1.0, G)


def test_draw_mixture_marginals(space1, identity1):
    g = kernel_family("gaussian", 1)
    G = _cfg([[-0.5], [0.5]], [0.25, 0.75], identity1, space1)
    rng = derive_rng(0, "draw-mixture-test")
    x = draw_mixture(G, g, rng, 150_000)
    want_mean = -0.5 * 0.25 + 0.5 * 0.75
    assert abs(x.mean() - want_mean) < 0.01

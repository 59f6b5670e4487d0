import math

import mpmath as mp
import numpy as np
import pytest

from mixbound.errors import DomainError
from mixbound.specfun import (
    ball_moment_integral,
    ball_volume,
    bessel_k,
    gamma_fn,
    gaussian_complex_moment,
    gaussian_tail_bound,
    inverse_xlogx_bound,
    odd_double_factorial,
    poly_exp_constant,
)


def test_gamma_values():
    assert abs(gamma_fn(1.0) - 1.0) <= 1e-12
    assert abs(gamma_fn(0.5) - math.sqrt(math.pi)) <= 1e-12 * math.sqrt(math.pi)
    assert abs(gamma_fn(5.0) - 24.0) <= 24.0 * 1e-12


def test_gamma_against_stdlib():
    for x in np.geomspace(0.05, 50, 60):
        ref = math.gamma(x)
        assert abs(gamma_fn(float(x)) - ref) <= 1e-12 * abs(ref)
    with pytest.raises(DomainError):
        gamma_fn(0.0)


def test_bessel_half_integer_closed_form():
    want = math.sqrt(math.pi / 2.0) * math.exp(-1.0)
    assert abs(bessel_k(0.5, 1.0) - want) <= 1e-12
    assert bessel_k(-0.5, 1.0) == bessel_k(0.5, 1.0)


def test_bessel_k0_reference():
    # frozen from the integral representation, cross-checked against mpmath
    assert abs(bessel_k(0.0, 1.0) - 0.42102443824070834) <= 1e-9


def test_bessel_against_mpmath():
    xs = np.geomspace(1e-3, 50, 25)
    for nu in (0.0, 0.25, 1.0, 2.0, 3.7, 6.0):
        ref = np.array([float(mp.besselk(nu, float(x))) for x in xs])
        got = bessel_k(nu, xs)
        assert np.max(np.abs(got / ref - 1.0)) <= 1e-8


def test_bessel_recurrence():
    xs = np.geomspace(0.05, 30, 12)
    for nu in (0.3, 1.0, 2.5):
        lhs = bessel_k(nu + 1.0, xs)
        rhs = bessel_k(nu - 1.0, xs) + (2.0 * nu / xs) * bessel_k(nu, xs)
        assert np.max(np.abs(lhs / rhs - 1.0)) <= 1e-7


def test_bessel_domain():
    with pytest.raises(DomainError):
        bessel_k(0.0, 0.0)


def test_ball_moment_exact_values():
    assert abs(ball_moment_integral(2, 0, 1.0) - math.pi) <= 1e-12
    assert abs(ball_moment_integral(1, 0, 1.0) - 2.0) <= 1e-12


def test_ball_moment_matches_volume():
    for d in (1, 2, 3, 5):
        for r in (0.5, 1.0, 2.5):
            assert abs(ball_moment_integral(d, 0, r) - ball_volume(d, r)) \
                <= 1e-12 * ball_volume(d, r)


def test_tail_bound_order_zero():
    tb = gaussian_tail_bound(1.0, 0.0, 2.0, 0)
    want = math.sqrt(math.pi / 2.0) * math.exp(-2.0)
    assert tb.kind == "order_zero"
    assert abs(tb.value - want) <= 1e-14
    # the bound dominates the true tail (complementary error function)
    true_tail = math.sqrt(math.pi / 2.0) * math.erfc(2.0 / math.sqrt(2.0))
    assert true_tail <= tb.value


def test_tail_bound_order_2k():
    tb = gaussian_tail_bound(1.0, 1.0, 1.0, 1)
    want = 3.0 * math.exp(-0.5) * math.sqrt(math.pi / 2.0) * 3.0
    assert tb.kind == "order_2k"
    assert abs(tb.value - want) <= 1e-12


def _true_tail(sigma, R, L, k):
    # quadrature oracle for int_{x >= R+L} x^{2k} exp(-(x-R)^2/2 sigma^2)
    lo = R + L
    hi = R + L + 40.0 * sigma
    t = np.linspace(lo, hi, 40001)
    f = t ** (2 * k) * np.exp(-(t - R) ** 2 / (2.0 * sigma ** 2))
    return float(np.trapz(f, t))


def test_tail_bounds_dominate_quadrature():
    for sigma in (0.5, 1.0, 2.0):
        for L in (0.5, 1.0, 2.0, 4.0):
            for k in (0, 1, 2):
                got = gaussian_tail_bound(sigma, 1.0, L, k).value
                assert _true_tail(sigma, 1.0, L, k) <= got * (1 + 1e-12)


def test_poly_exp_constant():
    assert poly_exp_constant(0.0, 1.0) == 1.0
    assert poly_exp_constant(2.0, 1.0) == 2.0
    u = np.geomspace(1e-6, 1e3, 20001)
    for p, eps in ((2.0, 1.0), (0.7, 0.5), (5.0, 2.0)):
        M = poly_exp_constant(p, eps)
        assert np.all(u ** p <= M * np.exp(eps * u) * (1 + 1e-12))


def test_inverse_xlogx_bound():
    x = math.e ** 2
    got = inverse_xlogx_bound(x, 1.0)
    assert abs(got - x / 2.0) <= 1e-12
    # bisection oracle: the exact y* solving y log y = x must dominate the bound
    lo, hi = 1.0, 100.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.log(mid) < x:
            lo = mid
        else:
            hi = mid
    assert got <= lo + 1e-9
    with pytest.raises(DomainError):
        inverse_xlogx_bound(1.0, 2.0)


def test_odd_double_factorial():
    assert odd_double_factorial(0) == 1.0
    assert odd_double_factorial(1) == 1.0
    assert odd_double_factorial(3) == 15.0
    # log-space branch consistent with the direct product at the crossover
    direct = 1.0
    for j in range(1, 2 * 25, 2):
        direct *= j
    assert abs(odd_double_factorial(25) / direct - 1.0) <= 1e-12


def test_gaussian_complex_moment_vanishes():
    assert abs(gaussian_complex_moment(1, 10 ** 6, 42)) < 0.01
    assert abs(gaussian_complex_moment(4, 10 ** 6, 42)) < 0.05
    assert abs(gaussian_complex_moment(2, 10 ** 6, 7)) < 0.02

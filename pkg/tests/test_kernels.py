import math

import numpy as np
import pytest

from mixbound.errors import DomainError, ShapeError, UnsupportedKernelError
from mixbound.kernels import (
    charfn,
    density,
    draw_kernel,
    kernel_family,
    psi,
    psi_inverse,
    smoothness_envelope,
    xi_fn,
    xi_inverse,
)
from mixbound.measures import new_spd_scale
from mixbound.rngs import derive_rng

from conftest import random_spd


def test_family_descriptors():
    g = kernel_family("gaussian", 2)
    assert g.smoothness.kind == "super_smooth" and g.smoothness.order == 2.0
    assert g.xi_exponent == 2.0
    c = kernel_family("cauchy", 1)
    assert c.smoothness.order == 1.0 and c.xi_exponent == 1.0
    l = kernel_family("laplace", 3)
    assert l.smoothness.kind == "ordinary_smooth" and l.smoothness.order == 2.0
    assert kernel_family("gaussian-iso", 1).family == "gaussian_isotropic"
    with pytest.raises(UnsupportedKernelError):
        kernel_family("uniform", 1)


def test_density_modes(space1, identity1):
    g = kernel_family("gaussian", 1)
    assert abs(density(g, [0.0], [0.0], identity1) - 1.0 / math.sqrt(2 * math.pi)) < 1e-14
    c = kernel_family("cauchy", 1)
    assert abs(density(c, [0.0], [0.0], identity1) - 1.0 / math.pi) < 1e-14
    l = kernel_family("laplace", 1)
    s2 = new_spd_scale([[2.0]], space1)
    assert abs(density(l, [0.0], [0.0], s2) - 0.5) < 1e-14


def test_density_shape_error(space2, identity2):
    g = kernel_family("gaussian", 2)
    with pytest.raises(ShapeError):
        density(g, [0.0], [0.0, 0.0], identity2)


def test_isotropic_guard(space2):
    gi = kernel_family("gaussian_isotropic", 2)
    aniso = new_spd_scale(np.diag([2.0, 0.5]), space2)
    with pytest.raises(ShapeError):
        density(gi, [0.0, 0.0], [0.0, 0.0], aniso)


def test_charfn_closed_forms(space1, space2, identity1, identity2):
    g = kernel_family("gaussian", 1)
    assert abs(charfn(g, [1.0], identity1) - math.exp(-0.5)) < 1e-14
    c2 = kernel_family("cauchy", 2)
    assert abs(charfn(c2, [3.0, 4.0], identity2) - math.exp(-5.0)) < 1e-14
    l2 = kernel_family("laplace", 2)
    assert charfn(l2, [0.0, 0.0], identity2) == 1.0


def test_charfn_even_real_bounded(space2):
    rng = np.random.default_rng(7)
    for name in ("gaussian", "cauchy", "laplace"):
        k = kernel_family(name, 2)
        s = random_spd(rng, space2)
        for _ in range(20):
            xi = rng.uniform(-5, 5, 2)
            v = charfn(k, xi, s)
            assert abs(v.imag) == 0.0
            assert abs(charfn(k, -xi, s) - v) <= 1e-15
            assert abs(v) <= 1.0 + 1e-15


def test_envelope_brackets_charfn(space1, space2):
    rng = np.random.default_rng(17)
    for d, space in ((1, space1), (2, space2)):
        for name in ("gaussian", "cauchy", "laplace"):
            k = kernel_family(name, d)
            for _ in range(40):
                s = random_spd(rng, space)
                xi = rng.uniform(-4, 4, d)
                lo, hi = smoothness_envelope(k, float(np.linalg.norm(xi)), space)
                v = abs(charfn(k, xi, s))
                assert lo <= v * (1 + 1e-12)
                assert v <= hi * (1 + 1e-12)


def test_envelope_examples(space1):
    g = kernel_family("gaussian", 1)
    lo, hi = smoothness_envelope(g, 0.0, space1)
    assert lo == 1.0 and hi == 1.0
    lo, hi = smoothness_envelope(g, 1.0, space1)
    assert abs(lo - math.exp(-1.0)) < 1e-14
    s1 = new_spd_scale([[1.0]], space1)
    v = abs(charfn(g, [1.0], s1))
    assert lo <= v <= hi
    l = kernel_family("laplace", 1)
    lo, hi = smoothness_envelope(l, 2.0, space1)
    v = abs(charfn(l, [2.0], s1))
    assert abs(v - 1.0 / 3.0) < 1e-14
    assert lo <= v <= hi


def test_psi_xi_closed_forms():
    c = kernel_family("cauchy", 1)
    assert psi(c, 0.3) == pytest.approx(0.09, abs=1e-15)
    l = kernel_family("laplace", 1)
    assert psi(l, 0.7) == 0.7
    g = kernel_family("gaussian", 1, bound_constant_M=1.0)
    assert psi(g, 0.5) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(DomainError):
        psi(g, 1.0)
    assert xi_fn(c, 0.25) == 0.5
    assert xi_inverse(c, 0.5) == 0.25
    assert xi_fn(g, 0.8) == 0.8


def test_psi_inverse_round_trip():
    for name, M in (("gaussian", 1.0), ("gaussian", 2.5), ("cauchy", 1.0),
                    ("laplace", 1.0)):
        k = kernel_family(name, 1, bound_constant_M=M)
        # gaussian Psi underflows to exactly 0 below t ~ 0.013; stay above it
        ts = (0.05, 0.2, 0.5, 0.9) if k.is_gaussian_like else (1e-4, 0.01, 0.2, 0.9)
        for t in ts:
            s = psi(k, t)
            assert psi_inverse(k, s) == pytest.approx(t, rel=1e-9)


def test_psi_monotone():
    for name in ("gaussian", "cauchy", "laplace"):
        k = kernel_family(name, 1)
        # gaussian Psi underflows to 0 below t ~ 0.013
        start = 0.05 if k.is_gaussian_like else 1e-4
        grid = np.linspace(start, 0.999, 200)
        vals = [psi(k, float(t)) for t in grid]
        assert all(a < b for a, b in zip(vals, vals[1:]))


def test_assumption2_constants(space2):
    # |Phi' - Phi| <= C Xi(dsig) |xi|^p max(|Phi|,|Phi'|), C=1/2 gauss/laplace, 1 cauchy
    rng = np.random.default_rng(23)
    for name, C in (("gaussian", 0.5), ("laplace", 0.5), ("cauchy", 1.0)):
        k = kernel_family(name, 2)
        for _ in range(200):
            a = random_spd(rng, space2)
            b = random_spd(rng, space2)
            xi = rng.uniform(-6, 6, 2)
            lhs = abs(charfn(k, xi, a) - charfn(k, xi, b))
            from mixbound.measures import operator_norm_distance

            dsig = operator_norm_distance(a, b)
            rhs = (C * xi_fn(k, dsig) * np.linalg.norm(xi) ** k.xi_exponent
                   * max(abs(charfn(k, xi, a)), abs(charfn(k, xi, b))))
            assert lhs <= rhs * (1 + 1e-9) + 1e-300


def test_normalization_by_quadrature(space1, space2):
    rng = np.random.default_rng(31)
    for d, space in ((1, space1), (2, space2)):
        for name, tol in (("gaussian", 1e-3), ("laplace", 1e-3), ("cauchy", 2e-2)):
            k = kernel_family(name, d)
            s = random_spd(rng, space)
            theta = rng.uniform(-0.5, 0.5, d)
            L = 12.0 * math.sqrt(space.lambda_max) + 1.0
            if name == "cauchy":
                L = 120.0 if d == 1 else 60.0
            n = 20001 if d == 1 else 901
            g = np.linspace(-L, L, n)
            if d == 1:
                pts = g[:, None]
                w = (g[1] - g[0])
                total = float(density(k, pts, theta, s).sum() * w)
            else:
                pts = np.stack([np.repeat(g, n), np.tile(g, n)], axis=1)
                w = (g[1] - g[0]) ** 2
                total = float(density(k, pts, theta, s).sum() * w)
            if name == "cauchy":
                # heavy tails: add the analytic radial tail of the whitened kernel
                u = (L - float(np.linalg.norm(theta))) / math.sqrt(s.eigenvalues[0])
                tail = (2.0 / math.pi) * math.atan(1.0 / u) if d == 1 \
                    else (1.0 + u * u) ** -0.5
                total += tail
            assert abs(total - 1.0) <= tol


def test_kernel_draw_moments(space1, identity1):
    rng = derive_rng(0, "kernel-draw-test")
    g = kernel_family("gaussian", 1)
    x = draw_kernel(g, [0.25], identity1, rng, 200_000)
    assert abs(x.mean() - 0.25) < 0.01
    assert abs(x.var() - 1.0) < 0.02
    l = kernel_family("laplace", 1)
    y = draw_kernel(l, [0.0], identity1, rng, 200_000)
    assert abs(y.var() - 1.0) < 0.03  # variance equals the scale parameter

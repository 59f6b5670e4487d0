"""Laplace PDE inversion operator: characteristic polynomial identity and
weak-form residual checks against smooth compactly supported test functions.

The operator T_Sigma = Id - (1/2) sum_{jk} Sigma_jk d^2/dx_j dx_k inverts the
Laplace mixture convolution in the distributional sense; pairing the mixture
density with T*_Sigma phi must reproduce the mixing-measure integral of phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import mixture_density
from .errors import DomainError, ShapeError, UnsupportedKernelError
from .kernels import KernelFamily, kernel_family
from .measures import MixtureConfig, ParameterSpace, SpdScale

__all__ = [
    "DifferentialOperatorSpec",
    "laplace_operator",
    "char_poly",
    "weak_residual",
    "BumpTestFunction",
    "ProductBumpTestFunction",
    "standard_test_suite",
]


@dataclass(frozen=True)
class DifferentialOperatorSpec:
    """Finite-order constant-coefficient operator sum_nu c_nu d^nu.

    Multi-indices are tuples in fixed lexicographic order; off-diagonal
    second derivatives carry -Sigma_jk once per unordered pair {j, k}, so
    the characteristic polynomial matches 1 + xi' Sigma xi / 2 exactly.
    """

    order: int
    dim: int
    coefficients: dict[tuple[int, ...], float]

    def __post_init__(self):
        top = [nu for nu in self.coefficients if sum(nu) == self.order]
        if not any(abs(self.coefficients[nu]) > 0 for nu in top):
            raise DomainError("no nonzero top-order coefficient")
        zero = tuple([0] * self.dim)
        if abs(self.coefficients.get(zero, 0.0) - 1.0) > 1e-12:
            raise DomainError("normalization forces c_0 = 1")


def laplace_operator(scale: SpdScale) -> DifferentialOperatorSpec:
    """Order-2 inversion operator for the Laplace kernel with scale Sigma."""
    d = scale.dim
    coeffs: dict[tuple[int, ...], float] = {tuple([0] * d): 1.0}
    m = scale.matrix
    for j in range(d):
        nu = [0] * d
        nu[j] = 2
        coeffs[tuple(nu)] = -0.5 * m[j, j]
    for j in range(d):
        for kk in range(j + 1, d):
            nu = [0] * d
            nu[j] = 1
            nu[kk] = 1
            coeffs[tuple(nu)] = -m[j, kk]
    return DifferentialOperatorSpec(order=2, dim=d, coefficients=coeffs)


def char_poly(opspec: DifferentialOperatorSpec, xi) -> complex:
    """Q_Sigma(xi) = sum_nu c_nu (-i xi)^nu."""
    x = np.asarray(xi, dtype=float).ravel()
    if x.shape[0] != opspec.dim:
        raise ShapeError("xi dimension does not match operator")
    total = 0.0 + 0.0j
    for nu, c in opspec.coefficients.items():
        term = complex(c)
        for comp, power in zip(x, nu):
            term *= (-1j * comp) ** power
        total += term
    return complex(total)


class BumpTestFunction:
    """Scaled radial bump exp(-1/(1 - ||u||^2)), u = (x - center)/radius.

    Analytic value, gradient, and Hessian; support is the closed ball of
    the given radius around the center.
    """

    def __init__(self, center, radius: float, label: str = "radial-bump"):
        self.center = np.asarray(center, dtype=float).ravel()
        self.radius = float(radius)
        self.label = label
        if self.radius <= 0:
            raise DomainError("radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def support_box(self):
        return self.center - self.radius, self.center + self.radius

    def _parts(self, x):
        xs = np.atleast_2d(np.asarray(x, dtype=float))
        u = (xs - self.center[None, :]) / self.radius
        t = np.sum(u * u, axis=1)
        inside = t < 1.0
        g = np.zeros_like(t)
        gp = np.zeros_like(t)
        gpp = np.zeros_like(t)
        ti = t[inside]
        one = 1.0 - ti
        g[inside] = np.exp(-1.0 / one)
        gp[inside] = -g[inside] / one ** 2
        gpp[inside] = g[inside] * (1.0 / one ** 4 - 2.0 / one ** 3)
        return xs, u, g, gp, gpp, inside

    def value(self, x):
        _, _, g, _, _, _ = self._parts(x)
        return g

    def gradient(self, x):
        xs, u, g, gp, _, _ = self._parts(x)
        return gp[:, None] * 2.0 * u / self.radius

    def hessian(self, x):
        xs, u, g, gp, gpp, _ = self._parts(x)
        n, d = u.shape
        h = np.zeros((n, d, d))
        outer = u[:, :, None] * u[:, None, :]
        eye = np.eye(d)[None, :, :]
        h = (gpp[:, None, None] * 4.0 * outer + gp[:, None, None] * 2.0 * eye)
        return h / self.radius ** 2


class ProductBumpTestFunction:
    """Product of univariate bumps, one per coordinate."""

    def __init__(self, centers, radii, label: str = "product-bump"):
        self.centers = np.asarray(centers, dtype=float).ravel()
        self.radii = np.asarray(radii, dtype=float).ravel()
        self.label = label
        if np.any(self.radii <= 0):
            raise DomainError("radii must be positive")

    @property
    def dim(self) -> int:
        return self.centers.shape[0]

    def support_box(self):
        return self.centers - self.radii, self.centers + self.radii

    def _factors(self, x):
        xs = np.atleast_2d(np.asarray(x, dtype=float))
        u = (xs - self.centers[None, :]) / self.radii[None, :]
        t = u * u
        inside = t < 1.0
        f = np.zeros_like(t)
        fp = np.zeros_like(t)
        fpp = np.zeros_like(t)
        ti = t[inside]
        one = 1.0 - ti
        g = np.exp(-1.0 / one)
        gp = -g / one ** 2
        gpp = g * (1.0 / one ** 4 - 2.0 / one ** 3)
        ui = u[inside]
        f[inside] = g
        fp[inside] = gp * 2.0 * ui
        fpp[inside] = gpp * 4.0 * ui * ui + gp * 2.0
        fp = fp / self.radii[None, :]
        fpp = fpp / self.radii[None, :] ** 2
        return f, fp, fpp

    def value(self, x):
        f, _, _ = self._factors(x)
        return np.prod(f, axis=1)

    def hessian(self, x):
        f, fp, fpp = self._factors(x)
        n, d = f.shape
        h = np.zeros((n, d, d))
        for j in range(d):
            for kk in range(d):
                term = np.ones(n)
                for l in range(d):
                    if l == j == kk:
                        term = term * fpp[:, l]
                    elif l in (j, kk):
                        term = term * fp[:, l]
                    else:
                        term = term * f[:, l]
                h[:, j, kk] = term
        return h


def standard_test_suite(space: ParameterSpace):
    """The fixed test functions used by the weak-residual acceptance check:
    covering bumps at several centers/radii, a product bump, and the
    disjoint-support bump placed just outside the location ball."""
    d = space.dim
    R = space.radius
    fns = [
        BumpTestFunction(np.zeros(d), 2.0 * R + 1.0, label="covering-bump"),
        BumpTestFunction(np.full(d, 0.3 * R / math.sqrt(d)), 1.5 * R + 1.0,
                         label="offset-bump"),
        BumpTestFunction(np.zeros(d), 0.8 * R, label="partial-bump"),
        ProductBumpTestFunction(np.zeros(d), np.full(d, 1.6 * R + 1.0),
                                label="product-bump"),
    ]
    center = np.zeros(d)
    center[0] = R + 1.5
    fns.append(BumpTestFunction(center, 0.5, label="disjoint-bump"))
    return fns


def _adjoint_apply(scale: SpdScale, fn, pts: np.ndarray) -> np.ndarray:
    """T*_Sigma phi = phi - (1/2) sum_jk Sigma_jk d^2 phi / dx_j dx_k."""
    val = fn.value(pts)
    hess = fn.hessian(pts)
    lap = np.einsum("jk,njk->n", scale.matrix, hess)
    return val - 0.5 * lap


def weak_residual(G: MixtureConfig, test_fn, budget: int,
                  kernel: KernelFamily | None = None) -> float:
    """Signed residual <p_G, T*_Sigma phi> - sum_j w_j phi(theta_j).

    Midpoint tensor quadrature over the test function's support box; nodes
    are cell midpoints, which keeps them off the mixture atoms where the
    d >= 2 Laplace density has its integrable singularity.
    """
    k = kernel or kernel_family("laplace", G.space.dim)
    if k.family != "laplace":
        raise UnsupportedKernelError("weak_residual is defined for the laplace kernel")
    d = G.space.dim
    lo, hi = test_fn.support_box()
    n_axis = max(8, int(round(budget ** (1.0 / d))))
    axes = [np.linspace(lo[j], hi[j], n_axis + 1) for j in range(d)]
    mids = [0.5 * (ax[:-1] + ax[1:]) for ax in axes]
    steps = [ax[1] - ax[0] for ax in axes]
    if d == 1:
        pts = mids[0][:, None]
    elif d == 2:
        pts = np.stack([np.repeat(mids[0], n_axis), np.tile(mids[1], n_axis)], axis=1)
    else:
        grids = np.meshgrid(*mids, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
    cell = float(np.prod(steps))
    integrand = mixture_density(G, k, pts) * _adjoint_apply(G.scale, test_fn, pts)
    pairing = float(np.sum(integrand) * cell)
    point_mass = float(np.sum(G.mixing.weights * test_fn.value(G.mixing.atoms)))
    return pairing - point_mass

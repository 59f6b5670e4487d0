"""The four kernel families: densities, characteristic functions,
smoothness descriptors, and the bound ingredients (Psi, Xi, p).

Family names: "gaussian", "gaussian_isotropic" ("gaussian-iso" on the CLI),
"cauchy", "laplace".  All functions are pure; kernel draws take a caller
generator.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, UnsupportedKernelError
from .measures import ParameterSpace, SpdScale
from .specfun import bessel_k, gamma_fn

_BESSEL_LOCK = threading.RLock()
_BESSEL_TABLES: dict[float, tuple[np.ndarray, np.ndarray]] = {}
_BESSEL_ZMAX = 80.0


def _bessel_k_bulk(nu: float, z: np.ndarray) -> np.ndarray:
    """Vectorized K_nu on large arrays via a cached log-log table.

    The table is built once per order from the exact integral representation
    in specfun; interpolation error is ~1e-6 relative, far below the
    quadrature tolerances of the density paths that call this.  Beyond the
    table range the leading asymptotic sqrt(pi/2z) e^{-z} takes over (the
    density there is below 1e-30).
    """
    if abs(nu - round(nu - 0.5) - 0.5) < 1e-14 and nu >= 0.5:
        return bessel_k(nu, z)
    with _BESSEL_LOCK:
        if nu not in _BESSEL_TABLES:
            grid = np.geomspace(1e-9, _BESSEL_ZMAX, 30001)
            vals = bessel_k(nu, grid)
            _BESSEL_TABLES[nu] = (np.log(grid), np.log(vals))
        log_grid, log_vals = _BESSEL_TABLES[nu]
    out = np.empty_like(z)
    small = z < 1e-9
    large = z > _BESSEL_ZMAX
    mid = ~(small | large)
    if np.any(mid):
        out[mid] = np.exp(np.interp(np.log(z[mid]), log_grid, log_vals))
    if np.any(small):
        out[small] = bessel_k(nu, np.maximum(z[small], 1e-300))
    if np.any(large):
        zl = z[large]
        out[large] = np.sqrt(math.pi / (2.0 * zl)) * np.exp(-np.minimum(zl, 745.0))
    return out

__all__ = [
    "SmoothnessClass",
    "KernelFamily",
    "kernel_family",
    "FAMILY_NAMES",
    "density",
    "charfn",
    "smoothness_envelope",
    "psi",
    "psi_inverse",
    "xi_fn",
    "xi_inverse",
    "draw_kernel",
]

FAMILY_NAMES = ("gaussian", "gaussian_isotropic", "cauchy", "laplace")

_CLI_ALIASES = {
    "gaussian": "gaussian",
    "gaussian-iso": "gaussian_isotropic",
    "gaussian_isotropic": "gaussian_isotropic",
    "cauchy": "cauchy",
    "laplace": "laplace",
}


@dataclass(frozen=True)
class SmoothnessClass:
    kind: str  # "super_smooth" | "ordinary_smooth"
    order: float  # alpha or beta

    def __post_init__(self):
        if self.kind not in ("super_smooth", "ordinary_smooth"):
            raise DomainError(f"unknown smoothness kind {self.kind!r}")
        if not self.order > 0:
            raise DomainError("smoothness order must be positive")


@dataclass(frozen=True)
class KernelFamily:
    """Descriptor bundling a kernel family with its bound ingredients."""

    family: str
    dim: int
    smoothness: SmoothnessClass
    xi_exponent: float
    bound_constant_M: float = 1.0

    @property
    def is_gaussian_like(self) -> bool:
        return self.family in ("gaussian", "gaussian_isotropic")


def kernel_family(name: str, dim: int, bound_constant_M: float = 1.0) -> KernelFamily:
    """Build the descriptor for one of the four supported families."""
    if name not in _CLI_ALIASES:
        raise UnsupportedKernelError(f"unknown kernel family {name!r}")
    fam = _CLI_ALIASES[name]
    if dim < 1:
        raise ShapeError("dim must be >= 1")
    if bound_constant_M <= 0:
        raise DomainError("bound_constant_M must be positive")
    if fam in ("gaussian", "gaussian_isotropic"):
        smooth = SmoothnessClass("super_smooth", 2.0)
        p = 2.0
    elif fam == "cauchy":
        smooth = SmoothnessClass("super_smooth", 1.0)
        p = 1.0
    else:
        smooth = SmoothnessClass("ordinary_smooth", 2.0)
        p = 2.0
    return KernelFamily(family=fam, dim=dim, smoothness=smooth,
                        xi_exponent=p, bound_constant_M=bound_constant_M)


def _check_isotropic(k: KernelFamily, scale: SpdScale):
    if k.family != "gaussian_isotropic":
        return
    m = scale.matrix
    s = m[0, 0]
    if not np.allclose(m, s * np.eye(scale.dim), atol=1e-10 * max(1.0, abs(s))):
        raise ShapeError("gaussian_isotropic requires scale = sigma^2 * I_d")


def _prep_points(k: KernelFamily, x, theta) -> tuple[np.ndarray, bool]:
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    th = np.asarray(theta, dtype=float).ravel()
    if xs.shape[1] != k.dim or th.shape[0] != k.dim:
        raise ShapeError(
            f"points have dim {xs.shape[1]}, theta {th.shape[0]}, kernel {k.dim}"
        )
    return xs - th[None, :], scalar


def density(k: KernelFamily, x, theta, scale: SpdScale):
    """Kernel density f(x | theta, Sigma); vectorized over rows of x."""
    if scale.dim != k.dim:
        raise ShapeError("scale dimension does not match kernel")
    _check_isotropic(k, scale)
    diff, scalar = _prep_points(k, x, theta)
    q = scale.quad_form_inv(diff)
    d = k.dim
    det = scale.det
    if k.is_gaussian_like:
        out = np.exp(-0.5 * q) / ((2.0 * math.pi) ** (d / 2.0) * math.sqrt(det))
    elif k.family == "cauchy":
        norm = gamma_fn((1.0 + d) / 2.0) / (math.pi ** ((d + 1) / 2.0) * math.sqrt(det))
        out = norm * (1.0 + q) ** (-(d + 1) / 2.0)
    else:  # laplace
        if d == 1:
            sigma = scale.matrix[0, 0]
            out = np.exp(-np.sqrt(2.0 * q)) / math.sqrt(2.0 * sigma)
        else:
            # integrable singularity at q = 0: clamp the Mahalanobis radius
            z = np.sqrt(2.0 * np.maximum(q, 1e-16))
            nu = (d - 2) / 2.0
            out = (2.0 / ((2.0 * math.pi) ** (d / 2.0) * math.sqrt(det))
                   * (np.maximum(q, 1e-16) / 2.0) ** ((2.0 - d) / 4.0)
                   * _bessel_k_bulk(abs(nu), z))
    return float(out[0]) if scalar else out


def charfn(k: KernelFamily, xi, scale: SpdScale):
    """Characteristic function of f(.|0, Sigma) at xi (closed form, real)."""
    if scale.dim != k.dim:
        raise ShapeError("scale dimension does not match kernel")
    _check_isotropic(k, scale)
    xs = np.asarray(xi, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != k.dim:
        raise ShapeError("xi dimension mismatch")
    quad = np.einsum("ni,ij,nj->n", xs, scale.matrix, xs)
    if k.is_gaussian_like:
        out = np.exp(-0.5 * quad)
    elif k.family == "cauchy":
        out = np.exp(-np.sqrt(np.maximum(quad, 0.0)))
    else:
        out = 1.0 / (1.0 + 0.5 * quad)
    out = out.astype(complex)
    return complex(out[0]) if scalar else out


def smoothness_envelope(k: KernelFamily, xi_norm: float, space: ParameterSpace):
    """(lower, upper) bracket for |Phi_Sigma(xi)| over all admissible Sigma.

    Constants come from the eigenvalue extremes, the tightest admissible
    choice for each family.
    """
    if xi_norm < 0:
        raise DomainError("xi_norm must be nonnegative")
    t = xi_norm
    lo_e, hi_e = space.lambda_min, space.lambda_max
    if k.is_gaussian_like:
        return math.exp(-0.5 * hi_e * t * t), math.exp(-0.5 * lo_e * t * t)
    if k.family == "cauchy":
        return math.exp(-math.sqrt(hi_e) * t), math.exp(-math.sqrt(lo_e) * t)
    beta = k.smoothness.order
    lower_c = min(1.0, 2.0 / hi_e)
    upper_c = max(1.0, 2.0 / lo_e)
    return lower_c / (1.0 + t ** beta), upper_c / (1.0 + t ** beta)


def psi(k: KernelFamily, t: float) -> float:
    """The scale-discrepancy transfer function Psi of the kernel's bound.

    Gaussian: exp(-M log(1/t)/t) on t in (0, 1); Cauchy: t^2; Laplace: t.
    Psi(0) is defined as 0 by continuous extension.
    """
    if t < 0:
        raise DomainError("psi requires t >= 0")
    if t == 0.0:
        return 0.0
    if k.is_gaussian_like:
        if t >= 1.0:
            raise DomainError("gaussian Psi is restricted to t in (0, 1)")
        return math.exp(k.bound_constant_M * math.log(t) / t)
    if k.family == "cauchy":
        return t * t
    return t


def psi_inverse(k: KernelFamily, s: float) -> float:
    """Inverse of psi; gaussian branch solved by bisection on (0, 1)."""
    if s < 0:
        raise DomainError("psi_inverse requires s >= 0")
    if s == 0.0:
        return 0.0
    if k.family == "cauchy":
        return math.sqrt(s)
    if k.family == "laplace":
        return s
    if s >= 1.0:
        raise DomainError("gaussian Psi takes values in (0, 1)")
    target = math.log(s) / k.bound_constant_M  # solve log(t)/t = target
    lo, hi = 1e-300, 1.0 - 1e-16
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.log(mid) / mid < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def xi_fn(k: KernelFamily, t: float) -> float:
    """The characteristic-function modulus-of-continuity function Xi."""
    if t < 0:
        raise DomainError("xi requires t >= 0")
    if k.family == "cauchy":
        return math.sqrt(t)
    return t


def xi_inverse(k: KernelFamily, s: float) -> float:
    if s < 0:
        raise DomainError("xi_inverse requires s >= 0")
    if k.family == "cauchy":
        return s * s
    return s


def draw_kernel(k: KernelFamily, theta, scale: SpdScale, rng: np.random.Generator,
                size: int) -> np.ndarray:
    """Sample `size` points from f(.|theta, Sigma).

    Draw order per call: the radial mixing variable first (laplace:
    exponential, cauchy: chi-square(1)), then a (size, d) standard normal
    block.  Gaussian draws only the normal block.
    """
    th = np.asarray(theta, dtype=float).ravel()
    d = k.dim
    root = scale.sqrt()
    if k.is_gaussian_like:
        z = rng.standard_normal((size, d))
        return th[None, :] + z @ root.T
    if k.family == "laplace":
        w = rng.exponential(scale=1.0, size=size)
        z = rng.standard_normal((size, d))
        return th[None, :] + np.sqrt(w)[:, None] * (z @ root.T)
    v = rng.chisquare(1, size=size)
    v = np.maximum(v, 1e-300)
    z = rng.standard_normal((size, d))
    return th[None, :] + (z @ root.T) / np.sqrt(v)[:, None]

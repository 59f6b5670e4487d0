"""Numeric realization of the Kantorovich dual-witness pipeline:
McShane-Whitney extension, smooth radial cutoff, mollifier, Jackson kernel,
band-limited convolution, and certified approximation gaps.

Restricted to d in {1, 2}: every convolution here is direct quadrature over
a compact effective support, chosen for transparency over speed.  Radial
profile tables for the cutoff and the mollifier normalizer are built once
per (d, R) under a lock and then shared freely.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .density import gl_nodes_weights
from .errors import DomainError, ShapeError, UnsupportedDimensionError
from .measures import DiscreteMeasure, ParameterSpace
from .transport import TransportPlan, w1_exact

__all__ = [
    "WitnessFunction",
    "SmoothingToolkit",
    "witness_from_plan",
    "witness_from_measures",
    "mcshane_extend",
    "cutoff_eta",
    "eta_gradient_sup",
    "mollifier_psi",
    "mollifier_first_moment",
    "jackson_kernel",
    "jackson_ft",
    "jackson_first_moment",
    "bandlimit",
    "approximation_certificate",
]

_LOCK = threading.RLock()
_ETA_TABLES: dict[tuple[int, float], tuple[np.ndarray, np.ndarray, float]] = {}
_RHO_NORMALIZERS: dict[int, float] = {}
_MK_CACHE: dict[int, float] = {}


@dataclass(frozen=True)
class WitnessFunction:
    """A 1-Lipschitz function known at finitely many anchor points."""

    sample_atoms: np.ndarray   # (k, d)
    values: np.ndarray         # (k,)
    lipschitz_const: float = 1.0

    @property
    def dim(self) -> int:
        return self.sample_atoms.shape[1]


def witness_from_plan(plan: TransportPlan) -> WitnessFunction:
    """Kantorovich witness evaluated on the union support of a solved plan.

    phi(x) = min_j (||x - y_j|| - v_j) is 1-Lipschitz and agrees with the LP
    duals (u on sources, -v on targets) at optimum; values are shifted so
    the first canonical atom maps to 0.
    """
    atoms = np.vstack([plan.source_atoms, plan.target_atoms])
    seen = {}
    keep = []
    for idx, a in enumerate(atoms):
        key = tuple(a.tolist())
        if key not in seen:
            seen[key] = idx
            keep.append(idx)
    atoms = atoms[keep]
    v = plan.dual_potentials[1]
    diff = atoms[:, None, :] - plan.target_atoms[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    values = np.min(dist - v[None, :], axis=1)
    values = values - values[0]
    return WitnessFunction(sample_atoms=atoms, values=values)


def witness_from_measures(P: DiscreteMeasure, Pp: DiscreteMeasure) -> WitnessFunction:
    return witness_from_plan(w1_exact(P, Pp))


def mcshane_extend(w: WitnessFunction, x):
    """Infimal-convolution extension: min over anchors of value + ||x - y||."""
    if w.sample_atoms.shape[0] == 0:
        raise DomainError("witness has no anchor points")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != w.dim:
        raise ShapeError("point dimension does not match witness")
    diff = xs[:, None, :] - w.sample_atoms[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    out = np.min(w.values[None, :] + w.lipschitz_const * dist, axis=1)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# mollifier and cutoff
# ---------------------------------------------------------------------------

def _rho_radial(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _rho_normalizer(d: int) -> float:
    """C_rho(d) = int_{B(0,1)} exp(-1/(1-||x||^2)) dx via radial quadrature."""
    with _LOCK:
        if d not in _RHO_NORMALIZERS:
            from .specfun import sphere_surface_area

            edges = np.linspace(0.0, 1.0, 257)
            nodes, wts = gl_nodes_weights(edges, 10)
            radial = float(np.sum(_rho_radial(nodes) * nodes ** (d - 1) * wts))
            _RHO_NORMALIZERS[d] = sphere_surface_area(d) * radial
    return _RHO_NORMALIZERS[d]


def mollifier_psi(d: int, x):
    """Normalized bump psi = rho / C_rho(d), supported on the unit ball."""
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != d:
        raise ShapeError("point dimension does not match d")
    r = np.sqrt(np.sum(xs * xs, axis=1))
    out = _rho_radial(r) / _rho_normalizer(d)
    return float(out[0]) if scalar else out


def mollifier_first_moment(d: int) -> float:
    """M_psi = int ||x|| psi(x) dx."""
    from .specfun import sphere_surface_area

    edges = np.linspace(0.0, 1.0, 257)
    nodes, wts = gl_nodes_weights(edges, 10)
    radial = float(np.sum(_rho_radial(nodes) * nodes ** d * wts))
    return sphere_surface_area(d) * radial / _rho_normalizer(d)


def _eta_profile_value(r: float, d: int, R: float) -> float:
    """d-dimensional convolution (1_A * psi_eps)(r e_1), A = ball(3R/2), eps = R/2."""
    a = 1.5 * R
    eps = 0.5 * R
    if r <= a - eps:
        return 1.0
    if r >= a + eps:
        return 0.0
    edges = np.linspace(0.0, 1.0, 65)
    nodes, wts = gl_nodes_weights(edges, 8)  # unit-ball radial variable
    rho = nodes * eps
    psi_vals = _rho_radial(nodes) / _rho_normalizer(d)
    if d == 1:
        # 1-d: integrate psi_eps over [r - a, r + a]; support is [-eps, eps]
        lo = max(-eps, r - a)
        hi = min(eps, r + a)
        if hi <= lo:
            return 0.0
        e2 = np.linspace(lo, hi, 129)
        n2, w2 = gl_nodes_weights(e2, 8)
        return float(np.sum(_rho_radial(np.abs(n2) / eps) / _rho_normalizer(1) / eps * w2))
    if d == 2:
        c = (r * r + rho * rho - a * a) / (2.0 * r * rho)
        angle = 2.0 * np.arccos(np.clip(c, -1.0, 1.0))
        angle[c <= -1.0] = 2.0 * math.pi
        angle[c >= 1.0] = 0.0
        dens = psi_vals / eps ** 2
        return float(np.sum(dens * rho * angle * (wts * eps)))
    raise UnsupportedDimensionError("cutoff profile implemented for d in {1, 2}")


def _eta_table(d: int, R: float):
    key = (d, round(R, 12))
    with _LOCK:
        if key not in _ETA_TABLES:
            grid = np.linspace(0.0, 2.0 * R * 1.01, 4097)
            vals = np.array([_eta_profile_value(float(r), d, R) for r in grid])
            vals[grid <= R] = 1.0
            vals[grid >= 2.0 * R] = 0.0
            deriv = np.gradient(vals, grid)
            m_eta = float(np.max(np.abs(deriv)))
            _ETA_TABLES[key] = (grid, vals, m_eta)
    return _ETA_TABLES[key]


def cutoff_eta(R: float, x, dim: int | None = None):
    """Smooth radial cutoff: 1 on the R-ball, 0 outside the 2R-ball.

    Implemented as the exact d-dimensional convolution 1_{ball(3R/2)} * psi_{R/2}
    through a dense precomputed radial profile (linear interpolation).
    """
    if R <= 0:
        raise DomainError("R must be positive")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    d = dim if dim is not None else xs.shape[1]
    grid, vals, _ = _eta_table(d, R)
    r = np.sqrt(np.sum(xs * xs, axis=1))
    out = np.interp(r, grid, vals, left=1.0, right=0.0)
    out[r <= R] = 1.0
    out[r >= 2.0 * R] = 0.0
    return float(out[0]) if scalar else out


def eta_gradient_sup(R: float, d: int) -> float:
    """M_eta: numerically largest radial slope of the cutoff profile."""
    return _eta_table(d, R)[2]


# ---------------------------------------------------------------------------
# Jackson kernel
# ---------------------------------------------------------------------------

def _sinc(u: np.ndarray) -> np.ndarray:
    out = np.ones_like(u)
    nz = u != 0
    out[nz] = np.sin(u[nz]) / u[nz]
    return out


def jackson_kernel(d: int, x):
    """K(x) = (3/(8 pi sqrt(d)))^d prod_i sinc^4(x_i / (4 sqrt(d)))."""
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != d:
        raise ShapeError("point dimension does not match d")
    c = 3.0 / (8.0 * math.pi * math.sqrt(d))
    out = c ** d * np.prod(_sinc(xs / (4.0 * math.sqrt(d))) ** 4, axis=1)
    return float(out[0]) if scalar else out


def _cubic_bspline(x: np.ndarray) -> np.ndarray:
    """Centered cardinal cubic B-spline (4-fold convolution of 1_{[-1/2,1/2]})."""
    ax = np.abs(x)
    out = np.zeros_like(ax)
    near = ax <= 1.0
    out[near] = 2.0 / 3.0 - ax[near] ** 2 + 0.5 * ax[near] ** 3
    mid = (ax > 1.0) & (ax < 2.0)
    out[mid] = (2.0 - ax[mid]) ** 3 / 6.0
    return out


def jackson_ft(d: int, xi):
    """Fourier transform of the Jackson kernel: product of scaled cubic
    B-splines, equal to 1 at the origin and exactly 0 outside the cube of
    half-width 1/sqrt(d) (hence outside the unit ball)."""
    xs = np.asarray(xi, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != d:
        raise ShapeError("frequency dimension does not match d")
    out = np.prod(1.5 * _cubic_bspline(2.0 * math.sqrt(d) * xs), axis=1)
    return float(out[0]) if scalar else out


def jackson_first_moment(d: int) -> float:
    """Numeric M_K = int ||x|| K(x) dx plus an x^{-4} tail majorant.

    The majorant makes this a slight overestimate, which keeps the
    band-limiting certificate bound valid.
    """
    with _LOCK:
        if d in _MK_CACHE:
            return _MK_CACHE[d]
    c1 = 3.0 / (8.0 * math.pi * math.sqrt(d))

    def k1(u):
        return c1 * _sinc(u / (4.0 * math.sqrt(d))) ** 4

    if d == 1:
        T = 4000.0
        edges = np.concatenate([np.linspace(0.0, 50.0, 401),
                                np.geomspace(50.0, T, 240)])
        nodes, wts = gl_nodes_weights(edges, 10)
        val = 2.0 * float(np.sum(nodes * k1(nodes) * wts))
        tail = 2.0 * c1 * (4.0 * math.sqrt(d)) ** 4 / (2.0 * T ** 2)
        out = val + tail
    elif d == 2:
        T = 400.0
        edges = np.concatenate([np.linspace(0.0, 40.0, 161),
                                np.geomspace(40.0, T, 120)])
        n1, w1 = gl_nodes_weights(edges, 8)
        kv = k1(n1)
        xv = n1
        # quadrant symmetry: integrate over x, y >= 0 and multiply by 4
        rr = np.sqrt(xv[:, None] ** 2 + xv[None, :] ** 2)
        val = 4.0 * float(np.einsum("i,j,ij->", kv * w1, kv * w1, rr))
        # tail: ||x|| <= |x1| + |x2|, each strip bounded by the x^-4 majorant
        mass_tail = 2.0 * c1 * (4.0 * math.sqrt(d)) ** 4 / (3.0 * T ** 3)
        mom_tail = 2.0 * c1 * (4.0 * math.sqrt(d)) ** 4 / (2.0 * T ** 2)
        out = val + 2.0 * (mom_tail + mass_tail * jackson_first_moment_axis(d, T))
    else:
        raise UnsupportedDimensionError("first moment implemented for d in {1, 2}")
    with _LOCK:
        _MK_CACHE[d] = out
    return out


def jackson_first_moment_axis(d: int, T: float) -> float:
    """Crude bound for int_{|u|<=T} |u| k(u) du used in the 2-d tail term."""
    c1 = 3.0 / (8.0 * math.pi * math.sqrt(d))
    edges = np.linspace(0.0, T, 801)
    nodes, wts = gl_nodes_weights(edges, 6)
    return 2.0 * float(np.sum(nodes * c1 * _sinc(nodes / (4.0 * math.sqrt(d))) ** 4 * wts))


@dataclass(frozen=True)
class SmoothingToolkit:
    """Constants of the smoothing pipeline for one (R, d) configuration."""

    R: float
    dim: int
    M_eta: float
    M_K: float
    M_psi: float

    @classmethod
    def build(cls, R: float, dim: int) -> "SmoothingToolkit":
        if dim not in (1, 2):
            raise UnsupportedDimensionError("smoothing toolkit supports d in {1, 2}")
        return cls(R=R, dim=dim,
                   M_eta=eta_gradient_sup(R, dim),
                   M_K=jackson_first_moment(dim),
                   M_psi=mollifier_first_moment(dim))

    def bandlimit_bound(self, Lambda: float) -> float:
        """(1 + 2 R M_eta) M_K / Lambda, the sup-norm approximation bound."""
        return (1.0 + 2.0 * self.R * self.M_eta) * self.M_K / Lambda


def _tilde_h(w: WitnessFunction, space: ParameterSpace, pts: np.ndarray) -> np.ndarray:
    return mcshane_extend(w, pts) * cutoff_eta(space.radius, pts, dim=space.dim)


def _conv_nodes(space: ParameterSpace, Lambda: float):
    R = space.radius
    d = space.dim
    if d == 1:
        panels = max(64, int(math.ceil(4.0 * R * Lambda)))
        edges = np.linspace(-2.0 * R, 2.0 * R, panels + 1)
        nodes, wts = gl_nodes_weights(edges, 10)
        return nodes[:, None], wts
    panels = min(72, max(24, int(math.ceil(2.0 * R * Lambda))))
    edges = np.linspace(-2.0 * R, 2.0 * R, panels + 1)
    n1, w1 = gl_nodes_weights(edges, 6)
    pts = np.stack([np.repeat(n1, n1.size), np.tile(n1, n1.size)], axis=1)
    wts = np.repeat(w1, w1.size) * np.tile(w1, w1.size)
    return pts, wts


def bandlimit(w: WitnessFunction, space: ParameterSpace, Lambda: float, x):
    """(tilde_h * K_Lambda)(x): direct quadrature over the support of tilde_h.

    tilde_h vanishes outside the 2R-ball, so the convolution integral is
    exact over [-2R, 2R]^d up to quadrature error; no truncation tail.
    """
    if Lambda < 1.0:
        raise DomainError("Lambda must be >= 1 for the approximation bound to bind")
    if space.dim not in (1, 2):
        raise UnsupportedDimensionError("bandlimit supports d in {1, 2}")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim <= 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != space.dim:
        raise ShapeError("point dimension does not match space")
    upts, uwts = _conv_nodes(space, Lambda)
    hvals = _tilde_h(w, space, upts)
    out = np.empty(xs.shape[0])
    chunk = max(1, int(5e6 // max(upts.shape[0], 1)))
    for lo in range(0, xs.shape[0], chunk):
        block = xs[lo:lo + chunk]
        diff = block[:, None, :] - upts[None, :, :]
        kv = Lambda ** space.dim * jackson_kernel(
            space.dim, (Lambda * diff).reshape(-1, space.dim)
        ).reshape(block.shape[0], upts.shape[0])
        out[lo:lo + chunk] = kv @ (hvals * uwts)
    return float(out[0]) if scalar else out


def approximation_certificate(w: WitnessFunction, space: ParameterSpace,
                              Lambda: float, grid_size: int):
    """(sup_gap, bound): measured sup |tilde_h_Lambda - tilde_h| on a grid
    against the Lipschitz/first-moment bound (1 + 2 R M_eta) M_K / Lambda."""
    if Lambda < 1.0:
        raise DomainError("Lambda must be >= 1")
    R = space.radius
    if space.dim == 1:
        grid = np.linspace(-2.2 * R, 2.2 * R, grid_size)[:, None]
    else:
        side = max(2, int(math.sqrt(grid_size)))
        g1 = np.linspace(-2.2 * R, 2.2 * R, side)
        grid = np.stack([np.repeat(g1, side), np.tile(g1, side)], axis=1)
    gap = np.abs(bandlimit(w, space, Lambda, grid) - _tilde_h(w, space, grid))
    toolkit = SmoothingToolkit.build(R, space.dim)
    return float(np.max(gap)), toolkit.bandlimit_bound(Lambda)

"""Mixing measures, scale matrices, and the constrained parameter space.

The admissible configurations are pairs (P, Sigma) with P a finitely
supported probability measure on the closed ball of radius R and Sigma a
symmetric positive-definite matrix with eigenvalues inside
[lambda_min, lambda_max].  All types are immutable after construction and
all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateMeasureError,
    DomainError,
    EigenvalueBoxError,
    ShapeError,
    SupportViolationError,
)

__all__ = [
    "ParameterSpace",
    "DiscreteMeasure",
    "SpdScale",
    "MixtureConfig",
    "new_discrete_measure",
    "new_spd_scale",
    "operator_norm_distance",
    "jacobi_eigh",
]

_WEIGHT_TOL = 1e-12
_SYM_TOL = 1e-12


@dataclass(frozen=True)
class ParameterSpace:
    """Ambient constraints: dimension, location radius, eigenvalue box."""

    dim: int
    radius: float
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ShapeError(f"dim must be a positive integer, got {self.dim}")
        if not (self.radius > 0):
            raise DomainError(f"radius must be positive, got {self.radius}")
        if not (0 < self.lambda_min < self.lambda_max):
            raise EigenvalueBoxError(
                f"need 0 < lambda_min < lambda_max, got [{self.lambda_min}, {self.lambda_max}]"
            )


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure: atoms (m, d) and weights (m,)."""

    atoms: np.ndarray
    weights: np.ndarray
    space: ParameterSpace

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


@dataclass(frozen=True)
class SpdScale:
    """Symmetric positive-definite scale with cached eigendecomposition.

    ``eigenvalues`` are sorted descending; ``eigenvectors[:, i]`` is the unit
    eigenvector for ``eigenvalues[i]``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    space: ParameterSpace

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def det(self) -> float:
        return float(np.prod(self.eigenvalues))

    def inverse(self) -> np.ndarray:
        q, lam = self.eigenvectors, self.eigenvalues
        return (q / lam) @ q.T

    def sqrt(self) -> np.ndarray:
        q, lam = self.eigenvectors, self.eigenvalues
        return (q * np.sqrt(lam)) @ q.T

    def quad_form_inv(self, v: np.ndarray) -> np.ndarray:
        """(x - theta)^T Sigma^{-1} (x - theta) for rows v = x - theta."""
        v = np.atleast_2d(v)
        y = v @ self.eigenvectors
        return np.sum(y * y / self.eigenvalues, axis=1)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class MixtureConfig:
    """A mixing configuration G = P x delta_Sigma inside one parameter space."""

    mixing: DiscreteMeasure
    scale: SpdScale
    space: ParameterSpace

    def __post_init__(self):
        if self.mixing.dim != self.space.dim or self.scale.dim != self.space.dim:
            raise ShapeError("mixing/scale dimension does not match the parameter space")


def new_discrete_measure(atoms, weights, space: ParameterSpace) -> DiscreteMeasure:
    """Validate and normalize a discrete measure.

    Weights are rescaled to sum to one; atoms must lie in the closed ball of
    radius ``space.radius``.
    """
    a = np.asarray(atoms, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    w = np.asarray(weights, dtype=float).ravel()
    if a.ndim != 2 or a.shape[0] != w.shape[0]:
        raise ShapeError(f"atoms {a.shape} and weights {w.shape} are inconsistent")
    if a.shape[0] == 0:
        raise DegenerateMeasureError("a measure needs at least one atom")
    if a.shape[1] != space.dim:
        raise ShapeError(f"atoms have dimension {a.shape[1]}, space has {space.dim}")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(w)):
        raise ShapeError("non-finite entries in atoms or weights")
    if np.any(w < 0):
        raise DegenerateMeasureError("negative weight")
    total = w.sum()
    if total <= 0:
        raise DegenerateMeasureError("weights sum to zero")
    norms = np.sqrt(np.sum(a * a, axis=1))
    if np.any(norms > space.radius * (1 + 1e-12) + 1e-15):
        worst = float(norms.max())
        raise SupportViolationError(
            f"atom norm {worst:.6g} exceeds support radius {space.radius:.6g}"
        )
    w = w / total
    a.setflags(write=False)
    w.setflags(write=False)
    return DiscreteMeasure(atoms=a, weights=w, space=space)


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps pairs (p, q), p < q, in fixed row-major order until the
    off-diagonal Frobenius norm drops below ``tol * max(1, ||A||_F)``.
    Returns (eigenvalues descending, eigenvectors as columns).
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2) * 2.0)
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                h = a[q, q] - a[p, p]
                if abs(apq) < 1e-30 * abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    v = v[:, order]
    # sign convention: largest-magnitude component of each eigenvector positive
    for i in range(n):
        j = int(np.argmax(np.abs(v[:, i])))
        if v[j, i] < 0:
            v[:, i] = -v[:, i]
    return lam, v


def new_spd_scale(matrix, space: ParameterSpace) -> SpdScale:
    """Symmetrize, eigendecompose, and box-check a scale matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"scale matrix must be square, got shape {m.shape}")
    if m.shape[0] != space.dim:
        raise ShapeError(f"scale matrix is {m.shape[0]}x{m.shape[0]}, space has d={space.dim}")
    if not np.all(np.isfinite(m)):
        raise ShapeError("non-finite entry in scale matrix")
    sym = 0.5 * (m + m.T)
    lam, q = jacobi_eigh(sym)
    lo, hi = space.lambda_min, space.lambda_max
    slack = 1e-9 * max(1.0, hi)
    if lam[-1] < lo - slack or lam[0] > hi + slack:
        raise EigenvalueBoxError(
            f"eigenvalues {lam.tolist()} outside [{lo}, {hi}]"
        )
    sym.setflags(write=False)
    lam.setflags(write=False)
    q.setflags(write=False)
    return SpdScale(matrix=sym, eigenvalues=lam, eigenvectors=q, space=space)


def operator_norm_distance(a: SpdScale, b: SpdScale) -> float:
    """Operator norm of (a - b): largest absolute eigenvalue of the difference."""
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.matrix - b.matrix
    lam, _ = jacobi_eigh(diff)
    return float(np.max(np.abs(lam)))

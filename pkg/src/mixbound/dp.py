"""Dirichlet-process stick-breaking simulation and synthetic data generation.

Draw order (fixed for reproducibility): for each stick j the Beta variable
B_j is drawn first, then the d coordinates of the atom theta_j.  Datasets
draw all component assignments first, then a single centered kernel noise
block shifted by the assigned atoms (components share one scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError, SupportViolationError
from .kernels import KernelFamily, draw_kernel
from .measures import DiscreteMeasure, MixtureConfig, ParameterSpace, new_discrete_measure
from .rngs import derive_rng

__all__ = ["DpConfig", "stick_breaking_sample", "sample_dataset", "base_half_width"]

_MAX_STICKS = 100_000


@dataclass(frozen=True)
class DpConfig:
    """Concentration, base-measure spec, and truncation policy.

    base: ("uniform_box",) or ("uniform_box", half_width) or
          ("truncated_gaussian", sd); atoms always live in the box inscribed
          in the location ball so every draw is admissible.
    truncation: ("fixed_K", K) or ("residual_eps", eps).
    """

    concentration: float
    base: tuple = ("uniform_box",)
    truncation: tuple = ("residual_eps", 1e-4)

    def __post_init__(self):
        if not self.concentration > 0:
            raise DomainError("concentration must be positive")
        kind = self.truncation[0]
        if kind == "fixed_K":
            if int(self.truncation[1]) < 1:
                raise DomainError("fixed_K truncation needs K >= 1")
        elif kind == "residual_eps":
            eps = float(self.truncation[1])
            if not (0.0 < eps < 1.0):
                raise DomainError("residual_eps needs eps in (0, 1)")
        else:
            raise DomainError(f"unknown truncation {kind!r}")
        if self.base[0] not in ("uniform_box", "truncated_gaussian"):
            raise DomainError(f"unknown base {self.base[0]!r}")


def base_half_width(cfg: DpConfig, space: ParameterSpace) -> float:
    """Half-width of the base box, kept inside the inscribed cube of the ball."""
    inscribed = space.radius / math.sqrt(space.dim)
    if cfg.base[0] == "uniform_box" and len(cfg.base) > 1:
        hw = float(cfg.base[1])
        if hw > inscribed * (1 + 1e-12):
            raise SupportViolationError(
                f"base half-width {hw} exceeds inscribed bound {inscribed}"
            )
        return hw
    return inscribed


def _draw_base_atom(cfg: DpConfig, space: ParameterSpace,
                    rng: np.random.Generator) -> np.ndarray:
    hw = base_half_width(cfg, space)
    if cfg.base[0] == "uniform_box":
        return rng.uniform(-hw, hw, size=space.dim)
    sd = float(cfg.base[1])
    out = np.empty(space.dim)
    for i in range(space.dim):
        while True:  # rejection keeps the draw inside the box
            v = rng.normal(0.0, sd)
            if abs(v) <= hw:
                out[i] = v
                break
    return out


def stick_breaking_sample(cfg: DpConfig, space: ParameterSpace, seed: int) -> DiscreteMeasure:
    """One truncated stick-breaking draw with residual mass folded into the
    last atom, so the weights sum to one exactly."""
    rng = derive_rng(seed, "stick-breaking")
    a = cfg.concentration
    atoms = []
    weights = []
    residual = 1.0
    if cfg.truncation[0] == "fixed_K":
        K = int(cfg.truncation[1])
        for j in range(K):
            b = rng.beta(1.0, a)
            atoms.append(_draw_base_atom(cfg, space, rng))
            if j < K - 1:
                weights.append(b * residual)
                residual *= 1.0 - b
            else:
                weights.append(residual)  # fold: last atom takes the remainder
    else:
        eps = float(cfg.truncation[1])
        while True:
            b = rng.beta(1.0, a)
            atoms.append(_draw_base_atom(cfg, space, rng))
            weights.append(b * residual)
            residual *= 1.0 - b
            if residual < eps:
                weights[-1] += residual  # fold
                break
            if len(atoms) >= _MAX_STICKS:
                raise PreconditionError("stick count exceeded the safety cap")
    return new_discrete_measure(np.array(atoms), np.array(weights), space)


def sample_dataset(G0: MixtureConfig, k: KernelFamily, n: int, seed: int):
    """n i.i.d. draws from the mixture; returns (points, assignments)."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    rng = derive_rng(seed, "dataset")
    idx = rng.choice(G0.mixing.size, size=n, p=G0.mixing.weights)
    noise = draw_kernel(k, np.zeros(G0.space.dim), G0.scale, rng, n)
    return G0.mixing.atoms[idx] + noise, idx

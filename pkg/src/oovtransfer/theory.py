"""Executable constructions from the theory: the binary two-source
non-identifiability perturbation and marginal-consistency verification.

With binary X1, X3 and a finite x2 grid, the two environments pin down only
four mixtures of the generating table per grid point. Scaling one table
entry freely and adjusting the other three by closed-form factors produces a
genuinely different table satisfying exactly the same mixtures, so marginal
consistency alone cannot identify the target function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroDivisorError

_DIVISOR_FLOOR = 1e-12


@dataclass(frozen=True)
class BinaryOovInstance:
    """Generating table over binary (x1, x3) and a finite x2 grid, with the
    environment-level mixture tables it induces.

    phi has shape (2, len(x2_grid), 2) indexed [x1, x2 index, x3].
    f_a[x1, g] mixes phi over X3; f_b[g, x3] mixes phi over X1.
    """

    gamma1: float
    gamma3: float
    x2_grid: np.ndarray
    phi: np.ndarray
    f_a: np.ndarray = field(init=False)
    f_b: np.ndarray = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.gamma1 < 1.0 or not 0.0 < self.gamma3 < 1.0:
            raise ValueError("gamma1 and gamma3 must lie strictly inside (0, 1)")
        grid = np.asarray(self.x2_grid, dtype=np.float64).ravel()
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.shape != (2, grid.size, 2):
            raise ValueError(f"phi must have shape (2, {grid.size}, 2), got {phi.shape}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi table must be finite")
        grid.setflags(write=False)
        object.__setattr__(self, "x2_grid", grid)
        phi = phi.copy()
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        f_a, f_b = mixture_tables(self.gamma1, self.gamma3, phi)
        f_a.setflags(write=False)
        f_b.setflags(write=False)
        object.__setattr__(self, "f_a", f_a)
        object.__setattr__(self, "f_b", f_b)
        res = consistency_residuals(self, phi)
        if max(float(np.max(np.abs(r))) for r in res) > 1e-12:
            raise ValueError("induced mixture tables are inconsistent")


def mixture_tables(gamma1: float, gamma3: float, phi: np.ndarray):
    """The four environment mixtures induced by a generating table."""
    f_a = gamma3 * phi[:, :, 0] + (1.0 - gamma3) * phi[:, :, 1]
    f_b = np.stack(
        [
            gamma1 * phi[0, :, 0] + (1.0 - gamma1) * phi[1, :, 0],
            gamma1 * phi[0, :, 1] + (1.0 - gamma1) * phi[1, :, 1],
        ],
        axis=1,
    )
    return f_a, f_b


def consistency_residuals(instance: BinaryOovInstance, phi: np.ndarray):
    """Absolute residuals of the four mixture equations for a candidate table."""
    f_a_new, f_b_new = mixture_tables(instance.gamma1, instance.gamma3, phi)
    return (
        np.abs(f_a_new[0] - instance.f_a[0]),
        np.abs(f_a_new[1] - instance.f_a[1]),
        np.abs(f_b_new[:, 0] - instance.f_b[:, 0]),
        np.abs(f_b_new[:, 1] - instance.f_b[:, 1]),
    )


def random_instance(seed: int, x2_grid=None) -> BinaryOovInstance:
    """Generic instance with table entries away from the zero-divisor set."""
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 5.0, 21) if x2_grid is None else np.asarray(x2_grid, float)
    phi = rng.uniform(0.5, 2.0, size=(2, grid.size, 2))
    gamma1 = float(rng.uniform(0.2, 0.8))
    gamma3 = float(rng.uniform(0.2, 0.8))
    return BinaryOovInstance(gamma1=gamma1, gamma3=gamma3, x2_grid=grid, phi=phi)


def perturb_binary(instance: BinaryOovInstance, c000) -> np.ndarray:
    """Scale phi(0, x2, 0) by c000 and adjust the other entries to preserve
    all four mixture equations; returns the perturbed table.

    The three adjustment factors are the closed-form solutions of the mixture
    system, which divide by phi(0, x2, 1), phi(1, x2, 1) and phi(1, x2, 0).
    """
    c000 = np.broadcast_to(
        np.asarray(c000, dtype=np.float64), instance.x2_grid.shape
    ).copy()
    g1, g3 = instance.gamma1, instance.gamma3
    phi = instance.phi
    divisors = (phi[0, :, 1], phi[1, :, 1], phi[1, :, 0])
    if any(np.any(np.abs(d) < _DIVISOR_FLOOR) for d in divisors):
        raise ZeroDivisorError(
            "adjustment formulas divide by phi(0,x2,1), phi(1,x2,1), phi(1,x2,0); "
            "a table entry is (near-)zero"
        )
    f_a0 = instance.f_a[0]
    f_a1 = instance.f_a[1]
    f_b1 = instance.f_b[:, 1]
    scaled000 = c000 * phi[0, :, 0]

    c001 = (f_a0 - g3 * scaled000) / ((1.0 - g3) * phi[0, :, 1])
    c101 = (f_b1 - (g1 * f_a0 - g1 * g3 * scaled000) / (1.0 - g3)) / (
        (1.0 - g1) * phi[1, :, 1]
    )
    c100 = (
        f_a1 - ((1.0 - g3) * f_b1 - g1 * f_a0 + g1 * g3 * scaled000) / (1.0 - g1)
    ) / (g3 * phi[1, :, 0])

    perturbed = phi.copy()
    perturbed[0, :, 0] = scaled000
    perturbed[0, :, 1] = c001 * phi[0, :, 1]
    perturbed[1, :, 1] = c101 * phi[1, :, 1]
    perturbed[1, :, 0] = c100 * phi[1, :, 0]
    return perturbed


def table_distance(phi_a: np.ndarray, phi_b: np.ndarray) -> float:
    """Euclidean distance between two generating tables."""
    return float(np.sqrt(np.sum((np.asarray(phi_a) - np.asarray(phi_b)) ** 2)))


def check_marginal_consistency(
    f_source, f_target, x1_samples, x3_samples, x2_grid
) -> float:
    """Max over the x2 grid of |mean_i f_S(x1_i, x2) - mean_j f_T(x2, x3_j)|.

    Both predictors must accept vectorized (a, b) arguments.
    """
    x1 = np.asarray(x1_samples, dtype=np.float64).ravel()
    x3 = np.asarray(x3_samples, dtype=np.float64).ravel()
    grid = np.asarray(x2_grid, dtype=np.float64).ravel()
    if x1.size == 0 or x3.size == 0 or grid.size == 0:
        raise ValueError("samples and grid must be non-empty")
    worst = 0.0
    for x2 in grid:
        lhs = float(np.mean(np.asarray(f_source(x1, np.full_like(x1, x2)))))
        rhs = float(np.mean(np.asarray(f_target(np.full_like(x3, x2), x3))))
        worst = max(worst, abs(lhs - rhs))
        if math.isnan(worst):
            raise ValueError("predictor returned NaN during consistency check")
    return worst

"""Wasserstein-2 distances, ensemble moments and kinetic-energy diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import UsageError

SYMMETRY_TOL = 1e-12
# Eigenvalues above -EIGEN_CLAMP * max(1, scale) are treated as roundoff and
# clamped to zero; anything more negative is an indefinite input.
EIGEN_CLAMP = 1e-10
MAX_EMPIRICAL_POINTS = 4096


@dataclass(frozen=True)
class GaussianSummary:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise UsageError(f"mean {mean.shape} and covariance {cov.shape} are inconsistent")
        scale = max(1.0, float(np.max(np.abs(cov))) if cov.size else 1.0)
        if np.max(np.abs(cov - cov.T), initial=0.0) > SYMMETRY_TOL * scale:
            raise UsageError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(cov)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if np.any(w < -EIGEN_CLAMP * scale):
        raise UsageError(f"covariance is indefinite (min eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def w2_gaussian(a: GaussianSummary, b: GaussianSummary) -> float:
    """Closed-form W₂ between N(μ_a, Σ_a) and N(μ_b, Σ_b)."""
    if a.dimension != b.dimension:
        raise UsageError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    root_b = _psd_sqrt(b.covariance)
    _psd_sqrt(a.covariance)  # validates a
    cross = root_b @ a.covariance @ root_b
    w = np.linalg.eigvalsh(0.5 * (cross + cross.T))
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if np.any(w < -EIGEN_CLAMP * scale):
        raise UsageError("cross term is indefinite; inputs are not valid covariances")
    bures = np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * np.sum(np.sqrt(np.clip(w, 0, None)))
    sq = float(np.sum((a.mean - b.mean) ** 2) + bures)
    return math.sqrt(max(sq, 0.0))


def w2_empirical(A, B) -> float:
    """Exact W₂ between two uniform empirical measures of equal size.

    Solves the assignment problem on squared Euclidean costs.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape != B.shape:
        raise UsageError(f"point sets must have equal shapes, got {A.shape} and {B.shape}")
    n = A.shape[0]
    if n == 0:
        raise UsageError("point sets are empty")
    if n > MAX_EMPIRICAL_POINTS:
        raise UsageError(
            f"{n} points exceeds the exact-assignment cap of {MAX_EMPIRICAL_POINTS}; "
            "use w2_gaussian on moment summaries instead"
        )
    cost = cdist(A, B, metric="sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return math.sqrt(max(cost[rows, cols].sum() / n, 0.0))


def _select(snapshot, which: str) -> np.ndarray:
    x = np.atleast_2d(np.asarray(snapshot.x, dtype=float))
    v = np.atleast_2d(np.asarray(snapshot.v, dtype=float))
    if which == "x":
        return x
    if which == "v":
        return v
    if which == "xv":
        return np.concatenate([x, v], axis=1)
    raise UsageError(f"which must be 'x', 'v' or 'xv', got {which!r}")


def empirical_moments(snapshot, which: str = "x") -> GaussianSummary:
    """Sample mean and unbiased sample covariance of the selected coordinates."""
    pts = _select(snapshot, which)
    if pts.shape[0] < 2:
        raise UsageError("need at least 2 chains to estimate a covariance")
    return GaussianSummary(pts.mean(axis=0), np.atleast_2d(np.cov(pts, rowvar=False)))


def kinetic_energy(snapshot) -> float:
    """Mean over chains of ‖v‖²."""
    v = np.atleast_2d(np.asarray(snapshot.v, dtype=float))
    return float(np.mean(np.sum(v * v, axis=1)))


def stationary_summary(target, which: str = "x") -> GaussianSummary:
    """Moments of p* for quadratic targets: x ~ N(x*, H⁻¹), v ~ N(0, I/L)."""
    if target.stationary_covariance is None:
        raise UsageError(f"target {target.name!r} has no closed-form stationary moments")
    d = target.dimension
    vel = np.eye(d) * target.stationary_velocity_variance()
    if which == "x":
        return GaussianSummary(target.minimizer, target.stationary_covariance)
    if which == "v":
        return GaussianSummary(np.zeros(d), vel)
    if which == "xv":
        cov = np.zeros((2 * d, 2 * d))
        cov[:d, :d] = target.stationary_covariance
        cov[d:, d:] = vel
        return GaussianSummary(np.concatenate([target.minimizer, np.zeros(d)]), cov)
    raise UsageError(f"which must be 'x', 'v' or 'xv', got {which!r}")


def lyapunov_map(x, v) -> np.ndarray:
    """Image of (x, v) under g(x, v) = (x, x + v), concatenated along the last axis."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.concatenate([x, x + v], axis=-1)

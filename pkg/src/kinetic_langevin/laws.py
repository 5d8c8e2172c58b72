"""Exact laws of the chains on diagonal quadratic targets.

On f(x) = ½ Σ λᵢ (xᵢ - cᵢ)² every update is linear-Gaussian and coordinates
never mix, so the law after any number of steps from a Dirac start is a
product of per-coordinate Gaussians. Propagating the moments gives W₂ to p*
without Monte Carlo error. Coordinates with the same curvature and offset
share their moments and are propagated once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import UsageError
from .kernel import coefficients
from .model import TargetModel


@lru_cache(maxsize=64)
def _cached_coefficients(delta: float, L: float):
    return coefficients(delta, L)


def _require_quadratic(target: TargetModel):
    if target.hessian_diag is None:
        raise UsageError(f"exact laws need a quadratic target, got {target.name!r}")


@dataclass
class KineticLaw:
    """Per-coordinate moments of (x - c, v) for the kinetic chain.

    Arrays are indexed by distinct coordinate classes; ``weight`` counts the
    coordinates in each class.
    """

    lam: np.ndarray
    weight: np.ndarray
    L: float
    mx: np.ndarray
    mv: np.ndarray
    pxx: np.ndarray
    pxv: np.ndarray
    pvv: np.ndarray
    iteration: int = 0

    @classmethod
    def dirac(cls, target: TargetModel, x0) -> "KineticLaw":
        _require_quadratic(target)
        offset = np.asarray(x0, dtype=float) - target.minimizer
        keys = np.stack([target.hessian_diag, offset], axis=1)
        uniq, counts = np.unique(keys, axis=0, return_counts=True)
        k = uniq.shape[0]
        return cls(uniq[:, 0].copy(), counts.astype(float), float(target.L),
                   uniq[:, 1].copy(), np.zeros(k), np.zeros(k), np.zeros(k), np.zeros(k))

    def copy(self) -> "KineticLaw":
        return KineticLaw(self.lam, self.weight, self.L, self.mx.copy(), self.mv.copy(),
                          self.pxx.copy(), self.pxv.copy(), self.pvv.copy(), self.iteration)

    def advance(self, delta: float, n: int = 1) -> "KineticLaw":
        """Apply ``n`` transitions of step size ``delta`` in place."""
        c = _cached_coefficients(float(delta), self.L)
        a11 = 1.0 - c.b_x * self.lam
        a12 = c.a_xv
        a21 = -c.b_v * self.lam
        a22 = c.a_vv
        mx, mv, pxx, pxv, pvv = self.mx, self.mv, self.pxx, self.pxv, self.pvv
        for _ in range(n):
            mx, mv = a11 * mx + a12 * mv, a21 * mx + a22 * mv
            pxx, pxv, pvv = (
                a11 * a11 * pxx + 2 * a11 * a12 * pxv + a12 * a12 * pvv + c.sigma_xx,
                a11 * a21 * pxx + (a11 * a22 + a12 * a21) * pxv + a12 * a22 * pvv + c.sigma_xv,
                a21 * a21 * pxx + 2 * a21 * a22 * pxv + a22 * a22 * pvv + c.sigma_vv,
            )
        self.mx, self.mv, self.pxx, self.pxv, self.pvv = mx, mv, pxx, pxv, pvv
        self.iteration += n
        return self

    def w2_x(self) -> float:
        """W₂ between the x-marginal and N(c, diag(1/λ))."""
        sq = self.mx**2 + (np.sqrt(np.clip(self.pxx, 0, None)) - 1.0 / np.sqrt(self.lam)) ** 2
        return math.sqrt(float(np.sum(self.weight * sq)))

    def w2_joint(self) -> float:
        """W₂ between the (x, v) law and p* = N(c, diag(1/λ)) ⊗ N(0, I/L)."""
        a, b = 1.0 / self.lam, 1.0 / self.L
        # Σ_b^{1/2} P Σ_b^{1/2} for diagonal Σ_b = diag(a, b)
        m11, m12, m22 = a * self.pxx, math.sqrt(b) * np.sqrt(a) * self.pxv, b * self.pvv
        tr = m11 + m22
        det = np.clip(m11 * m22 - m12 * m12, 0, None)
        root_trace = np.sqrt(np.clip(tr + 2 * np.sqrt(det), 0, None))
        bures = self.pxx + self.pvv + a + b - 2 * root_trace
        sq = self.mx**2 + self.mv**2 + bures
        return math.sqrt(max(float(np.sum(self.weight * sq)), 0.0))

    def kinetic_energy(self) -> float:
        return float(np.sum(self.weight * (self.pvv + self.mv**2)))

    def covariance_x(self) -> np.ndarray:
        """Per-class position variances (same order as ``lam``)."""
        return self.pxx.copy()


@dataclass
class OverdampedLaw:
    """Per-coordinate moments of x - c for the ULA chain."""

    lam: np.ndarray
    weight: np.ndarray
    mx: np.ndarray
    pxx: np.ndarray
    iteration: int = 0

    @classmethod
    def dirac(cls, target: TargetModel, x0) -> "OverdampedLaw":
        _require_quadratic(target)
        offset = np.asarray(x0, dtype=float) - target.minimizer
        keys = np.stack([target.hessian_diag, offset], axis=1)
        uniq, counts = np.unique(keys, axis=0, return_counts=True)
        return cls(uniq[:, 0].copy(), counts.astype(float), uniq[:, 1].copy(), np.zeros(len(uniq)))

    def copy(self) -> "OverdampedLaw":
        return OverdampedLaw(self.lam, self.weight, self.mx.copy(), self.pxx.copy(), self.iteration)

    def advance(self, delta: float, n: int = 1) -> "OverdampedLaw":
        a = 1.0 - delta * self.lam
        mx, pxx = self.mx, self.pxx
        for _ in range(n):
            mx = a * mx
            pxx = a * a * pxx + 2.0 * delta
        self.mx, self.pxx = mx, pxx
        self.iteration += n
        return self

    def w2_x(self) -> float:
        sq = self.mx**2 + (np.sqrt(self.pxx) - 1.0 / np.sqrt(self.lam)) ** 2
        return math.sqrt(float(np.sum(self.weight * sq)))


def ula_stationary_variance(delta: float, lam: float = 1.0) -> float:
    """Stationary variance of x' = (1 - δλ)x + √(2δ)ζ, the AR(1) ULA chain."""
    a = 1.0 - delta * lam
    if abs(a) >= 1:
        raise UsageError("ULA chain is not stable for this step size")
    return 2.0 * delta / (1.0 - a * a)


def iterations_to_accuracy(law, delta: float, epsilon: float, max_iter: int = 10**7, metric: str = "w2_x") -> int | None:
    """Smallest n with W₂(law after n steps, p*) ≤ ε, or ``None`` if not reached."""
    law = law.copy()
    measure = getattr(law, metric)
    while law.iteration <= max_iter:
        if measure() <= epsilon:
            return law.iteration
        law.advance(delta, 1)
    return None


def run_epochs_law(target: TargetModel, epochs, x0) -> KineticLaw:
    """Exact law after running every (δᵢ, nᵢ) epoch in sequence."""
    law = KineticLaw.dirac(target, x0)
    for delta, n in epochs:
        law.advance(delta, int(n))
    return law

"""One-step Gaussian transition of the frozen-gradient underdamped diffusion.

With friction γ = 2 and inverse mass u = 1/L, integrating

    dv = -2 v dt - (1/L) ∇f(x₀) dt + √(4/L) dB,   dx = v dt

over [0, δ] from (x₀, v₀) gives a Gaussian whose coordinates are independent
and whose per-coordinate (x, v) block has covariance

    [[σ_xx, σ_xv], [σ_xv, σ_vv]].

Noise vectors ``z`` have shape ``(..., 2d)``: the first ``d`` entries drive
the position block, the last ``d`` the velocity block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InternalError, UsageError

# Below this step size b_x and σ_xx are evaluated by Taylor series; their
# closed forms lose ~eps/δ² of relative accuracy to cancellation. Twelve
# terms keep the series at machine precision up to the threshold.
SERIES_THRESHOLD = 0.05
_SERIES_TERMS = 12
# Relative slack on the 2x2 determinant before an indefinite covariance is
# treated as a bug rather than roundoff.
_PSD_RELATIVE_SLACK = 1e-12


@dataclass(frozen=True)
class ChainState:
    """Position and velocity, either one chain ``(d,)`` or an ensemble ``(M, d)``."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if x.shape != v.shape or x.ndim == 0:
            raise UsageError(f"x and v must share a non-scalar shape, got {x.shape} and {v.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise UsageError("chain state contains non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def dimension(self) -> int:
        return self.x.shape[-1]


@dataclass(frozen=True)
class KernelCoefficients:
    """Mean and covariance coefficients of the one-step transition.

    The conditional means are ``v' = a_vv v - b_v g`` and
    ``x' = x + a_xv v - b_x g`` where ``g = ∇f(x)``.
    """

    delta: float
    L: float
    a_vv: float
    b_v: float
    a_xv: float
    b_x: float
    sigma_xx: float
    sigma_vv: float
    sigma_xv: float

    @classmethod
    def zero_step(cls, L: float) -> "KernelCoefficients":
        """The δ → 0⁺ limit: identity mean map, no noise."""
        return cls(0.0, float(L), 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def covariance(self) -> np.ndarray:
        return np.array([[self.sigma_xx, self.sigma_xv], [self.sigma_xv, self.sigma_vv]])

    def cholesky(self) -> tuple[float, float, float]:
        """Lower-triangular factor (c11, c21, c22) of the per-coordinate covariance."""
        sxx, svv, sxv = self.sigma_xx, self.sigma_vv, self.sigma_xv
        det = sxx * svv - sxv * sxv
        if det < 0:
            if det < -_PSD_RELATIVE_SLACK * sxx * svv:
                raise InternalError(
                    f"kernel covariance is indefinite at delta={self.delta}: det={det}"
                )
            det = 0.0
        if sxx == 0.0:
            return 0.0, 0.0, math.sqrt(svv)
        c11 = math.sqrt(sxx)
        return c11, sxv / c11, math.sqrt(det / sxx)


def _series(y: float, start: int, coef) -> float:
    """Σ_{k ≥ start} coef(k) y^k / k!, truncated after a fixed number of terms."""
    term = y**start / math.factorial(start)
    total = 0.0
    for k in range(start, start + _SERIES_TERMS):
        total += coef(k) * term
        term *= y / (k + 1)
    return total


def _shifted_expm1(y: float) -> float:
    """y + expm1(-y) = y - (1 - e^{-y}), accurate for all y > 0."""
    if y < 2 * SERIES_THRESHOLD:
        return _series(y, 2, lambda k: (-1.0) ** k)
    return y + math.expm1(-y)


def _position_variance_scaled(y: float) -> float:
    """L·σ_xx written in y = 2δ: y/2 - (1 - e^{-y}) + (1 - e^{-2y})/4."""
    if y < 2 * SERIES_THRESHOLD:
        return _series(y, 3, lambda k: (-1.0) ** k * (1.0 - 2.0 ** (k - 2)))
    return 0.5 * y + math.expm1(-y) - 0.25 * math.expm1(-2.0 * y)


def coefficients(delta: float, L: float) -> KernelCoefficients:
    """Transition coefficients for step size ``delta`` and smoothness ``L``.

    Args:
        delta: Step size, 0 < delta < 1.
        L: Smoothness constant, > 0.

    Raises:
        UsageError: If ``delta`` is outside (0, 1) or ``L`` is not positive.
    """
    delta = float(delta)
    L = float(L)
    if not (0.0 < delta < 1.0):
        raise UsageError(f"step size must satisfy 0 < delta < 1, got {delta}")
    if not (L > 0.0 and math.isfinite(L)):
        raise UsageError(f"L must be positive, got {L}")
    y = 2.0 * delta
    one_minus_decay = -math.expm1(-y)  # 1 - e^{-2δ}
    coeffs = KernelCoefficients(
        delta=delta,
        L=L,
        a_vv=math.exp(-y),
        b_v=one_minus_decay / (2.0 * L),
        a_xv=0.5 * one_minus_decay,
        b_x=_shifted_expm1(y) / (4.0 * L),
        sigma_xx=_position_variance_scaled(y) / L,
        sigma_vv=-math.expm1(-2.0 * y) / L,
        # 1 + e^{-4δ} - 2e^{-2δ} = (1 - e^{-2δ})²
        sigma_xv=one_minus_decay**2 / (2.0 * L),
    )
    coeffs.cholesky()
    return coeffs


def coefficients_closed_form(delta: float, L: float) -> KernelCoefficients:
    """Direct transcription of the closed forms, without the small-δ series.

    Kept for cross-checking the stable path; loses accuracy as δ → 0.
    """
    e2, e4 = math.exp(-2 * delta), math.exp(-4 * delta)
    return KernelCoefficients(
        delta=delta,
        L=L,
        a_vv=e2,
        b_v=(1 - e2) / (2 * L),
        a_xv=0.5 * (1 - e2),
        b_x=(delta - 0.5 * (1 - e2)) / (2 * L),
        sigma_xx=(delta - 0.25 * e4 - 0.75 + e2) / L,
        sigma_vv=(1 - e4) / L,
        sigma_xv=(1 + e4 - 2 * e2) / (2 * L),
    )


def _check_pair(state: ChainState, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != state.x.shape:
        raise UsageError(f"gradient shape {g.shape} does not match state shape {state.x.shape}")
    return g


def conditional_moments(coeffs: KernelCoefficients, state: ChainState, grad_at_x0):
    """Conditional means (mean_x, mean_v) of the next state."""
    g = _check_pair(state, grad_at_x0)
    mean_v = coeffs.a_vv * state.v - coeffs.b_v * g
    mean_x = state.x + coeffs.a_xv * state.v - coeffs.b_x * g
    return mean_x, mean_v


def advance(coeffs: KernelCoefficients, x, v, g, z_x, z_v):
    """Unchecked transition on raw arrays; the sampler's inner loop."""
    c11, c21, c22 = coeffs.cholesky()
    x_new = x + coeffs.a_xv * v - coeffs.b_x * g + c11 * z_x
    v_new = coeffs.a_vv * v - coeffs.b_v * g + (c21 * z_x + c22 * z_v)
    return x_new, v_new


def step_with_noise(coeffs: KernelCoefficients, state: ChainState, grad_at_x0, z) -> ChainState:
    """Transition driven by caller-supplied standard normals ``z`` of shape (..., 2d)."""
    g = _check_pair(state, grad_at_x0)
    z = np.asarray(z, dtype=float)
    d = state.dimension
    if z.shape != state.x.shape[:-1] + (2 * d,):
        raise UsageError(f"noise must have shape {state.x.shape[:-1] + (2 * d,)}, got {z.shape}")
    x_new, v_new = advance(coeffs, state.x, state.v, g, z[..., :d], z[..., d:])
    return ChainState(x_new, v_new)


def step(coeffs: KernelCoefficients, state: ChainState, grad_at_x0, rng: np.random.Generator) -> ChainState:
    """Draw the next state from the Gaussian transition."""
    z = rng.standard_normal(state.x.shape[:-1] + (2 * state.dimension,))
    return step_with_noise(coeffs, state, grad_at_x0, z)

"""Target distributions p*(x) ∝ exp(-f(x)) and their gradient oracles.

Every target carries its strong-convexity constant ``m`` and smoothness
constant ``L`` by construction; nothing is estimated. Gradients accept a
single point of shape ``(d,)`` or a batch of shape ``(M, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import UsageError

ArrayFn = Callable[[np.ndarray], np.ndarray]

NOISE_KINDS = ("gaussian",)


@dataclass(frozen=True)
class TargetModel:
    """A smooth, strongly convex potential with its constants.

    Attributes:
        dimension: Number of coordinates ``d``.
        m: Strong-convexity constant.
        L: Smoothness constant (``L >= m``). May be a loose upper bound.
        potential_fn: ``f`` evaluated along the last axis.
        gradient_fn: ``∇f`` evaluated along the last axis, no validation.
        minimizer: ``x*`` when known.
        stationary_covariance: Covariance of the x-marginal of p*, only for
            quadratic targets (the inverse Hessian).
        hessian_diag: Diagonal Hessian, only for (diagonal) quadratic targets.
        name: Registry name used in run configs.
        params: Constructor parameters, echoed into traces.
    """

    dimension: int
    m: float
    L: float
    potential_fn: ArrayFn = field(repr=False)
    gradient_fn: ArrayFn = field(repr=False)
    minimizer: np.ndarray | None = field(default=None, repr=False)
    stationary_covariance: np.ndarray | None = field(default=None, repr=False)
    hessian_diag: np.ndarray | None = field(default=None, repr=False)
    name: str = "custom"
    params: dict[str, Any] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise UsageError(f"dimension must be a positive integer, got {self.dimension}")
        if not (np.isfinite(self.m) and self.m > 0):
            raise UsageError(f"m must be positive and finite, got {self.m}")
        if not (np.isfinite(self.L) and self.L >= self.m):
            raise UsageError(f"L must be finite and >= m, got L={self.L}, m={self.m}")

    @property
    def kappa(self) -> float:
        return self.L / self.m

    @property
    def is_quadratic(self) -> bool:
        return self.hessian_diag is not None

    def potential(self, x) -> np.ndarray:
        return self.potential_fn(_check_points(self, x))

    def gradient(self, x) -> np.ndarray:
        return self.gradient_fn(_check_points(self, x))

    def stationary_velocity_variance(self) -> float:
        """Per-coordinate variance of v under p*(x, v) ∝ exp(-f(x) - L‖v‖²/2)."""
        return 1.0 / self.L


@dataclass(frozen=True)
class NoisyGradientOracle:
    """Gradient oracle returning ∇f(x) + ξ with E[ξ] = 0, E‖ξ‖² = dσ².

    The oracle itself holds no random state; callers pass a generator.
    """

    base: TargetModel
    sigma2: float
    noise: str = "gaussian"

    def __post_init__(self):
        if not (np.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise UsageError(f"sigma2 must be finite and >= 0, got {self.sigma2}")
        if self.noise not in NOISE_KINDS:
            raise UsageError(f"unknown noise kind {self.noise!r}; expected one of {NOISE_KINDS}")

    def sample_noise(self, rng: np.random.Generator, shape) -> np.ndarray:
        return np.sqrt(self.sigma2) * rng.standard_normal(shape)


def _check_points(model: TargetModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != model.dimension:
        raise UsageError(
            f"expected shape (d,) or (M, d) with d={model.dimension}, got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise UsageError("input contains non-finite entries")
    return x


def grad(model: TargetModel, x) -> np.ndarray:
    """Exact gradient ∇f(x) with dimension and finiteness checks."""
    return model.gradient(x)


def grad_noisy(oracle: NoisyGradientOracle, x, rng: np.random.Generator) -> np.ndarray:
    """Noisy gradient ∇f(x) + ξ with fresh ξ on every call.

    With ``sigma2 == 0`` no random numbers are drawn and the exact gradient is
    returned unchanged.
    """
    g = grad(oracle.base, x)
    if oracle.sigma2 == 0:
        return g
    return g + oracle.sample_noise(rng, g.shape)


def _vector(values, d: int | None, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise UsageError(f"{label} must be a 1-d sequence")
    if d is not None and arr.shape[0] != d:
        raise UsageError(f"{label} has length {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{label} contains non-finite entries")
    return arr


def diagonal_quadratic(lam, center=None) -> TargetModel:
    """f(x) = ½ Σ λᵢ (xᵢ - cᵢ)², with m = min λ and L = max λ."""
    lam = _vector(lam, None, "lambda")
    if np.any(lam <= 0):
        raise UsageError("all curvatures lambda must be positive")
    d = lam.shape[0]
    c = np.zeros(d) if center is None else _vector(center, d, "center")

    def potential(x):
        return 0.5 * np.sum(lam * (x - c) ** 2, axis=-1)

    def gradient(x):
        return lam * (x - c)

    return TargetModel(
        dimension=d,
        m=float(lam.min()),
        L=float(lam.max()),
        potential_fn=potential,
        gradient_fn=gradient,
        minimizer=c.copy(),
        stationary_covariance=np.diag(1.0 / lam),
        hessian_diag=lam.copy(),
        name="diag_quadratic",
        params={"lambda": lam.tolist(), "center": c.tolist()},
    )


def isotropic_quadratic(d: int, m: float = 1.0, center=None, L: float | None = None) -> TargetModel:
    """f(x) = (m/2)‖x - c‖².

    The true smoothness constant is ``m``. A larger ``L`` may be declared, which
    is still a valid smoothness bound; the sampler uses the declared ``L`` in
    its kernel (u = 1/L), so the velocity marginal of p* becomes N(0, I/L).
    """
    if int(d) != d or d < 1:
        raise UsageError(f"d must be a positive integer, got {d}")
    d = int(d)
    if not (np.isfinite(m) and m > 0):
        raise UsageError(f"m must be positive, got {m}")
    L = float(m) if L is None else float(L)
    if L < m:
        raise UsageError(f"declared L={L} is below the curvature m={m}")
    base = diagonal_quadratic(np.full(d, float(m)), center)
    params = {"d": d, "m": float(m), "L": L, "center": base.minimizer.tolist()}
    return TargetModel(
        dimension=d,
        m=float(m),
        L=L,
        potential_fn=base.potential_fn,
        gradient_fn=base.gradient_fn,
        minimizer=base.minimizer,
        stationary_covariance=base.stationary_covariance,
        hessian_diag=base.hessian_diag,
        name="isotropic_quadratic",
        params=params,
    )


def _log_cosh(y):
    a = np.abs(y)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def logcosh_target(d: int, m: float = 1.0, L: float = 2.0, center=None) -> TargetModel:
    """f(x) = (m/2)‖x - c‖² + (L - m) Σ log cosh(xᵢ - cᵢ).

    The Hessian is diagonal with entries m + (L - m) sech²(xᵢ - cᵢ), which lie
    in [m, L], so the constants hold exactly. No closed-form moments.
    """
    if int(d) != d or d < 1:
        raise UsageError(f"d must be a positive integer, got {d}")
    d = int(d)
    if not (np.isfinite(m) and m > 0 and np.isfinite(L) and L >= m):
        raise UsageError(f"need 0 < m <= L, got m={m}, L={L}")
    c = np.zeros(d) if center is None else _vector(center, d, "center")
    m, L = float(m), float(L)

    def potential(x):
        y = x - c
        return 0.5 * m * np.sum(y**2, axis=-1) + (L - m) * np.sum(_log_cosh(y), axis=-1)

    def gradient(x):
        y = x - c
        return m * y + (L - m) * np.tanh(y)

    return TargetModel(
        dimension=d,
        m=m,
        L=L,
        potential_fn=potential,
        gradient_fn=gradient,
        minimizer=c.copy(),
        name="logcosh",
        params={"d": d, "m": m, "L": L, "center": c.tolist()},
    )


def hessian_diagonal_logcosh(target: TargetModel, x) -> np.ndarray:
    """Analytic Hessian diagonal of :func:`logcosh_target` (used in checks)."""
    c = target.minimizer
    y = np.asarray(x, dtype=float) - c
    return target.m + (target.L - target.m) / np.cosh(y) ** 2


TARGETS = {
    "isotropic_quadratic": isotropic_quadratic,
    "diag_quadratic": diagonal_quadratic,
    "logcosh": logcosh_target,
}


def build_target(name: str, **params) -> TargetModel:
    """Construct a registered target from its config name and parameters."""
    if name not in TARGETS:
        raise UsageError(f"unknown target {name!r}; expected one of {sorted(TARGETS)}")
    if name == "diag_quadratic":
        if "lambda" not in params:
            raise UsageError("diag_quadratic requires 'lambda'")
        params = dict(params)
        lam = params.pop("lambda")
        return diagonal_quadratic(lam, **params)
    return TARGETS[name](**params)

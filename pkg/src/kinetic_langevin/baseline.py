"""Overdamped Langevin (ULA) baseline: x' = x - δ∇f(x) + √(2δ) ζ."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import DivergenceError, UsageError
from .laws import ula_stationary_variance
from .model import grad
from .sampler import RunConfig, Trace, _drive, _Stepper


class _OverdampedStepper(_Stepper):
    has_velocity = False

    def __init__(self, delta: float):
        self.delta = float(delta)
        self.scale = math.sqrt(2.0 * self.delta)

    def noise_width(self, d):
        return d

    def advance(self, x, v, g, z):
        return x - self.delta * g + self.scale * z, None


def ula_step(target, x, delta: float, rng: np.random.Generator) -> np.ndarray:
    """One ULA update from ``x`` (shape ``(d,)`` or ``(M, d)``)."""
    if not (delta > 0 and math.isfinite(delta)):
        raise UsageError(f"step size must be positive, got {delta}")
    g = grad(target, x)
    x = np.asarray(x, dtype=float)
    out = x - delta * g + math.sqrt(2.0 * delta) * rng.standard_normal(x.shape)
    if not np.all(np.isfinite(out)):
        raise DivergenceError(0, 1, "ULA step produced a non-finite state")
    return out


def ula_run(config: RunConfig) -> Trace:
    """Ensemble ULA run with the same seeding and snapshot rules as the kinetic sampler.

    Uses ``config.plan.delta`` and ``config.plan.n``; snapshots carry no velocity.
    """
    if config.noise is not None:
        raise UsageError("the ULA baseline runs with exact gradients only")
    plan = config.plan
    if not hasattr(plan, "delta"):
        raise UsageError("ULA runs take a single (delta, n) plan")
    if not (plan.delta > 0):
        raise UsageError("step size must be positive")
    return _drive(config, [(_OverdampedStepper(plan.delta), int(plan.n))], with_velocity=False)


def ula_stationary_w2(delta: float, d: int, m: float = 1.0) -> float:
    """W₂ between the ULA stationary law and p* on the isotropic quadratic (m/2)‖x‖²."""
    var = ula_stationary_variance(delta, m)
    return math.sqrt(d) * abs(math.sqrt(var) - 1.0 / math.sqrt(m))


def ula_step_size(epsilon: float, d: int, m: float, L: float, constant: float) -> float:
    """Step size ``constant · ε² m / (d L²)``."""
    return constant * epsilon * epsilon * m / (d * L * L)


def calibrate_ula_constant(epsilon: float, d: int = 2, m: float = 1.0, L: float = 1.0) -> float:
    """Constant for :func:`ula_step_size` whose stationary bias is ε/2 at the calibration point.

    Calibrated once on the isotropic quadratic in ``d`` dimensions; the
    remaining ε/2 is left for the transient.
    """
    def gap(delta):
        return ula_stationary_w2(delta, d, m) - epsilon / 2.0

    hi = 1.0 / m
    if gap(hi * (1 - 1e-9)) < 0:
        delta = hi * (1 - 1e-9)
    else:
        delta = brentq(gap, 1e-12, hi * (1 - 1e-9), xtol=1e-14)
    return delta * d * L * L / (epsilon * epsilon * m)

"""Synchronous-coupling experiments on the continuous and frozen-gradient diffusions.

Both diffusions are integrated with Euler–Maruyama on a fine grid:

    v ← v + h(-2v - ∇f/L) + √(4h/L) ζ_k,     x ← x + h v

where ∇f is evaluated at the current position (continuous process) or at the
initial position (frozen-gradient process). Coupled copies consume the same
increment buffer, so their Brownian motions coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .kernel import ChainState
from .model import TargetModel
from .planner import ProblemSpec, kinetic_energy_bound

DEFAULT_REFINEMENT = 1024


@dataclass(frozen=True)
class CoupledPair:
    """Two states (x, v) and (y, w) driven by one Brownian path."""

    first: ChainState
    second: ChainState

    def __post_init__(self):
        if self.first.x.shape != self.second.x.shape:
            raise UsageError("coupled states must have equal shapes")

    def lyapunov(self) -> np.ndarray:
        return lyapunov_value(self.first, self.second)


@dataclass(frozen=True)
class LyapunovSample:
    t: float
    value: float


def lyapunov_value(a: ChainState, b: ChainState) -> np.ndarray:
    """‖x - y‖² + ‖(x + v) - (y + w)‖², per chain for batched states."""
    z = a.x - b.x
    s = z + (a.v - b.v)
    return np.sum(z * z, axis=-1) + np.sum(s * s, axis=-1)


def _num_steps(t_end: float, h: float) -> int:
    if not (t_end > 0 and h > 0):
        raise UsageError("t_end and h must be positive")
    if h > t_end / 64.0 * (1 + 1e-12):
        raise UsageError(f"fine step h={h} must be at most t_end/64={t_end / 64}")
    k = int(round(t_end / h))
    if abs(k * h - t_end) > 1e-9 * t_end:
        raise UsageError("t_end must be an integer multiple of h")
    return k


def _integrate(target: TargetModel, state: ChainState, t_end: float, h: float, increments, frozen: bool) -> ChainState:
    k = _num_steps(t_end, h)
    inc = np.asarray(increments, dtype=float)
    if inc.ndim != state.x.ndim + 1 or inc.shape[1:] != state.x.shape:
        raise UsageError(f"increments must have shape (K, {', '.join(map(str, state.x.shape))})")
    if inc.shape[0] < k:
        raise UsageError(f"increment buffer holds {inc.shape[0]} steps, need {k}")
    L = target.L
    noise = math.sqrt(4.0 * h / L)
    x = state.x.copy()
    v = state.v.copy()
    g0 = target.gradient_fn(x) if frozen else None
    for j in range(k):
        g = g0 if frozen else target.gradient_fn(x)
        v_next = v + h * (-2.0 * v - g / L) + noise * inc[j]
        x = x + h * v
        v = v_next
    return ChainState(x, v)


def integrate_exact_sde(target: TargetModel, state: ChainState, t_end: float, h: float, increments) -> ChainState:
    """Euler–Maruyama path of the continuous underdamped diffusion up to ``t_end``."""
    return _integrate(target, state, t_end, h, increments, frozen=False)


def integrate_frozen_sde(target: TargetModel, state: ChainState, t_end: float, h: float, increments) -> ChainState:
    """Euler–Maruyama path with the gradient frozen at the initial position."""
    return _integrate(target, state, t_end, h, increments, frozen=True)


def contraction_experiment(
    target: TargetModel,
    pair0: CoupledPair,
    t_end: float,
    h: float,
    paths: int = 100,
    num_samples: int = 50,
    seed: int = 0,
) -> list[LyapunovSample]:
    """Path-averaged ℓ(t) along synchronously coupled continuous diffusions.

    ``pair0`` holds single states of shape ``(d,)``; each of the ``paths``
    replications draws its own Brownian path shared by both copies.
    """
    if pair0.first.x.ndim != 1:
        raise UsageError("pair0 must hold single (d,) states")
    total = _num_steps(t_end, h)
    rng = np.random.default_rng(seed)
    d = pair0.first.dimension
    a = ChainState(np.tile(pair0.first.x, (paths, 1)), np.tile(pair0.first.v, (paths, 1)))
    b = ChainState(np.tile(pair0.second.x, (paths, 1)), np.tile(pair0.second.v, (paths, 1)))
    marks = np.unique(np.linspace(0, total, num_samples + 1).round().astype(int))
    out = [LyapunovSample(0.0, float(np.mean(lyapunov_value(a, b))))]
    for lo, hi in zip(marks[:-1], marks[1:]):
        steps = int(hi - lo)
        inc = rng.standard_normal((steps, paths, d))
        a = _integrate_segment(target, a, steps, h, inc)
        b = _integrate_segment(target, b, steps, h, inc)
        out.append(LyapunovSample(float(hi * h), float(np.mean(lyapunov_value(a, b)))))
    return out


def _integrate_segment(target, state, steps, h, inc):
    # Segments may be shorter than 64 fine steps, so skip the t_end/64 check.
    L = target.L
    noise = math.sqrt(4.0 * h / L)
    x, v = state.x.copy(), state.v.copy()
    for j in range(steps):
        g = target.gradient_fn(x)
        v_next = v + h * (-2.0 * v - g / L) + noise * inc[j]
        x = x + h * v
        v = v_next
    return ChainState(x, v)


def envelope_ratios(samples: list[LyapunovSample], kappa: float) -> np.ndarray:
    """ℓ(t) / (ℓ(0) e^{-t/κ}) at every sampled time."""
    l0 = samples[0].value
    return np.array([s.value / (l0 * math.exp(-s.t / kappa)) for s in samples])


def fitted_decay_rate(samples: list[LyapunovSample]) -> float:
    """Least-squares slope of log ℓ(t) against t."""
    t = np.array([s.t for s in samples])
    y = np.log(np.array([s.value for s in samples]))
    return float(np.polyfit(t, y, 1)[0])


def stationary_ensemble(target: TargetModel, chains: int, rng: np.random.Generator) -> ChainState:
    """Exact draws from p* = N(x*, H⁻¹) ⊗ N(0, I/L) for quadratic targets."""
    if target.stationary_covariance is None:
        raise UsageError("exact stationary draws need a quadratic target; warm up with the sampler instead")
    d = target.dimension
    x = rng.multivariate_normal(target.minimizer, target.stationary_covariance, size=chains)
    v = rng.standard_normal((chains, d)) * math.sqrt(1.0 / target.L)
    return ChainState(x, v)


def discretization_experiment(
    target: TargetModel,
    p0: ChainState,
    delta: float,
    h: float | None = None,
    kinetic_bound: float | None = None,
    seed: int = 0,
) -> tuple[float, float]:
    """Coupled deviation between the continuous and frozen diffusions at t = δ.

    Returns ``(measured, bound)`` where ``measured`` is the root-mean-square
    of ‖(x_δ, v_δ) - (x̃_δ, ṽ_δ)‖ over the ensemble (an upper bound on W₂ by
    the coupling) and ``bound = δ² √(2 E_K / 5)``. ``E_K`` defaults to
    26 d/m, the planner's bound with D² = 0.
    """
    res = discretization_detail(target, p0, delta, h=h, kinetic_bound=kinetic_bound, seed=seed)
    return res["measured"], res["bound"]


def discretization_detail(
    target: TargetModel,
    p0: ChainState,
    delta: float,
    h: float | None = None,
    kinetic_bound: float | None = None,
    seed: int = 0,
    richardson: bool = False,
) -> dict:
    """Like :func:`discretization_experiment` but returns every diagnostic.

    With ``richardson=True`` the measurement is repeated at h/2 on the same
    Brownian path (increments summed pairwise) so integrator error can be
    judged.
    """
    if not (0 < delta <= 1):
        raise UsageError(f"delta must lie in (0, 1], got {delta}")
    if p0.x.ndim != 2:
        raise UsageError("p0 must be an ensemble of shape (M, d)")
    h = delta / DEFAULT_REFINEMENT if h is None else float(h)
    if kinetic_bound is None:
        kinetic_bound = kinetic_energy_bound(ProblemSpec(target.dimension, target.m, target.L, D2=0.0))
    k = _num_steps(delta, h)
    rng = np.random.default_rng(seed)
    fine = rng.standard_normal((2 * k,) + p0.x.shape)
    # Coarse increments are normalized pairwise sums: the same Brownian path.
    inc = (fine[0::2] + fine[1::2]) / math.sqrt(2.0)
    exact = integrate_exact_sde(target, p0, delta, h, inc)
    frozen = integrate_frozen_sde(target, p0, delta, h, inc)
    measured = _rms_gap(exact, frozen)
    out = {
        "delta": float(delta),
        "h": h,
        "measured": measured,
        "bound": delta * delta * math.sqrt(2.0 * kinetic_bound / 5.0),
        "kinetic_bound": kinetic_bound,
        "kinetic_energy_end": float(np.mean(np.sum(exact.v**2, axis=1))),
        "kinetic_energy_start": float(np.mean(np.sum(p0.v**2, axis=1))),
    }
    ke = max(out["kinetic_energy_end"], out["kinetic_energy_start"])
    out["bound_empirical_energy"] = delta * delta * math.sqrt(2.0 * ke / 5.0)
    if richardson:
        exact2 = integrate_exact_sde(target, p0, delta, h / 2, fine)
        frozen2 = integrate_frozen_sde(target, p0, delta, h / 2, fine)
        out["measured_half_h"] = _rms_gap(exact2, frozen2)
    return out


def _rms_gap(a: ChainState, b: ChainState) -> float:
    dx = a.x - b.x
    dv = a.v - b.v
    return math.sqrt(float(np.mean(np.sum(dx * dx, axis=1) + np.sum(dv * dv, axis=1))))


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])

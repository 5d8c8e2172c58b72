"""Step sizes and iteration counts that guarantee W₂(p⁽ⁿ⁾, p*) ≤ ε.

All functions are pure. Iteration counts are rounded up; a plan whose step
size would reach 1 is refused rather than clamped.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .errors import PlanningError, UsageError


@dataclass(frozen=True)
class ProblemSpec:
    """Problem constants.

    Attributes:
        d: Dimension.
        m: Strong-convexity constant.
        L: Smoothness constant.
        D2: Upper bound on ‖x⁽⁰⁾ - x*‖².
        epsilon: Target W₂ accuracy.
        sigma2: Gradient-noise scale; 0 for exact gradients.
    """

    d: int
    m: float
    L: float
    D2: float = 0.0
    epsilon: float = 0.1
    sigma2: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise UsageError(f"d must be a positive integer, got {self.d}")
        if not (0 < self.m <= self.L) or not math.isfinite(self.L):
            raise UsageError(f"need 0 < m <= L < inf, got m={self.m}, L={self.L}")
        if not (self.D2 >= 0 and math.isfinite(self.D2)):
            raise UsageError(f"D2 must be >= 0, got {self.D2}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise UsageError(f"epsilon must be > 0, got {self.epsilon}")
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise UsageError(f"sigma2 must be >= 0, got {self.sigma2}")

    @property
    def kappa(self) -> float:
        return self.L / self.m

    @property
    def scale(self) -> float:
        """d/m + D², the quantity every bound is expressed in."""
        return self.d / self.m + self.D2


@dataclass(frozen=True)
class SamplerPlan:
    delta: float
    n: int
    mode: str  # "exact" or "stochastic"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EpochSchedule:
    """Epochs (δᵢ, nᵢ) with δ halving and n doubling from one epoch to the next."""

    epochs: tuple[tuple[float, int], ...]
    epsilon0: float
    total_steps_bound: float = field(default=math.inf)

    @property
    def num_epochs(self) -> int:
        return len(self.epochs)

    @property
    def total_steps(self) -> int:
        return sum(n for _, n in self.epochs)

    @property
    def within_bound(self) -> bool:
        return self.total_steps <= self.total_steps_bound

    def to_dict(self) -> dict:
        return {
            "epochs": [{"delta": dl, "n": n} for dl, n in self.epochs],
            "num_epochs": self.num_epochs,
            "epsilon0": self.epsilon0,
            "total_steps": self.total_steps,
            "total_steps_bound": self.total_steps_bound,
            "within_bound": self.within_bound,
        }


def _require_step(delta: float, what: str) -> float:
    if not delta < 1.0:
        raise PlanningError(
            f"{what}: step size {delta:.6g} is not below 1; the requested epsilon is too "
            "large for this problem (every bound assumes delta < 1). Lower epsilon."
        )
    return delta


def plan_fixed(spec: ProblemSpec) -> SamplerPlan:
    """Constant step size and iteration count for exact gradients."""
    if spec.sigma2 != 0:
        raise UsageError("plan_fixed requires sigma2 == 0; use plan_stochastic")
    k, eps, s = spec.kappa, spec.epsilon, spec.scale
    delta = _require_step(eps / (104.0 * k) * math.sqrt(1.0 / s), "plan_fixed")
    n = math.ceil((52.0 * k * k / eps) * math.sqrt(s) * math.log(24.0 * s / eps))
    return SamplerPlan(delta=delta, n=max(n, 1), mode="exact")


def plan_stochastic(spec: ProblemSpec) -> SamplerPlan:
    """Step size and iteration count when gradients carry noise of scale σ²."""
    if not spec.sigma2 > 0:
        raise UsageError("plan_stochastic requires sigma2 > 0; use plan_fixed")
    k, eps, s = spec.kappa, spec.epsilon, spec.scale
    discretization = (eps / k) * math.sqrt(5.0 / (479232.0 * s))
    noise = eps * eps * spec.L * spec.L / (1440.0 * spec.sigma2 * spec.d * k)
    delta = _require_step(min(discretization, noise), "plan_stochastic")
    n = math.ceil((k / delta) * math.log(36.0 * s / eps))
    return SamplerPlan(delta=delta, n=max(n, 1), mode="stochastic")


def plan(spec: ProblemSpec) -> SamplerPlan:
    """Route to the exact or stochastic planner depending on σ²."""
    return plan_stochastic(spec) if spec.sigma2 > 0 else plan_fixed(spec)


def plan_epochs(spec: ProblemSpec) -> EpochSchedule:
    """Halving-step schedule that removes the log factor of :func:`plan_fixed`.

    The initial error proxy ε₀ is one ulp above 3(d/m + D²).
    """
    if spec.sigma2 != 0:
        raise UsageError("plan_epochs requires sigma2 == 0")
    k, eps, s = spec.kappa, spec.epsilon, spec.scale
    eps0 = math.nextafter(3.0 * s, math.inf)
    delta1 = _require_step(eps0 / (208.0 * k) * math.sqrt(1.0 / s), "plan_epochs")
    n1 = max(math.ceil((208.0 * k * k / eps0) * math.sqrt(s) * math.log(16.0)), 1)
    num = max(math.ceil(math.log(eps0 / eps) / math.log(2.0)), 1)
    epochs = tuple((delta1 / 2**i, n1 * 2**i) for i in range(num))
    bound = (416.0 * math.log(16.0) * k * k / eps) * math.sqrt(s)
    return EpochSchedule(epochs=epochs, epsilon0=eps0, total_steps_bound=bound)


def kinetic_energy_bound(spec: ProblemSpec) -> float:
    """Uniform bound E_K = 26(d/m + D²) on E‖v‖² along planner-driven runs."""
    return 26.0 * spec.scale


def initial_distance_bound(spec: ProblemSpec) -> float:
    """Bound 3(d/m + D²) on W₂²(p⁽⁰⁾, p*) for the Dirac start (x⁽⁰⁾, 0)."""
    return 3.0 * spec.scale


def recursion_bound(A: float, B: float, C: float, x0: float, k: int) -> float:
    """Closed-form bound on x_k when x_{k+1}² ≤ (A x_k + C)² + B².

    Returns A^k x0 + C/(1 - A) + B²/(C + √(1 - A²) B).
    """
    if not (0.0 <= A < 1.0):
        raise UsageError(f"A must lie in [0, 1), got {A}")
    if min(B, C, x0) < 0:
        raise UsageError("B, C and x0 must be non-negative")
    if k < 0:
        raise UsageError("k must be >= 0")
    denom = C + math.sqrt(1.0 - A * A) * B
    tail = 0.0 if B == 0 else B * B / denom
    return A**k * x0 + C / (1.0 - A) + tail


def plan_summary(spec: ProblemSpec, schedule: str = "fixed") -> dict:
    """Plan plus every intermediate constant, ready for JSON output."""
    out = {
        "problem": asdict(spec),
        "kappa": spec.kappa,
        "scale": spec.scale,
        "kinetic_energy_bound": kinetic_energy_bound(spec),
        "initial_distance_bound": initial_distance_bound(spec),
    }
    if schedule == "epochs":
        out["schedule"] = "epochs"
        out["plan"] = plan_epochs(spec).to_dict()
    else:
        p = plan(spec)
        out["schedule"] = "fixed"
        out["plan"] = p.to_dict()
    return out

"""Underdamped (kinetic) Langevin MCMC for smooth strongly log-concave targets."""

from .errors import DivergenceError, InternalError, KineticLangevinError, PlanningError, UsageError
from .kernel import ChainState, KernelCoefficients, coefficients, conditional_moments, step, step_with_noise
from .model import (
    NoisyGradientOracle,
    TargetModel,
    build_target,
    diagonal_quadratic,
    grad,
    grad_noisy,
    isotropic_quadratic,
    logcosh_target,
)
from .planner import (
    EpochSchedule,
    ProblemSpec,
    SamplerPlan,
    initial_distance_bound,
    kinetic_energy_bound,
    plan,
    plan_epochs,
    plan_fixed,
    plan_stochastic,
    recursion_bound,
)
from .sampler import EnsembleSnapshot, RunConfig, Trace, run, run_epochs

__version__ = "0.1.0"

"""Run configuration: one JSON document with sections problem, target, run, experiment.

Example::

    {
      "target":  {"name": "isotropic_quadratic", "d": 2, "m": 1, "L": 2},
      "problem": {"epsilon": 0.5, "D2": 1.0},
      "run":     {"chains": 2000, "seed": 7, "x0": [1, 0]},
      "experiment": {}
    }

``problem.d``, ``problem.m`` and ``problem.L`` default to the target's
constants. When given they must be valid for the target (same dimension,
m no larger and L no smaller than the target's). ``problem.D2`` defaults to
‖x⁽⁰⁾ - x*‖².
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import UsageError
from .model import NoisyGradientOracle, TargetModel, build_target
from .planner import ProblemSpec, SamplerPlan, plan, plan_epochs


class ProblemSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon: float = Field(0.1, gt=0)
    D2: Optional[float] = Field(None, ge=0)
    sigma2: float = Field(0.0, ge=0)
    d: Optional[int] = Field(None, ge=1)
    m: Optional[float] = Field(None, gt=0)
    L: Optional[float] = Field(None, gt=0)


class TargetSection(BaseModel):
    model_config = ConfigDict(extra="allow")

    name: str = "isotropic_quadratic"


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    chains: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    stride: Optional[int] = Field(None, ge=1)
    threads: int = Field(1, ge=1)
    x0: Optional[list[float]] = None
    schedule: Literal["fixed", "epochs"] = "fixed"
    # Forcing a step size bypasses the planner; n is then required.
    delta: Optional[float] = Field(None, gt=0, lt=1)
    n: Optional[int] = Field(None, ge=0)

    @field_validator("x0")
    @classmethod
    def _finite(cls, v):
        if v is not None and not np.all(np.isfinite(v)):
            raise ValueError("x0 must be finite")
        return v


class Config(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problem: ProblemSection = ProblemSection()
    target: TargetSection = TargetSection(name="isotropic_quadratic", d=2)
    run: RunSection = RunSection()
    experiment: dict[str, Any] = Field(default_factory=dict)

    def provenance_hash(self) -> str:
        """Hash of the effective config; thread count does not change results so it is left out."""
        return config_sha256(self.model_dump(mode="json", exclude={"run": {"threads"}}))

    def build_target(self) -> TargetModel:
        params = self.target.model_dump()
        name = params.pop("name")
        try:
            return build_target(name, **params)
        except TypeError as exc:
            raise UsageError(f"target.{name}: {exc}") from None

    def initial_position(self, target: TargetModel) -> np.ndarray:
        if self.run.x0 is not None:
            x0 = np.asarray(self.run.x0, dtype=float)
            if x0.shape != (target.dimension,):
                raise UsageError(f"run.x0 has length {x0.size}, target dimension is {target.dimension}")
            return x0
        return target.minimizer.copy() if target.minimizer is not None else np.zeros(target.dimension)

    def problem_spec(self, target: TargetModel) -> ProblemSpec:
        p = self.problem
        d = target.dimension if p.d is None else p.d
        m = target.m if p.m is None else p.m
        L = target.L if p.L is None else p.L
        if d != target.dimension:
            raise UsageError(f"problem.d={d} does not match the target dimension {target.dimension}")
        if m > target.m * (1 + 1e-12):
            raise UsageError(f"problem.m={m} exceeds the target's strong convexity {target.m}")
        if L < target.L * (1 - 1e-12):
            raise UsageError(f"problem.L={L} is below the target's smoothness {target.L}")
        D2 = p.D2
        if D2 is None:
            if target.minimizer is None:
                raise UsageError("problem.D2 is required when the target has no known minimizer")
            D2 = float(np.sum((self.initial_position(target) - target.minimizer) ** 2))
        return ProblemSpec(d=d, m=m, L=L, D2=D2, epsilon=p.epsilon, sigma2=p.sigma2)

    def build_plan(self, target: TargetModel):
        """Planner output, or the forced (delta, n) from the run section."""
        r = self.run
        if r.delta is not None or r.n is not None:
            if r.delta is None or r.n is None:
                raise UsageError("run.delta and run.n must be given together")
            mode = "stochastic" if self.problem.sigma2 > 0 else "exact"
            return SamplerPlan(r.delta, r.n, mode)
        spec = self.problem_spec(target)
        if r.schedule == "epochs":
            if spec.sigma2 > 0:
                raise UsageError("the epoch schedule is defined for exact gradients only")
            return plan_epochs(spec)
        return plan(spec)

    def noise_oracle(self, target: TargetModel) -> NoisyGradientOracle | None:
        if self.problem.sigma2 > 0:
            return NoisyGradientOracle(target, self.problem.sigma2)
        return None


def config_sha256(raw: dict) -> str:
    """Hash of the canonical JSON form of a config document."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def load_config(path: str | Path | None) -> tuple[Config, dict]:
    """Parse and validate a config file; ``None`` gives the defaults.

    Raises:
        UsageError: unreadable file, bad JSON or schema violations, with
            field-level messages.
    """
    if path is None:
        raw: dict = {}
    else:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
    try:
        cfg = Config.model_validate(raw)
    except ValidationError as exc:
        raise UsageError(format_validation_error(exc)) from None
    return cfg, raw

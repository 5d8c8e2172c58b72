"""Ensemble driver for the underdamped Langevin chain.

Every chain owns its random streams, derived from ``(seed, chain, epoch,
stream)`` through :class:`numpy.random.SeedSequence`, so traces do not depend
on how chains are split across threads or how many steps are drawn at once.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernel
from .errors import DivergenceError, UsageError
from .metrics import kinetic_energy
from .model import NoisyGradientOracle, TargetModel
from .planner import EpochSchedule, SamplerPlan

KERNEL_STREAM = 0
GRADIENT_NOISE_STREAM = 1

SNAPSHOT_MEMORY_CAP = 100 * 2**20
_NOISE_BLOCK_FLOATS = 2**22


def chain_generator(seed: int, chain: int, epoch: int = 0, stream: int = KERNEL_STREAM) -> np.random.Generator:
    """Independent generator for one chain, epoch and purpose."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chain), int(epoch), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class EnsembleSnapshot:
    """States of all chains after ``iteration`` steps.

    ``v`` is ``None`` for samplers without a velocity (the ULA baseline).
    ``wall_time`` is seconds since the run started and is not serialized.
    """

    iteration: int
    x: np.ndarray
    v: np.ndarray | None
    wall_time: float = 0.0

    @property
    def chains(self) -> int:
        return self.x.shape[0]


def snapshot_diagnostics(snap: EnsembleSnapshot) -> dict:
    out = {
        "iteration": snap.iteration,
        "mean_x": snap.x.mean(axis=0).tolist(),
        "var_x": (snap.x.var(axis=0, ddof=1) if snap.chains > 1 else np.zeros(snap.x.shape[1])).tolist(),
    }
    if snap.v is not None:
        out["kinetic_energy"] = kinetic_energy(snap)
        out["mean_v"] = snap.v.mean(axis=0).tolist()
        out["var_v"] = (snap.v.var(axis=0, ddof=1) if snap.chains > 1 else np.zeros(snap.v.shape[1])).tolist()
    return out


@dataclass
class Trace:
    config: dict
    snapshots: list[EnsembleSnapshot] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def final(self) -> EnsembleSnapshot:
        return self.snapshots[-1]

    def to_dict(self) -> dict:
        return {"config": self.config, "diagnostics": self.diagnostics}

    def max_kinetic_energy(self) -> float:
        return max(d["kinetic_energy"] for d in self.diagnostics)


@dataclass
class RunConfig:
    """Everything needed to reproduce an ensemble run.

    Attributes:
        target: Target distribution.
        plan: Fixed plan or epoch schedule.
        chains: Number of independent chains M.
        seed: Master seed.
        stride: Record every ``stride``-th iterate; ``None`` picks the
            smallest stride that keeps stored snapshots under ~100 MB.
        x0: Initial position, default the target's minimizer (else origin).
            The initial velocity is always zero.
        noise: Noisy gradient oracle; required for stochastic plans and
            forbidden for exact ones.
        threads: Worker threads; chains are split into contiguous groups.
    """

    target: TargetModel
    plan: SamplerPlan | EpochSchedule
    chains: int = 1000
    seed: int = 0
    stride: int | None = 1
    x0: np.ndarray | None = None
    noise: NoisyGradientOracle | None = None
    threads: int = 1

    def __post_init__(self):
        if int(self.chains) != self.chains or self.chains < 1:
            raise UsageError(f"chains must be >= 1, got {self.chains}")
        if self.stride is not None and (int(self.stride) != self.stride or self.stride < 1):
            raise UsageError(f"stride must be >= 1, got {self.stride}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise UsageError(f"threads must be >= 1, got {self.threads}")
        if not (0 <= int(self.seed) < 2**64):
            raise UsageError("seed must be an unsigned 64-bit integer")
        stochastic = isinstance(self.plan, SamplerPlan) and self.plan.mode == "stochastic"
        if stochastic and self.noise is None:
            raise UsageError("a stochastic plan needs a noisy gradient oracle")
        if not stochastic and self.noise is not None:
            raise UsageError("a noisy gradient oracle was given but the plan is exact")
        if self.noise is not None and self.noise.base is not self.target:
            raise UsageError("the noisy oracle must wrap the run's target")

    def initial_position(self) -> np.ndarray:
        d = self.target.dimension
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
            if x0.shape != (d,) or not np.all(np.isfinite(x0)):
                raise UsageError(f"x0 must be a finite vector of length {d}")
            return x0
        if self.target.minimizer is not None:
            return np.asarray(self.target.minimizer, dtype=float).copy()
        return np.zeros(d)

    def epochs(self) -> list[tuple[float, int]]:
        if isinstance(self.plan, EpochSchedule):
            return list(self.plan.epochs)
        return [(self.plan.delta, self.plan.n)]

    def resolved_stride(self, state_width: int) -> int:
        if self.stride is not None:
            return int(self.stride)
        total = sum(n for _, n in self.epochs())
        per_snapshot = self.chains * state_width * 8
        return max(1, math.ceil(total * per_snapshot / SNAPSHOT_MEMORY_CAP))

    def echo(self) -> dict:
        plan = self.plan.to_dict()
        return {
            "target": {"name": self.target.name, **self.target.params},
            "m": self.target.m,
            "L": self.target.L,
            "plan": plan,
            "chains": self.chains,
            "seed": int(self.seed),
            "x0": self.initial_position().tolist(),
            "sigma2": None if self.noise is None else self.noise.sigma2,
        }


class _Stepper:
    """One Markov transition on raw arrays; subclasses fix the update rule."""

    has_velocity = True

    def noise_width(self, d: int) -> int:
        raise NotImplementedError

    def advance(self, x, v, g, z):
        raise NotImplementedError


class _KineticStepper(_Stepper):
    def __init__(self, delta: float, L: float):
        self.coeffs = kernel.coefficients(delta, L)

    def noise_width(self, d):
        return 2 * d

    def advance(self, x, v, g, z):
        d = x.shape[-1]
        return kernel.advance(self.coeffs, x, v, g, z[..., :d], z[..., d:])


def _draw_block(gens: Sequence[np.random.Generator], steps: int, width: int) -> np.ndarray:
    out = np.empty((len(gens), steps, width))
    for i, g in enumerate(gens):
        g.standard_normal(out=out[i])
    return out


def _run_group(
    target: TargetModel,
    steppers: list[tuple[_Stepper, int]],
    x: np.ndarray,
    v: np.ndarray | None,
    chain_ids: range,
    seed: int,
    stride: int,
    noise: NoisyGradientOracle | None,
    t0: float,
):
    """Advance one contiguous group of chains through every epoch."""
    d = target.dimension
    snaps = []
    it = 0
    grad_fn = target.gradient_fn
    for epoch, (stepper, n) in enumerate(steppers):
        width = stepper.noise_width(d)
        gens = [chain_generator(seed, c, epoch, KERNEL_STREAM) for c in chain_ids]
        noisy = noise is not None and noise.sigma2 > 0
        if noisy:
            ngens = [chain_generator(seed, c, epoch, GRADIENT_NOISE_STREAM) for c in chain_ids]
        block = max(1, _NOISE_BLOCK_FLOATS // max(1, len(chain_ids) * (width + d)))
        done = 0
        while done < n:
            b = min(block, n - done)
            z = _draw_block(gens, b, width)
            xi = np.sqrt(noise.sigma2) * _draw_block(ngens, b, d) if noisy else None
            for k in range(b):
                g = grad_fn(x)
                if xi is not None:
                    g = g + xi[:, k, :]
                x, v = stepper.advance(x, v, g, z[:, k, :])
                it += 1
                local = done + k + 1
                if not (np.isfinite(x).all() and (v is None or np.isfinite(v).all())):
                    bad = ~np.isfinite(x).all(axis=1)
                    if v is not None:
                        bad |= ~np.isfinite(v).all(axis=1)
                    raise DivergenceError(chain_ids[int(np.argmax(bad))], it)
                if local % stride == 0 or local == n:
                    snaps.append((it, x.copy(), None if v is None else v.copy(), time.perf_counter() - t0))
            done += b
    return snaps


def _drive(config: RunConfig, steppers: list[tuple[_Stepper, int]], with_velocity: bool) -> Trace:
    target = config.target
    d = target.dimension
    M = config.chains
    stride = config.resolved_stride(2 * d if with_velocity else d)
    x0 = config.initial_position()
    t0 = time.perf_counter()
    X = np.tile(x0, (M, 1))
    V = np.zeros((M, d)) if with_velocity else None

    groups = np.array_split(np.arange(M), min(config.threads, M))
    groups = [range(int(g[0]), int(g[-1]) + 1) for g in groups if len(g)]

    def work(r: range):
        return _run_group(
            target, steppers, X[r.start:r.stop].copy(),
            None if V is None else V[r.start:r.stop].copy(),
            r, config.seed, stride, config.noise, t0,
        )

    if len(groups) == 1:
        parts = [work(groups[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(groups)) as pool:
            parts = list(pool.map(work, groups))

    echo = config.echo()
    echo["stride"] = stride
    trace = Trace(config=echo)
    first = EnsembleSnapshot(0, X.copy(), None if V is None else V.copy(), 0.0)
    trace.snapshots.append(first)
    for j in range(len(parts[0])):
        it = parts[0][j][0]
        xs = np.concatenate([p[j][1] for p in parts], axis=0)
        vs = None if V is None else np.concatenate([p[j][2] for p in parts], axis=0)
        wall = max(p[j][3] for p in parts)
        trace.snapshots.append(EnsembleSnapshot(it, xs, vs, wall))
    trace.diagnostics = [snapshot_diagnostics(s) for s in trace.snapshots]
    return trace


def run(config: RunConfig) -> Trace:
    """Run the chain with a single (δ, n) plan.

    Snapshots are taken at iteration 0, every ``stride`` steps and at the
    final iterate. The gradient is evaluated once per step at the pre-step
    position.
    """
    if isinstance(config.plan, EpochSchedule):
        return run_epochs(config)
    steppers = [(_KineticStepper(config.plan.delta, config.target.L), int(config.plan.n))]
    return _drive(config, steppers, with_velocity=True)


def run_epochs(config: RunConfig) -> Trace:
    """Run every epoch of a schedule, carrying the ensemble across epoch boundaries."""
    steppers = [(_KineticStepper(dl, config.target.L), int(n)) for dl, n in config.epochs()]
    return _drive(config, steppers, with_velocity=True)

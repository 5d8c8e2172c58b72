"""Verification suites and the underdamped-vs-ULA scaling comparison.

Each suite returns a :class:`SuiteResult` holding named pass/fail checks plus
a table and plot description that the CLI writes out as CSV and SVG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import coupling, kernel
from .baseline import calibrate_ula_constant, ula_step_size
from .errors import UsageError
from .kernel import ChainState
from .laws import KineticLaw, OverdampedLaw, iterations_to_accuracy
from .model import TargetModel, diagonal_quadratic, isotropic_quadratic
from .planner import ProblemSpec, kinetic_energy_bound, plan_fixed

KERNEL_DELTAS = (1e-6, 1e-4, 1e-2, 0.1, 0.5, 0.99)
DISCRETIZATION_DELTAS = (0.025, 0.05, 0.1, 0.2)
COMPARE_D_GRID = (2, 8, 32, 128)
COMPARE_EPS_GRID = (0.4, 0.2, 0.1, 0.05)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)
    plot: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)


# kernel


def kernel_quadrature(delta: float, L: float) -> dict:
    """Transition coefficients by adaptive quadrature of their time integrals.

    With γ = 2 and u = 1/L the solution over [0, δ] is driven by
    e^{-2(δ-s)} and 1 - e^{-2(δ-s)}; every coefficient is an integral of
    products of these two kernels.
    """
    u = 1.0 / L

    def integral(fn):
        val, _ = quad(fn, 0.0, delta, epsabs=0.0, epsrel=1e-13, limit=200)
        return val

    decay = lambda r: math.exp(-2.0 * r)  # noqa: E731
    rise = lambda r: -math.expm1(-2.0 * r)  # noqa: E731
    return {
        "a_vv": math.exp(-2.0 * delta),
        "b_v": u * integral(decay),
        "a_xv": integral(decay),
        "b_x": 0.5 * u * integral(rise),
        "sigma_vv": 4.0 * u * integral(lambda r: decay(r) ** 2),
        "sigma_xx": u * integral(lambda r: rise(r) ** 2),
        "sigma_xv": 2.0 * u * integral(lambda r: decay(r) * rise(r)),
    }


def one_step_moments(delta: float, L: float, draws: int, seed: int = 0, x=0.3, v=-0.7, g=1.1) -> dict:
    """Monte Carlo mean and covariance of one transition from a fixed 1-D state."""
    c = kernel.coefficients(delta, L)
    rng = np.random.default_rng(seed)
    state = ChainState(np.full((draws, 1), float(x)), np.full((draws, 1), float(v)))
    out = kernel.step(c, state, np.full((draws, 1), float(g)), rng)
    pts = np.concatenate([out.x, out.v], axis=1)
    mean_x, mean_v = kernel.conditional_moments(c, ChainState(np.array([x]), np.array([v])), np.array([g]))
    return {
        "coeffs": c,
        "mean": pts.mean(axis=0),
        "cov": np.cov(pts, rowvar=False),
        "exact_mean": np.array([mean_x[0], mean_v[0]]),
        "std_err": pts.std(axis=0, ddof=1) / math.sqrt(draws),
    }


def verify_kernel(deltas=KERNEL_DELTAS, L: float = 2.0, draws: int = 10**6, seed: int = 0,
                  rel_tol: float = 1e-8) -> SuiteResult:
    res = SuiteResult("kernel", columns=["delta", "coefficient", "closed_form", "quadrature", "rel_err"])
    worst = {}
    for delta in deltas:
        c = kernel.coefficients(delta, L)
        q = kernel_quadrature(delta, L)
        for name, ref in q.items():
            val = getattr(c, name)
            err = abs(val - ref) / abs(ref)
            res.rows.append([float(delta), name, val, ref, err])
            worst[name] = max(worst.get(name, 0.0), err)
        det = c.sigma_xx * c.sigma_vv - c.sigma_xv**2
        res.check(f"psd delta={delta:g}", det >= 0, f"det={det:.3e}")
    for name, err in worst.items():
        res.check(f"quadrature {name}", err <= rel_tol, f"max rel err {err:.2e}")
    if draws:
        mc = one_step_moments(0.5, L, draws, seed)
        c = mc["coeffs"]
        exact_cov = np.array([[c.sigma_xx, c.sigma_xv], [c.sigma_xv, c.sigma_vv]])
        rel = np.abs(mc["cov"] - exact_cov) / np.abs(exact_cov)
        res.check("monte carlo covariance", np.all(rel <= 0.01), f"max rel err {rel.max():.4f}")
        z = np.abs(mc["mean"] - mc["exact_mean"]) / mc["std_err"]
        res.check("monte carlo mean", np.all(z <= 4.0), f"max |z| {z.max():.2f}")
    res.plot = {
        "series": {n: ([r[0] for r in res.rows if r[1] == n], [max(r[4], 1e-17) for r in res.rows if r[1] == n])
                   for n in worst},
        "title": "kernel coefficients vs quadrature", "xlabel": "delta", "ylabel": "relative error",
        "logx": True, "logy": True,
    }
    return res


# contraction


def contraction_pairs(d: int) -> list[tuple[str, coupling.CoupledPair]]:
    """Deterministic initial pairs: position gap, velocity gap and a mixed gap."""
    e1 = np.zeros(d)
    e1[0] = 1.0
    ones = np.ones(d) / math.sqrt(d)
    z = np.zeros(d)
    return [
        ("position", coupling.CoupledPair(ChainState(e1, z), ChainState(z, z))),
        ("velocity", coupling.CoupledPair(ChainState(z, ones), ChainState(z, z))),
        ("mixed", coupling.CoupledPair(ChainState(ones, -ones), ChainState(-e1, e1))),
    ]


def verify_contraction(targets: list[TargetModel] | None = None, h: float = 1e-3, paths: int = 100,
                       horizon: float = 5.0, num_samples: int = 50, seed: int = 0,
                       tolerance: float = 0.05) -> SuiteResult:
    """Envelope ℓ(t) ≤ ℓ(0)e^{-t/κ}(1 + tolerance) on each target and initial pair."""
    if targets is None:
        targets = [isotropic_quadratic(2, 1.0), diagonal_quadratic([1.0, 4.0])]
    res = SuiteResult("contraction", columns=["kappa", "pair", "t", "measured", "bound", "ratio"])
    series = {}
    for target in targets:
        kappa = target.kappa
        t_end = horizon * kappa
        for label, pair in contraction_pairs(target.dimension):
            samples = coupling.contraction_experiment(target, pair, t_end, h, paths=paths,
                                                      num_samples=num_samples, seed=seed)
            ratios = coupling.envelope_ratios(samples, kappa)
            l0 = samples[0].value
            for s, r in zip(samples, ratios):
                res.rows.append([kappa, label, s.t, s.value, l0 * math.exp(-s.t / kappa), float(r)])
            res.check(f"envelope kappa={kappa:g} {label}", ratios.max() <= 1 + tolerance,
                      f"max ratio {ratios.max():.4f}")
            if kappa == 1.0:
                rate = coupling.fitted_decay_rate(samples)
                res.check(f"decay rate kappa=1 {label}", rate <= -(1 - 0.1) / kappa, f"fitted rate {rate:.3f}")
            series[f"k={kappa:g} {label}"] = ([s.t for s in samples], [s.value / l0 for s in samples])
        t = np.linspace(0, t_end, 50)
        series[f"k={kappa:g} bound"] = (t.tolist(), np.exp(-t / kappa).tolist())
    res.plot = {"series": series, "title": "coupled Lyapunov function", "xlabel": "t",
                "ylabel": "l(t)/l(0)", "logy": True}
    return res


# discretization


def verify_discretization(target: TargetModel | None = None, deltas=DISCRETIZATION_DELTAS,
                          chains: int = 4000, seed: int = 0, refinement: int = coupling.DEFAULT_REFINEMENT,
                          kinetic_bound: float | None = None, p0: ChainState | None = None) -> SuiteResult:
    """Coupled deviation at t = δ against δ²√(2E_K/5), plus the δ⁴ scaling of its square."""
    target = isotropic_quadratic(2, 1.0) if target is None else target
    if p0 is None:
        p0 = coupling.stationary_ensemble(target, chains, np.random.default_rng(seed))
    res = SuiteResult("discretization", columns=["delta", "measured", "bound", "ratio", "measured_half_h"])
    measured = []
    for delta in deltas:
        out = coupling.discretization_detail(target, p0, delta, h=delta / refinement,
                                             kinetic_bound=kinetic_bound, seed=seed, richardson=True)
        measured.append(out["measured"])
        res.rows.append([float(delta), out["measured"], out["bound"], out["measured"] / out["bound"],
                         out["measured_half_h"]])
        res.check(f"bound delta={delta:g}", out["measured"] <= out["bound"],
                  f"{out['measured']:.3e} <= {out['bound']:.3e}")
        drift = abs(out["measured_half_h"] - out["measured"]) / out["measured"]
        res.check(f"richardson delta={delta:g}", drift <= 0.05, f"relative change at h/2 {drift:.2e}")
    if len(deltas) >= 2:
        slope = coupling.loglog_slope(deltas, np.square(measured))
        res.summary["slope"] = slope
        res.check("log-log slope of measured^2", 3.5 <= slope <= 4.5, f"slope {slope:.3f}")
    res.plot = {
        "series": {"measured": (list(deltas), measured), "bound": (list(deltas), [r[2] for r in res.rows])},
        "title": "discretization error at t = delta", "xlabel": "delta", "ylabel": "W2 upper bound",
        "logx": True, "logy": True,
    }
    return res


# kinetic energy


def verify_kinetic(trace, spec: ProblemSpec) -> SuiteResult:
    """Every snapshot's mean ‖v‖² against E_K = 26(d/m + D²)."""
    bound = kinetic_energy_bound(spec)
    res = SuiteResult("kinetic", columns=["iteration", "kinetic_energy", "bound", "ratio"])
    its, kes = [], []
    for diag in trace.diagnostics:
        ke = diag["kinetic_energy"]
        its.append(diag["iteration"])
        kes.append(ke)
        res.rows.append([diag["iteration"], ke, bound, ke / bound])
    res.summary["max_kinetic_energy"] = max(kes)
    res.check("max kinetic energy", max(kes) <= bound, f"{max(kes):.4f} <= {bound:g}")
    res.plot = {"series": {"mean |v|^2": (its, kes), "E_K": (its, [bound] * len(its))},
                "title": "kinetic energy along the run", "xlabel": "iteration", "ylabel": "mean |v|^2"}
    return res


# scaling comparison


def _iterations(d: int, epsilon: float, ula_constant: float, m: float, L: float, max_iter: int) -> tuple:
    target = isotropic_quadratic(d, m)
    x0 = target.minimizer
    delta = plan_fixed(ProblemSpec(d, m, L, 0.0, epsilon)).delta
    kin = iterations_to_accuracy(KineticLaw.dirac(target, x0), delta, epsilon, max_iter=max_iter)
    ula_delta = ula_step_size(epsilon, d, m, L, ula_constant)
    ula = iterations_to_accuracy(OverdampedLaw.dirac(target, x0), ula_delta, epsilon, max_iter=max_iter)
    return delta, kin, ula_delta, ula


def compare_scaling(d_grid=COMPARE_D_GRID, eps_grid=COMPARE_EPS_GRID, eps_fixed: float = 0.2,
                    d_fixed: int = 128, m: float = 1.0, L: float = 1.0, max_iter: int = 10**7) -> SuiteResult:
    """Iterations to reach W₂ ≤ ε for underdamped and ULA on isotropic quadratics.

    Both chains start at x*; iteration counts come from the exact Gaussian
    laws, so each point is free of Monte Carlo error. Both samplers use one
    gradient per iteration, so iteration and gradient counts coincide.
    """
    if len(set(d_grid)) < 2 or len(set(eps_grid)) < 2:
        raise UsageError("slope fits need at least two distinct grid points in both d and epsilon")
    constant = calibrate_ula_constant(max(max(eps_grid), eps_fixed), d=2, m=m, L=L)
    res = SuiteResult("compare", columns=["grid", "d", "epsilon", "sampler", "step_size", "iterations",
                                          "gradient_evaluations"])
    res.summary["ula_constant"] = constant
    curves = {}
    for grid, points in (("d", [(d, eps_fixed) for d in d_grid]), ("epsilon", [(d_fixed, e) for e in eps_grid])):
        kin_counts, ula_counts = [], []
        for d, eps in points:
            kd, kn, ud, un = _iterations(d, eps, constant, m, L, max_iter)
            if kn is None or un is None:
                raise UsageError(f"no convergence within {max_iter} iterations at d={d}, epsilon={eps}")
            res.rows.append([grid, d, eps, "underdamped", kd, kn, kn])
            res.rows.append([grid, d, eps, "ula", ud, un, un])
            kin_counts.append(kn)
            ula_counts.append(un)
        xs = [p[0] if grid == "d" else p[1] for p in points]
        res.summary[f"{grid}_exponent_underdamped"] = coupling.loglog_slope(xs, kin_counts)
        res.summary[f"{grid}_exponent_ula"] = coupling.loglog_slope(xs, ula_counts)
        curves[grid] = {"underdamped": (xs, kin_counts), "ula": (xs, ula_counts)}
    s = res.summary
    res.check("d-exponent underdamped <= 0.8", s["d_exponent_underdamped"] <= 0.8,
              f"{s['d_exponent_underdamped']:.3f}")
    res.check("d-exponent underdamped < ULA", s["d_exponent_underdamped"] < s["d_exponent_ula"],
              f"{s['d_exponent_underdamped']:.3f} < {s['d_exponent_ula']:.3f}")
    res.check("epsilon-exponent underdamped within 0.3 of -1", abs(s["epsilon_exponent_underdamped"] + 1) <= 0.3,
              f"{s['epsilon_exponent_underdamped']:.3f}")
    res.check("epsilon-exponent ULA within 0.4 of -2", abs(s["epsilon_exponent_ula"] + 2) <= 0.4,
              f"{s['epsilon_exponent_ula']:.3f}")
    res.plot = {"d": {"series": curves["d"], "title": f"iterations to W2 <= {eps_fixed:g}", "xlabel": "d",
                      "ylabel": "iterations", "logx": True, "logy": True},
                "epsilon": {"series": curves["epsilon"], "title": f"iterations at d = {d_fixed}",
                            "xlabel": "epsilon", "ylabel": "iterations", "logx": True, "logy": True}}
    return res

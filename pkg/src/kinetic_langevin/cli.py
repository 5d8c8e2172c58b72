"""Command-line driver: ``kinetic-langevin {plan,sample,verify,compare}``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical divergence,
4 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import experiments
from .config import Config, load_config
from .errors import DivergenceError, KineticLangevinError, UsageError
from .metrics import empirical_moments, stationary_summary, w2_gaussian
from .planner import EpochSchedule, initial_distance_bound, kinetic_energy_bound
from .report import svg_line_chart, write_csv
from .sampler import RunConfig, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGENCE = 3
EXIT_CHECK_FAILED = 4

SUITES = ("kernel", "contraction", "discretization", "kinetic")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config with sections problem/target/run/experiment")
    common.add_argument("--out", metavar="DIR", default=None, help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=None, help="master seed, overrides run.seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads (fallback: KL_THREADS)")
    common.add_argument("--stride", type=int, default=None, help="snapshot stride, overrides run.stride")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="kinetic-langevin", description="Underdamped Langevin MCMC sampler and verification harness.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("plan", parents=[common], help="print the step size and iteration plan as JSON")
    sub.add_parser("sample", parents=[common], help="run the chain ensemble and write trace files")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    sub.add_parser("compare", parents=[common], help="underdamped vs ULA scaling in d and epsilon")
    return p


def _resolve_overrides(cfg: Config, args) -> Config:
    run_cfg = cfg.run.model_copy()
    if args.seed is not None:
        if not (0 <= args.seed < 2**64):
            raise UsageError("--seed must be an unsigned 64-bit integer")
        run_cfg.seed = args.seed
    threads = args.threads
    if threads is None and os.environ.get("KL_THREADS"):
        try:
            threads = int(os.environ["KL_THREADS"])
        except ValueError:
            raise UsageError("KL_THREADS must be an integer") from None
    if threads is not None:
        if threads < 1:
            raise UsageError("--threads must be >= 1")
        run_cfg.threads = threads
    if args.stride is not None:
        if args.stride < 1:
            raise UsageError("--stride must be >= 1")
        run_cfg.stride = args.stride
    return cfg.model_copy(update={"run": run_cfg})


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_plan(cfg: Config, raw: dict, args) -> int:
    target = cfg.build_target()
    spec = cfg.problem_spec(target)
    plan = cfg.build_plan(target)
    doc = {
        "problem": {"d": spec.d, "m": spec.m, "L": spec.L, "D2": spec.D2, "epsilon": spec.epsilon,
                    "sigma2": spec.sigma2},
        "kappa": spec.kappa,
        "scale": spec.scale,
        "kinetic_energy_bound": kinetic_energy_bound(spec),
        "initial_distance_bound": initial_distance_bound(spec),
        "schedule": "epochs" if isinstance(plan, EpochSchedule) else "fixed",
        "plan": plan.to_dict(),
        "config_sha256": cfg.provenance_hash(),
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _write_json(_out_dir(args, ".") / "plan.json", doc)
    return EXIT_OK


def _run_config(cfg: Config):
    target = cfg.build_target()
    plan = cfg.build_plan(target)
    rc = RunConfig(
        target=target,
        plan=plan,
        chains=cfg.run.chains,
        seed=cfg.run.seed,
        stride=cfg.run.stride,
        x0=cfg.initial_position(target),
        noise=cfg.noise_oracle(target),
        threads=cfg.run.threads,
    )
    return target, rc


def final_w2(target, trace) -> float | None:
    """x-marginal W₂ of the final ensemble to p* via moment-matched Gaussians."""
    if target.stationary_covariance is None or trace.final.chains < 2:
        return None
    return w2_gaussian(empirical_moments(trace.final, "x"), stationary_summary(target, "x"))


def write_states(path: Path, trace, config_hash: str) -> None:
    def rows():
        for snap in trace.snapshots:
            M, d = snap.x.shape
            for c in range(M):
                for j in range(d):
                    yield [snap.iteration, c, j, float(snap.x[c, j]), "" if snap.v is None else float(snap.v[c, j])]

    write_csv(path, ["iteration", "chain", "coord", "x", "v"], rows(), config_hash)


def cmd_sample(cfg: Config, raw: dict, args) -> int:
    out = _out_dir(args, "out")
    target, rc = _run_config(cfg)
    trace = run(rc)
    h = cfg.provenance_hash()
    doc = trace.to_dict()
    doc["config_sha256"] = h
    w2 = final_w2(target, trace)
    doc["final_w2_x"] = w2
    _write_json(out / "trace.json", doc)
    write_states(out / "states.csv", trace, h)
    eps = cfg.problem.epsilon
    if w2 is None:
        print(f"final iteration {trace.final.iteration}; no closed-form p* moments for {target.name}")
    else:
        status = "within" if w2 <= eps else "ABOVE"
        print(f"final iteration {trace.final.iteration}: x-marginal W2 = {w2:.4g} ({status} epsilon = {eps:g})")
    return EXIT_OK


def _emit(result: experiments.SuiteResult, out: Path, config_hash: str) -> None:
    write_csv(out / f"{result.name}.csv", result.columns, result.rows, config_hash)
    plots = result.plot
    if plots and "series" in plots:
        plots = {"": plots}
    for key, spec in plots.items():
        name = f"{result.name}_{key}.svg" if key else f"{result.name}.svg"
        svg_line_chart(out / name, spec["series"], title=spec.get("title", ""), xlabel=spec.get("xlabel", ""),
                       ylabel=spec.get("ylabel", ""), logx=spec.get("logx", False), logy=spec.get("logy", False))


def _report(result: experiments.SuiteResult) -> int:
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {result.name}: {c.name}  {c.detail}")
    for k, v in result.summary.items():
        print(f"      {k} = {v:.6g}" if isinstance(v, float) else f"      {k} = {v}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def _experiment_args(cfg: Config, allowed: set) -> dict:
    extra = set(cfg.experiment) - allowed
    if extra:
        raise UsageError(f"unknown experiment keys {sorted(extra)}; allowed: {sorted(allowed)}")
    return dict(cfg.experiment)


def cmd_verify(cfg: Config, raw: dict, args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; expected one of {', '.join(SUITES)}")
    out = _out_dir(args, "out")
    seed = cfg.run.seed
    if args.suite == "kernel":
        kw = _experiment_args(cfg, {"deltas", "L", "draws"})
        result = experiments.verify_kernel(seed=seed, **kw)
    elif args.suite == "contraction":
        kw = _experiment_args(cfg, {"h", "paths", "horizon", "num_samples"})
        targets = None if "target" not in raw else [cfg.build_target()]
        result = experiments.verify_contraction(targets=targets, seed=seed, **kw)
    elif args.suite == "discretization":
        kw = _experiment_args(cfg, {"deltas", "refinement"})
        target = cfg.build_target()
        if "deltas" in kw:
            kw["deltas"] = tuple(kw["deltas"])
            if not all(0 < x <= 1 for x in kw["deltas"]):
                raise UsageError("experiment.deltas must lie in (0, 1]")
        p0 = None
        if target.stationary_covariance is None:
            p0 = _warm_ensemble(cfg, target)
        result = experiments.verify_discretization(target, chains=cfg.run.chains, seed=seed, p0=p0, **kw)
    else:
        _experiment_args(cfg, set())
        target, rc = _run_config(cfg)
        spec = cfg.problem_spec(target)
        trace = run(rc)
        result = experiments.verify_kinetic(trace, spec)
    _emit(result, out, cfg.provenance_hash())
    return _report(result)


def _warm_ensemble(cfg: Config, target):
    """Near-stationary ensemble for targets without closed-form p*: a long run at small δ."""
    from .kernel import ChainState
    from .planner import SamplerPlan

    rc = RunConfig(target=target, plan=SamplerPlan(0.05, 2000, "exact"), chains=cfg.run.chains,
                   seed=cfg.run.seed, stride=2000, threads=cfg.run.threads)
    final = run(rc).final
    return ChainState(final.x, final.v)


def cmd_compare(cfg: Config, raw: dict, args) -> int:
    kw = _experiment_args(cfg, {"d_grid", "eps_grid", "eps_fixed", "d_fixed", "max_iter"})
    for key in ("d_grid", "eps_grid"):
        if key in kw:
            kw[key] = tuple(kw[key])
    out = _out_dir(args, "out")
    result = experiments.compare_scaling(**kw)
    _emit(result, out, cfg.provenance_hash())
    return _report(result)


COMMANDS = {"plan": cmd_plan, "sample": cmd_sample, "verify": cmd_verify, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, raw = load_config(args.config)
        cfg = _resolve_overrides(cfg, args)
        return COMMANDS[args.command](cfg, raw, args)
    except DivergenceError as exc:
        print(f"error: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KineticLangevinError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

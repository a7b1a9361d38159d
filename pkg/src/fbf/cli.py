"""Command-line front end: fbf solve | check | sweep.

Exit codes: 0 success, 1 error (bad config, divergence), 2 monitor violation
when --strict is given.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import suites
from .config import (
    MONITOR_NAMES,
    ConfigError,
    RunConfig,
    build_from_config,
    initial_state,
    load_raw,
    set_by_path,
    validate_config,
)
from .diagnostics import (
    envelope_verdict,
    ergodic_objective_monitor,
    exponential_envelope,
    fejer_monitor,
    inclusion_identity_monitor,
    residual_integral_monitor,
    zdot_bound_monitor,
)
from .discrete import discrete_ergodic_point, run_tseng
from .dynamics import DivergenceError, ergodic_point, integrate
from .exports import (
    write_envelope_csv,
    write_iterates_csv,
    write_summary_json,
    write_trajectory_csv,
)
from .operators import ParameterError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

COINCIDENCE_STEPS = 100


def _default_probes(problem, x0, seed):
    rng = np.random.default_rng([seed, 1])
    probes = []
    if problem.known_solution is not None:
        probes.append(problem.known_solution)
    probes.append(x0)
    probes.extend(rng.uniform(-3.0, 3.0, size=(2, problem.dim)))
    if problem.domain_project is not None:
        probes = [problem.domain_project(p) for p in probes]
    return probes


def _run_monitors(record, problem, schedule, names, x0, seed, continuous):
    verdicts = {}
    envelope_report = None
    for name in names:
        if name == "fejer":
            verdicts[name] = fejer_monitor(record, problem.known_solution)
        elif name == "residual_integral":
            if continuous:
                verdicts[name] = residual_integral_monitor(record, schedule)
        elif name == "envelope":
            if continuous and problem.rho is not None and problem.known_solution is not None:
                envelope_report = exponential_envelope(
                    record, schedule, problem.rho, problem.known_solution
                )
                verdicts[name] = envelope_verdict(envelope_report)
        elif name == "ergodic_objective":
            if problem.objective is not None:
                probes = _default_probes(problem, x0, seed)
                verdicts[name] = ergodic_objective_monitor(record, problem.objective, probes)
        elif name == "zdot_bound":
            if continuous:
                verdicts[name] = zdot_bound_monitor(record, schedule)
        elif name == "inclusion_identity":
            verdicts[name] = inclusion_identity_monitor(record, problem)
    return verdicts, envelope_report


def _verdict_dict(verdicts):
    return {name: v.to_dict() for name, v in verdicts.items()}


def _any_violation(verdicts) -> bool:
    return any(v.applicable and not v.holds for v in verdicts.values())


def _time_to_tol(times, residuals, tol):
    hits = np.flatnonzero(np.asarray(residuals) <= tol)
    return float(np.asarray(times)[hits[0]]) if len(hits) else None


def solve_run(cfg: RunConfig, strict: bool = False):
    """Execute one configured run; returns (exit_code, summary dict)."""
    problem, schedule = build_from_config(cfg)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    x0 = initial_state(cfg, problem)
    monitor_names = cfg.monitors if cfg.monitors is not None else list(MONITOR_NAMES)

    summary = {
        "problem": cfg.problem_name,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "x0": x0,
        "beta": problem.beta,
    }
    violated = False

    if cfg.mode in ("continuous", "both"):
        record = integrate(
            problem,
            schedule,
            x0,
            horizon=cfg.horizon,
            method=cfg.method,
            h=cfg.h,
            sample_every=cfg.sample_every,
        )
        write_trajectory_csv(outdir / "trajectory.csv", record)
        verdicts, env_report = _run_monitors(
            record, problem, schedule, monitor_names, x0, cfg.seed, continuous=True
        )
        if env_report is not None:
            write_envelope_csv(outdir / "envelope.csv", env_report)
        violated = violated or _any_violation(verdicts)
        summary["continuous"] = {
            "final_t": float(record.ts[-1]),
            "final_state": record.xs[-1],
            "final_residual": float(record.residuals[-1]),
            "ergodic_point": ergodic_point(record) if len(record.ts) > 1 else None,
            "time_to_tol": _time_to_tol(record.ts, record.residuals, cfg.tol),
            "monitors": _verdict_dict(verdicts),
        }

    if cfg.mode in ("discrete", "both"):
        disc = run_tseng(problem, schedule, x0, max_iter=cfg.max_iter, tol=cfg.tol)
        write_iterates_csv(outdir / "iterates.csv", disc)
        verdicts, _ = _run_monitors(
            disc, problem, schedule, monitor_names, x0, cfg.seed, continuous=False
        )
        violated = violated or _any_violation(verdicts)
        summary["discrete"] = {
            "iterations": int(len(disc.ns)),
            "converged": bool(disc.converged),
            "final_state": disc.xs[-1],
            "final_residual": float(disc.residuals[-1]),
            "ergodic_point": discrete_ergodic_point(disc),
            "time_to_tol": _time_to_tol(disc.ns, disc.residuals, cfg.tol),
            "monitors": _verdict_dict(verdicts),
        }

    if cfg.mode == "both":
        steps = min(COINCIDENCE_STEPS, cfg.max_iter)
        euler = integrate(
            problem, schedule, x0, horizon=float(steps), method="euler", h=1.0, sample_every=1.0
        )
        disc = run_tseng(problem, schedule, x0, max_iter=steps + 1, tol=0.0)
        m = min(len(euler.ts), len(disc.ns))
        dev = float(
            np.max(np.abs(euler.xs[:m] - disc.xs[:m]) / np.maximum(1.0, np.abs(euler.xs[:m])))
        )
        summary["coincidence"] = {"steps": m - 1, "max_rel_dev": dev, "holds": dev <= 1e-12}

    write_summary_json(outdir / "summary.json", summary)
    code = EXIT_VIOLATION if (strict and violated) else EXIT_OK
    return code, summary


def cmd_solve(config_path, strict: bool = False) -> int:
    try:
        cfg = validate_config(load_raw(config_path))
        code, _ = solve_run(cfg, strict=strict)
        return code
    except (ConfigError, ParameterError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def cmd_check(suite: str, seed: int = 42) -> int:
    try:
        results = suites.run_suite(suite, seed=seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    width = max(len(r.suite) for r in results)
    print(f"{'suite':<{width}}  checks  failures")
    total_checks = total_failures = 0
    for r in results:
        print(f"{r.suite:<{width}}  {r.checks:>6}  {r.failures:>8}")
        total_checks += r.checks
        total_failures += r.failures
        for msg in r.messages:
            print(f"  FAIL: {msg}")
    print(f"{'total':<{width}}  {total_checks:>6}  {total_failures:>8}")
    return EXIT_OK if total_failures == 0 else EXIT_ERROR


def cmd_sweep(config_path, param: str, values, strict: bool = False) -> int:
    if not values:
        print("error: values: list must not be empty", file=sys.stderr)
        return EXIT_ERROR
    try:
        raw = load_raw(config_path)
        base = validate_config(raw)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    outdir = Path(base.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    def one(value):
        import copy

        entry_raw = copy.deepcopy(raw)
        try:
            set_by_path(entry_raw, param, value)
            entry_raw["output_dir"] = str(outdir / f"{param.replace('.', '_')}={value:g}")
            cfg = validate_config(entry_raw)
            code, summary = solve_run(cfg, strict=strict)
        except (ConfigError, ParameterError, DivergenceError) as exc:
            return EXIT_ERROR, value, None, None, str(exc)
        section = summary.get("continuous") or summary.get("discrete")
        return code, value, section["final_residual"], section["time_to_tol"], None

    with ThreadPoolExecutor(max_workers=min(4, len(values))) as pool:
        rows = list(pool.map(one, values))

    agg_path = outdir / "aggregate.csv"
    with open(agg_path, "w") as fh:
        fh.write("value,final_residual,time_to_tol\n")
        for code, value, residual, ttt, err in rows:
            res = "" if residual is None else repr(float(residual))
            ttt_s = "" if ttt is None else repr(float(ttt))
            fh.write(f"{value:g},{res},{ttt_s}\n")

    for code, value, _, _, err in rows:
        if err:
            print(f"error [{param}={value:g}]: {err}", file=sys.stderr)
    if any(code == EXIT_ERROR for code, *_ in rows):
        return EXIT_ERROR
    if any(code == EXIT_VIOLATION for code, *_ in rows):
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a pre-subcommand --strict from being clobbered by the default
    common.add_argument(
        "--strict",
        action="store_true",
        default=argparse.SUPPRESS,
        help="exit 2 when any monitor reports a violation",
    )
    parser = argparse.ArgumentParser(
        prog="fbf",
        description="Solve monotone inclusions 0 in Ax + Bx by forward-backward-forward "
        "dynamics and verify the convergence guarantees along the way.",
    )
    parser.add_argument("--strict", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", parents=[common], help="run a configured solve")
    p_solve.add_argument("config", help="path to a TOML run configuration")

    p_check = sub.add_parser("check", parents=[common], help="run invariant check suites")
    p_check.add_argument(
        "suite", choices=("operators", "dynamics", "rates", "ergodic", "all")
    )
    p_check.add_argument("--seed", type=int, default=42)

    p_sweep = sub.add_parser("sweep", parents=[common], help="sweep one numeric config key")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, help="dotted key, e.g. integrator.h")
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated numeric values, e.g. 0.1,0.01"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config, strict=args.strict)
    if args.command == "check":
        return cmd_check(args.suite, seed=args.seed)
    if args.command == "sweep":
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            print("error: values: must be comma-separated numbers", file=sys.stderr)
            return EXIT_ERROR
        return cmd_sweep(args.config, args.param, values, strict=args.strict)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

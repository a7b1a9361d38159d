"""Invariant check suites run by `fbf check`.

Each suite sweeps the operator/problem catalogs and counts violated checks;
everything is deterministic for a given seed.  The suites intentionally call
the same public operations as library users do, so a broken primitive (for
example a wrong soft threshold) surfaces here as a nonzero failure count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import operators as ops
from . import problems
from .diagnostics import (
    constant_rate,
    decay_integrand,
    ergodic_objective_monitor,
    exponential_envelope,
    fejer_monitor,
    inclusion_identity_monitor,
    lipschitz_probe,
    residual_integral_monitor,
    zdot_bound_monitor,
)
from .discrete import discrete_ergodic_point, run_tseng
from .dynamics import fbf_vector_field, integrate, schedule_catalog
from .problems import grid_minimize, grid_minimize_1d

SQRT6 = math.sqrt(6.0)


@dataclass
class CheckResult:
    suite: str
    checks: int = 0
    failures: int = 0
    messages: list = dataclass_field(default_factory=list)

    def record(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.failures += 1
            self.messages.append(message)


# --- operator fixtures ------------------------------------------------------

def _operator_fixtures():
    """(operator, dim, points known to be zeros of the underlying operator)."""
    q = np.array([[2.0, 0.5], [0.5, 1.0]])
    b = np.array([0.4, -0.3])
    return [
        (ops.prox_catalog("zero"), 2, [np.zeros(2), np.array([1.5, -2.0])]),
        (ops.prox_catalog("l1_norm", weight=1.0), 2, [np.zeros(2)]),
        (ops.prox_catalog("l1_norm", weight=0.3), 1, [np.zeros(1)]),
        (
            ops.prox_catalog("box_indicator", lo=np.zeros(2), hi=np.ones(2)),
            2,
            [np.array([0.5, 0.5]), np.array([0.0, 1.0])],
        ),
        (
            ops.prox_catalog("ball_indicator", radius=2.0),
            2,
            [np.zeros(2), np.array([1.0, 1.0])],
        ),
        (ops.prox_catalog("quadratic", q=q, b=b), 2, [np.linalg.solve(q, -b)]),
        (
            ops.prox_catalog("linear_monotone", m=np.array([[1.0, 2.0], [-2.0, 1.0]])),
            2,
            [np.zeros(2)],
        ),
    ]


def _prox_equivalence_cases():
    """(operator, scalar function of batches (m, d), dim) for grid comparison."""
    box1 = ops.prox_catalog("box_indicator", lo=0.0, hi=1.0)
    box2 = ops.prox_catalog("box_indicator", lo=np.zeros(2), hi=np.ones(2))
    ball2 = ops.prox_catalog("ball_indicator", radius=1.5)
    l1 = ops.prox_catalog("l1_norm", weight=1.0)
    quad1 = ops.prox_catalog("quadratic", q=[[2.0]], b=[0.0])
    quad2 = ops.prox_catalog("quadratic", q=[[2.0, 0.5], [0.5, 1.0]], b=[0.4, -0.3])

    def f_box(lo, hi):
        def f(y):
            inside = np.all((y >= lo - 1e-12) & (y <= hi + 1e-12), axis=-1)
            return np.where(inside, 0.0, np.inf)

        return f

    def f_ball(radius):
        def f(y):
            return np.where(np.linalg.norm(y, axis=-1) <= radius + 1e-12, 0.0, np.inf)

        return f

    def f_quad(q, b):
        q = np.asarray(q, dtype=float)
        b = np.asarray(b, dtype=float)

        def f(y):
            return 0.5 * np.sum((y @ q) * y, axis=-1) + y @ b

        return f

    return [
        (ops.prox_catalog("zero"), lambda y: np.zeros(y.shape[0]), 1),
        (l1, lambda y: np.abs(y).sum(axis=-1), 1),
        (l1, lambda y: np.abs(y).sum(axis=-1), 2),
        (box1, f_box(0.0, 1.0), 1),
        (box2, f_box(np.zeros(2), np.ones(2)), 2),
        (ball2, f_ball(1.5), 2),
        (quad1, f_quad([[2.0]], [0.0]), 1),
        (quad2, f_quad([[2.0, 0.5], [0.5, 1.0]], [0.4, -0.3]), 2),
    ]


def prox_reference(fun, gamma: float, x, lo: float = -10.0, hi: float = 10.0):
    """Independent prox by brute-force grid search of fun(y)+||y-x||^2/(2 gamma)."""
    x = ops.as_state(x)
    dim = x.shape[0]

    def total(y):
        diff = y - x
        return fun(y) + np.sum(diff * diff, axis=-1) / (2.0 * gamma)

    if dim == 1:
        return grid_minimize_1d(total, lo, hi)
    return grid_minimize(total, np.full(dim, lo), np.full(dim, hi))


GAMMA_GRID = (0.01, 0.1, 1.0, 10.0)


def check_operators(seed: int = 0) -> CheckResult:
    result = CheckResult("operators")
    rng = np.random.default_rng(seed)

    for op, dim, zeros in _operator_fixtures():
        x = rng.uniform(-10.0, 10.0, size=(1000, dim))
        y = rng.uniform(-10.0, 10.0, size=(1000, dim))
        for gamma in GAMMA_GRID:
            jx = op.resolvent_oracle(gamma, x)
            jy = op.resolvent_oracle(gamma, y)
            diff = jx - jy
            lhs = np.sum(diff * diff, axis=-1)
            rhs = np.sum(diff * (x - y), axis=-1)
            result.record(
                bool(np.all(lhs <= rhs + 1e-10)),
                f"{op.name}: firm nonexpansiveness fails at gamma={gamma}",
            )
            yx = (x - jx) / gamma
            yy = (y - jy) / gamma
            ratio = np.linalg.norm(yx - yy, axis=-1) - np.linalg.norm(x - y, axis=-1) / gamma
            result.record(
                bool(np.all(ratio <= 1e-10)),
                f"{op.name}: Yosida Lipschitz bound fails at gamma={gamma}",
            )
            for zero in zeros:
                fixed = op.resolvent_oracle(gamma, zero.astype(float))
                result.record(
                    float(np.linalg.norm(fixed - zero)) <= 1e-12,
                    f"{op.name}: resolvent does not fix known zero {zero} at gamma={gamma}",
                )

        lam_grid = (0.1, 0.5, 1.0, 2.0, 5.0)
        probes = rng.uniform(-5.0, 5.0, size=(5, dim))
        ok = True
        for lam in lam_grid:
            for mu in lam_grid:
                for p in probes:
                    rep = ops.check_resolvent_parameter_inequality(op, lam, mu, p)
                    ok = ok and rep.holds
        result.record(ok, f"{op.name}: resolvent parameter inequality fails on grid")

    for op, fun, dim in _prox_equivalence_cases():
        for gamma in (0.5, 1.0):
            for probe in (np.full(dim, 3.0), np.full(dim, -1.0), np.full(dim, 0.3)):
                closed = op.resolvent_oracle(gamma, probe)
                brute = prox_reference(fun, gamma, probe)
                result.record(
                    float(np.max(np.abs(closed - brute))) <= 1e-4,
                    f"{op.name}: closed-form prox deviates from grid oracle "
                    f"(gamma={gamma}, x={probe.tolist()})",
                )

    kink = ops.soft_threshold(np.array([0.5, -0.5]), 0.5)
    result.record(bool(np.all(kink == 0.0)), "soft threshold at the kink must return 0")
    return result


def check_dynamics(seed: int = 0) -> CheckResult:
    result = CheckResult("dynamics")
    rng = np.random.default_rng(seed)

    for problem in problems.default_instances():
        gammas = [0.1 * problem.beta, 0.5 * problem.beta, 0.9 * problem.beta]
        report = lipschitz_probe(problem, gammas, n_pairs=2000, rng_seed=seed)
        result.record(
            report.max_ratio <= SQRT6 + 1e-8,
            f"{problem.name}: Lipschitz ratio {report.max_ratio:.6f} exceeds sqrt(6)",
        )

        gamma = 0.5 * problem.beta
        growth = []
        for radius in (1e6, 2e6):
            x = rng.uniform(-radius, radius, size=(2000, problem.dim))
            fx, _ = fbf_vector_field(problem, gamma, x)
            growth.append(float(np.max(np.linalg.norm(fx, axis=-1) / (1.0 + np.linalg.norm(x, axis=-1)))))
        result.record(
            np.isfinite(growth[1]) and growth[1] <= growth[0] * 1.05 + 1e-9,
            f"{problem.name}: linear-growth ratio unstable under radius doubling {growth}",
        )

        x_dom = rng.uniform(-5.0, 5.0, size=(100, problem.dim))
        if problem.domain_project is not None:
            x_dom = problem.domain_project(x_dom)
        fx, _ = fbf_vector_field(problem, 2.0**-30, x_dom)
        worst = float(np.max(np.linalg.norm(fx, axis=-1)))
        result.record(
            worst <= 1e-6,
            f"{problem.name}: field does not vanish at tiny gamma (max {worst:.2e})",
        )

        if problem.known_solution is not None:
            for gamma in gammas:
                dx, z = fbf_vector_field(problem, gamma, problem.known_solution)
                result.record(
                    float(np.linalg.norm(dx)) <= 1e-6,
                    f"{problem.name}: known solution is not an equilibrium at gamma={gamma}",
                )
                residual = float(np.linalg.norm(problem.known_solution - z)) / gamma
                result.record(
                    residual <= 1e-6,
                    f"{problem.name}: residual at known solution is {residual:.2e}",
                )

        schedule = schedule_catalog("constant", beta=problem.beta, value=0.5 * problem.beta)
        x0 = rng.standard_normal(problem.dim)
        record = integrate(problem, schedule, x0, horizon=2.0, method="rk4", h=0.01)
        ok = True
        for k in range(len(record.ts)):
            dx, z = fbf_vector_field(problem, record.gammas[k], record.xs[k])
            cap = math.sqrt(1.0 + (record.gammas[k] / problem.beta) ** 2)
            ok = ok and float(np.linalg.norm(dx)) <= cap * float(
                np.linalg.norm(record.xs[k] - z)
            ) + 1e-10
        result.record(ok, f"{problem.name}: velocity bound violated along trajectory")

        steps = 20
        euler = integrate(
            problem, schedule, x0, horizon=float(steps), method="euler", h=1.0, sample_every=1.0
        )
        disc = run_tseng(problem, schedule, x0, max_iter=steps + 1, tol=0.0)
        m = min(len(euler.ts), len(disc.ns))
        dev = float(
            np.max(
                np.abs(euler.xs[:m] - disc.xs[:m])
                / np.maximum(1.0, np.abs(euler.xs[:m]))
            )
        )
        result.record(
            dev <= 1e-12,
            f"{problem.name}: unit-step Euler and discrete iteration differ by {dev:.2e}",
        )

    rotation = problems.build("skew_rotation")
    schedule = schedule_catalog("constant", beta=1.0, value=0.5)
    x0 = np.array([1.0, 0.0])
    exact = math.exp(-0.25 * 10.0)
    errs = []
    for h in (0.1, 0.01):
        rec = integrate(rotation, schedule, x0, horizon=10.0, method="rk4", h=h, sample_every=1.0)
        errs.append(abs(rec.residuals[-1] - exact))
    ratio = errs[0] / max(errs[1], 1e-300)
    result.record(
        5e3 <= ratio <= 2e4,
        f"integrator order check: error ratio {ratio:.1f} outside [5e3, 2e4]",
    )
    return result


def check_rates(seed: int = 0) -> CheckResult:
    result = CheckResult("rates")
    rng = np.random.default_rng(seed)

    for problem in problems.default_instances():
        if problem.known_solution is None:
            continue
        schedule = schedule_catalog("constant", beta=problem.beta, value=0.5 * problem.beta)
        x0 = rng.standard_normal(problem.dim)
        record = integrate(problem, schedule, x0, horizon=10.0, h=0.01, sample_every=0.1)
        verdict = fejer_monitor(record, problem.known_solution)
        result.record(
            verdict.holds,
            f"{problem.name}: distance to solution increased by {verdict.worst_margin:.2e}",
        )
        ri = residual_integral_monitor(record, schedule)
        result.record(
            ri.holds, f"{problem.name}: residual integral exceeds budget by {ri.worst_margin:.2e}"
        )

    for name, value in (("strongly_monotone_quadratic", 0.5), ("l1_plus_identity", 0.5)):
        problem = problems.build(name)
        schedule = schedule_catalog("constant", beta=problem.beta, value=value * problem.beta)
        x0 = problem.domain_project(rng.standard_normal(problem.dim)) if problem.domain_project else rng.standard_normal(problem.dim)
        record = integrate(problem, schedule, x0, horizon=10.0, h=0.01, sample_every=0.1)
        report = exponential_envelope(record, schedule, problem.rho, problem.known_solution)
        result.record(
            report.holds,
            f"{name}: decay envelope violated at {len(report.violations)} samples",
        )
        sin_sched = schedule_catalog(
            "sinusoidal", beta=problem.beta, lo=0.3 * problem.beta, hi=0.7 * problem.beta
        )
        rec2 = integrate(problem, sin_sched, x0, horizon=10.0, h=0.01, sample_every=0.1)
        rep2 = exponential_envelope(rec2, sin_sched, problem.rho, problem.known_solution)
        result.record(
            rep2.holds, f"{name}: envelope violated under sinusoidal schedule"
        )
        zv = zdot_bound_monitor(rec2, sin_sched)
        result.record(
            zv.holds and zv.applicable,
            f"{name}: z-speed bound violated by {zv.worst_margin:.2e}",
        )

    ok = True
    for _ in range(10):
        rho = float(rng.uniform(0.2, 3.0))
        beta = float(rng.uniform(0.5, 2.0))
        gamma = float(rng.uniform(0.1, 0.9)) * beta
        direct = decay_integrand(gamma, rho, beta)
        uniform = constant_rate(rho, beta, delta=gamma, eps=beta - gamma)
        ok = ok and abs(direct - uniform) <= 1e-12 * max(1.0, abs(direct))
    result.record(ok, "constant-schedule rate disagrees with the decay integrand")

    rotation = problems.build("skew_rotation")
    schedule = schedule_catalog("constant", beta=1.0, value=0.5)
    rec = integrate(rotation, schedule, np.array([1.0, 0.0]), horizon=10.0, h=0.01, sample_every=1.0)
    measured = float(np.linalg.norm(rec.xs[-1]))
    exact = math.exp(-0.25 * 10.0)
    result.record(
        abs(measured - exact) <= 1e-3 * exact,
        f"rotation decay {measured:.6e} deviates from closed form {exact:.6e}",
    )
    return result


def check_ergodic(seed: int = 0) -> CheckResult:
    result = CheckResult("ergodic")
    rng = np.random.default_rng(seed)

    problem = problems.build("lasso")
    schedule = schedule_catalog("constant", beta=problem.beta, value=0.5 * problem.beta)
    x0 = np.zeros(problem.dim)
    probes = [problem.known_solution, x0] + [rng.uniform(-3, 3, problem.dim) for _ in range(3)]

    record = integrate(problem, schedule, x0, horizon=20.0, h=0.01, sample_every=0.1)
    verdict = ergodic_objective_monitor(record, problem.objective, probes)
    result.record(
        verdict.holds and verdict.applicable,
        f"lasso continuous: ergodic objective bound violated by {verdict.worst_margin:.2e}",
    )

    disc = run_tseng(problem, schedule, x0, max_iter=2000, tol=0.0)
    dv = ergodic_objective_monitor(disc, problem.objective, probes)
    result.record(
        dv.holds and dv.applicable,
        f"lasso discrete: ergodic objective bound violated by {dv.worst_margin:.2e}",
    )

    best = float(problem.objective(problem.known_solution))
    budget = 0.5 * float(np.linalg.norm(x0 - problem.known_solution)) ** 2
    gaps_ok = True
    for k in range(len(disc.ns)):
        zeta = disc.ergodic_nums[k] / disc.ergodic_dens[k]
        gap = float(problem.objective(zeta)) - best
        gaps_ok = gaps_ok and gap <= budget / disc.ergodic_dens[k] + 1e-9 * (1.0 + abs(best))
    result.record(gaps_ok, "lasso discrete: objective gap decays slower than budget/weight")

    fd = fejer_monitor(disc, problem.known_solution, slack=1e-10)
    result.record(fd.holds, f"lasso discrete: Fejer monotonicity violated by {fd.worst_margin:.2e}")

    ii = inclusion_identity_monitor(record, problem)
    result.record(ii.holds, f"lasso continuous: recorded z deviates by {ii.worst_margin:.2e}")

    const = run_tseng(problem, schedule, problem.known_solution, max_iter=5, tol=0.0)
    zeta = discrete_ergodic_point(const)
    result.record(
        float(np.linalg.norm(zeta - problem.known_solution)) <= 1e-12,
        "ergodic average of a constant iterate stream must equal that constant",
    )
    return result


SUITES = {
    "operators": check_operators,
    "dynamics": check_dynamics,
    "rates": check_rates,
    "ergodic": check_ergodic,
}


def run_suite(name: str, seed: int = 0) -> list:
    """Run one named suite, or all of them; returns a list of CheckResult."""
    if name == "all":
        return [fn(seed) for fn in SUITES.values()]
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return [SUITES[name](seed)]

"""Machine-checkable monitors for the convergence guarantees of the flow.

Each monitor is a pure, deterministic function of a record (trajectory or
iterate history) plus parameters, and returns a MonitorVerdict.  Margins are
signed so that holds == True corresponds to worst_margin <= tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .discrete import IterateRecord
from .dynamics import ProblemInstance, StepSchedule, TrajectoryRecord, fbf_vector_field
from .operators import Array, ParameterError, as_state

Record = Union[TrajectoryRecord, IterateRecord]


@dataclass
class MonitorVerdict:
    name: str
    holds: bool
    worst_margin: float
    location: Optional[float] = None
    applicable: bool = True
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": bool(self.holds),
            "worst_margin": float(self.worst_margin),
            "location": None if self.location is None else float(self.location),
            "applicable": bool(self.applicable),
            "info": {k: float(v) if isinstance(v, (int, float, np.floating)) else v
                     for k, v in self.info.items()},
        }


def _inapplicable(name: str, reason: str) -> MonitorVerdict:
    return MonitorVerdict(
        name=name, holds=True, worst_margin=0.0, applicable=False, info={"reason": reason}
    )


def _times(record: Record) -> np.ndarray:
    if hasattr(record, "ts"):
        return record.ts
    return record.ns.astype(float)


def _distances(record: Record, xbar: Optional[Array]) -> Optional[np.ndarray]:
    if record.xs is not None and xbar is not None:
        return np.linalg.norm(record.xs - xbar, axis=-1)
    return record.dists


def fejer_monitor(record: Record, xbar, slack: float = 1e-8) -> MonitorVerdict:
    """Distance to a certified zero must be nonincreasing along the record."""
    xbar = None if xbar is None else as_state(xbar)
    dists = _distances(record, xbar)
    if dists is None or len(dists) < 2:
        return _inapplicable("fejer", "record carries no states or distances")
    times = _times(record)
    increments = np.diff(dists)
    k = int(np.argmax(increments))
    worst = float(increments[k])
    return MonitorVerdict(
        name="fejer",
        holds=worst <= slack,
        worst_margin=worst,
        location=float(times[k + 1]),
        info={"slack": slack},
    )


def residual_integral_monitor(
    record: TrajectoryRecord,
    schedule: Optional[StepSchedule] = None,
    tol: float = 1e-6,
) -> MonitorVerdict:
    """Check integral of (1 - gamma/beta)*||x - z||^2 dt against its budget.

    With a known solution the integral over [0, T] may not exceed half the
    squared initial distance; otherwise the verdict reports whether the
    second-half increment has decayed relative to the first half.
    """
    beta = record.beta if record.beta is not None else (schedule.beta if schedule else None)
    if beta is None:
        raise ParameterError("residual integral needs beta (record or schedule)")
    times = _times(record)
    if len(times) < 2:
        return _inapplicable("residual_integral", "record too short")
    xz_sq = (record.residuals * record.gammas) ** 2
    integrand = (1.0 - record.gammas / beta) * xz_sq
    increments = 0.5 * np.diff(times) * (integrand[:-1] + integrand[1:])
    total = float(increments.sum())
    if record.dists is not None:
        bound = 0.5 * float(record.dists[0]) ** 2
        margin = total - bound
        return MonitorVerdict(
            name="residual_integral",
            holds=margin <= tol,
            worst_margin=margin,
            location=float(times[-1]),
            info={"integral": total, "bound": bound},
        )
    cum = np.concatenate([[0.0], np.cumsum(increments)])
    mid = times[0] + 0.5 * (times[-1] - times[0])
    first_half = float(np.interp(mid, times, cum))
    second_half = total - first_half
    margin = second_half - 0.5 * first_half
    return MonitorVerdict(
        name="residual_integral",
        holds=margin <= 1e-12,
        worst_margin=margin,
        location=float(times[-1]),
        info={"integral": total, "first_half": first_half, "second_half": second_half},
    )


@dataclass
class EnvelopeReport:
    """Measured squared distances versus the theoretical decay envelope."""

    times: np.ndarray
    measured: np.ndarray
    envelope: np.ndarray
    violations: list
    rel_tol: float = 1e-2
    abs_tol: float = 1e-12

    @property
    def holds(self) -> bool:
        return not self.violations


def decay_integrand(gamma: float, rho: float, beta: float) -> float:
    """Instantaneous decay rate 2*rho*gamma*(beta-gamma)/(beta*rho*gamma+beta-gamma)."""
    return 2.0 * rho * gamma * (beta - gamma) / (beta * rho * gamma + beta - gamma)


def constant_rate(rho: float, beta: float, delta: float, eps: float) -> float:
    """Uniform exponential rate 2*rho*delta*eps/(beta*rho*(beta-eps)+beta-delta)."""
    return 2.0 * rho * delta * eps / (beta * rho * (beta - eps) + beta - delta)


def exponential_envelope(
    record: TrajectoryRecord,
    schedule: StepSchedule,
    rho: float,
    xbar,
    rel_tol: float = 1e-2,
    abs_tol: float = 1e-12,
) -> EnvelopeReport:
    """Envelope ||x(0)-xbar||^2 * exp(-int_0^t decay_integrand) vs. measurements.

    The rate integral uses the trapezoidal rule at the record's integrator
    resolution.  A sample violates when measured exceeds
    envelope*(1+rel_tol)+abs_tol; rel_tol absorbs integrator error.
    """
    if rho <= 0:
        raise ParameterError("rho must be positive for the exponential envelope")
    xbar = as_state(xbar)
    dists = _distances(record, xbar)
    if dists is None:
        raise ParameterError("record carries neither states nor distances")
    times = record.ts
    measured = dists**2
    beta = schedule.beta
    step = record.h if record.h is not None else float(np.diff(times).min())
    span = float(times[-1] - times[0])
    n_fine = max(1, int(math.ceil(span / step)))
    grid = times[0] + np.linspace(0.0, span, n_fine + 1)
    rates = np.array([decay_integrand(schedule(t), rho, beta) for t in grid])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(grid) * (rates[:-1] + rates[1:]))])
    integral_at = np.interp(times, grid, cum)
    envelope = measured[0] * np.exp(-integral_at)
    threshold = envelope * (1.0 + rel_tol) + abs_tol
    violations = [
        (float(times[k]), float(measured[k] - threshold[k]))
        for k in np.flatnonzero(measured > threshold)
    ]
    return EnvelopeReport(
        times=times,
        measured=measured,
        envelope=envelope,
        violations=violations,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )


def envelope_verdict(report: EnvelopeReport) -> MonitorVerdict:
    margins = report.measured - (report.envelope * (1.0 + report.rel_tol) + report.abs_tol)
    k = int(np.argmax(margins))
    return MonitorVerdict(
        name="envelope",
        holds=report.holds,
        worst_margin=float(margins[k]),
        location=float(report.times[k]),
        info={"violations": len(report.violations)},
    )


def ergodic_objective_monitor(
    record: Record,
    objective: Callable[[Array], float],
    probe_points: Sequence,
    rel_tol: float = 1e-9,
) -> MonitorVerdict:
    """Objective at the weighted trajectory average versus each probe point.

    For every probe x and recorded index with positive accumulated weight:
    obj(average) <= obj(x) + ||x0 - x||^2 / (2*weight) + rel_tol*(1+|obj(x)|).
    Samples whose average falls outside dom(objective) are recorded and
    skipped; a record with no usable samples is inapplicable.
    """
    if record.xs is None or record.ergodic_nums is None:
        return _inapplicable("ergodic_objective", "record carries no states")
    x0 = record.xs[0]
    times = _times(record)
    dens = record.ergodic_dens
    usable = dens > 0.0
    if not np.any(usable):
        return _inapplicable("ergodic_objective", "no samples with positive weight")
    zetas = record.ergodic_nums[usable] / dens[usable, None]
    values = np.asarray(objective(zetas), dtype=float)
    in_dom = np.isfinite(values)
    if not np.any(in_dom):
        return _inapplicable("ergodic_objective", "average outside dom(objective)")
    t_usable = times[usable]
    worst = -np.inf
    location = None
    for probe in probe_points:
        p = as_state(probe, dim=x0.shape[0])
        p_val = float(objective(p))
        if not np.isfinite(p_val):
            raise ParameterError("probe point lies outside dom(objective)")
        slack = rel_tol * (1.0 + abs(p_val))
        rhs = p_val + np.linalg.norm(x0 - p) ** 2 / (2.0 * dens[usable]) + slack
        margins = np.where(in_dom, values - rhs, -np.inf)
        k = int(np.argmax(margins))
        if margins[k] > worst:
            worst = float(margins[k])
            location = float(t_usable[k])
    return MonitorVerdict(
        name="ergodic_objective",
        holds=worst <= 0.0,
        worst_margin=worst,
        location=location,
        info={"samples_outside_dom": int(np.sum(~in_dom)), "probes": len(list(probe_points))},
    )


@dataclass(frozen=True)
class LipschitzProbeReport:
    max_ratio: float
    gamma_at_max: float
    n_pairs: int
    rng_seed: int


def lipschitz_probe(
    problem: ProblemInstance,
    gammas: Sequence[float],
    n_pairs: int,
    radius: float = 10.0,
    rng_seed: int = 0,
) -> LipschitzProbeReport:
    """Empirical Lipschitz ratio of the flow field over random point pairs.

    Half the pairs are far apart, half are tight perturbations, probing both
    global and local ratios.  Deterministic for a given seed.
    """
    if n_pairs < 1:
        raise ParameterError("n_pairs must be at least 1")
    rng = np.random.default_rng(rng_seed)
    dim = problem.dim
    x = rng.uniform(-radius, radius, size=(n_pairs, dim))
    y = rng.uniform(-radius, radius, size=(n_pairs, dim))
    near = n_pairs // 2
    if near:
        y[-near:] = x[-near:] + 1e-3 * rng.standard_normal(size=(near, dim))
    sep = np.linalg.norm(x - y, axis=-1)
    keep = sep > 1e-12
    max_ratio, gamma_at_max = 0.0, float(gammas[0]) if len(gammas) else float("nan")
    for gamma in gammas:
        fx, _ = fbf_vector_field(problem, gamma, x)
        fy, _ = fbf_vector_field(problem, gamma, y)
        ratios = np.linalg.norm(fx - fy, axis=-1)[keep] / sep[keep]
        peak = float(ratios.max())
        if peak > max_ratio:
            max_ratio, gamma_at_max = peak, float(gamma)
    return LipschitzProbeReport(
        max_ratio=max_ratio, gamma_at_max=gamma_at_max, n_pairs=n_pairs, rng_seed=rng_seed
    )


def zdot_bound_monitor(
    record: TrajectoryRecord, schedule: StepSchedule, tol_factor: float = 5e-2
) -> MonitorVerdict:
    """Finite-difference speed of z against its analytic bound.

    ||dz/dt|| <= (sqrt((1+g'/g)^2 + g^2/b^2) + (g/b)*sqrt(1+g^2/b^2)) * ||x-z||
    checked with central differences at interior samples; endpoints skipped.
    """
    if schedule.deriv is None:
        return _inapplicable("zdot_bound", "schedule lacks an analytic derivative")
    if record.zs is None:
        return _inapplicable("zdot_bound", "record carries no z samples")
    times = record.ts
    if len(times) < 3:
        return _inapplicable("zdot_bound", "too few samples for central differences")
    if record.h is not None and float(np.diff(times).max()) > 10.0 * record.h * (1.0 + 1e-6):
        return _inapplicable("zdot_bound", "sample spacing exceeds 10 integrator steps")
    beta = schedule.beta
    dz = record.zs[2:] - record.zs[:-2]
    dt = (times[2:] - times[:-2])[:, None]
    speed = np.linalg.norm(dz / dt, axis=-1)
    g = record.gammas[1:-1]
    gdot = np.array([schedule.deriv(t) for t in times[1:-1]])
    coeff = np.sqrt((1.0 + gdot / g) ** 2 + g**2 / beta**2) + (g / beta) * np.sqrt(
        1.0 + g**2 / beta**2
    )
    bound = coeff * record.residuals[1:-1] * g
    margins = speed - bound * (1.0 + tol_factor)
    k = int(np.argmax(margins))
    return MonitorVerdict(
        name="zdot_bound",
        holds=float(margins[k]) <= 0.0,
        worst_margin=float(margins[k]),
        location=float(times[1:-1][k]),
        info={"tol_factor": tol_factor},
    )


def inclusion_identity_monitor(
    record: Record, problem: ProblemInstance, tol: float = 1e-12
) -> MonitorVerdict:
    """Recorded z must equal J_{gamma A}(x - gamma*Bx) recomputed from x.

    This is the resolvent restatement of the inclusion
    (x - z)/gamma - Bx in Az, so membership is verified without graph access.
    """
    if record.xs is None or record.zs is None:
        return _inapplicable("inclusion_identity", "record carries no states")
    times = _times(record)
    worst, location = -np.inf, None
    for k in range(len(times)):
        gamma = float(record.gammas[k])
        x = record.xs[k]
        z_new = problem.A.resolvent_oracle(gamma, x - gamma * problem.B(x))
        dev = float(np.linalg.norm(record.zs[k] - z_new))
        if dev > worst:
            worst, location = dev, float(times[k])
    return MonitorVerdict(
        name="inclusion_identity",
        holds=worst <= tol,
        worst_margin=worst,
        location=location,
        info={"tol": tol},
    )

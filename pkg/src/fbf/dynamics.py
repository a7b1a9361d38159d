"""Continuous-time forward-backward-forward dynamics.

The trajectory solves  x'(t) = f(gamma(t), x(t))  with

    z = J_{gamma A}(x - gamma*Bx)
    f(gamma, x) = z - x + gamma*(Bx - Bz)

for a maximally monotone A, a monotone 1/beta-Lipschitz B and a step-size
schedule gamma: [0, inf) -> (0, beta).  Zeros of A + B are exactly the
equilibria of the flow, and ||x - z||/gamma serves as the residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .operators import (
    Array,
    ConstructionError,
    LipschitzOperator,
    MaximalOperator,
    ParameterError,
    as_state,
)

DIVERGENCE_NORM = 1e12


class DivergenceError(RuntimeError):
    """The trajectory left the trust region or became non-finite."""

    def __init__(self, message: str, last_good_t: float):
        super().__init__(message)
        self.last_good_t = last_good_t


@dataclass(frozen=True)
class StepSchedule:
    """Step-size function t -> gamma(t) with certified bounds.

    delta <= gamma(t) <= beta - eps must hold for all t; deriv_bound is an
    L-infinity bound on the derivative and deriv an analytic derivative,
    both optional (monitors that need them report inapplicable otherwise).
    """

    fn: Callable[[float], float]
    delta: float
    eps: float
    beta: float
    deriv_bound: Optional[float] = None
    deriv: Optional[Callable[[float], float]] = None
    name: str = "schedule"

    def __post_init__(self):
        if self.delta <= 0 or self.eps <= 0:
            raise ConstructionError("schedule needs delta > 0 and eps > 0")
        if self.delta > self.beta - self.eps + 1e-15:
            raise ConstructionError(
                f"schedule bounds empty: delta={self.delta} > beta-eps={self.beta - self.eps}"
            )

    def __call__(self, t: float) -> float:
        return self.fn(t)


SCHEDULE_NAMES = ("constant", "sinusoidal", "ramp")


def schedule_catalog(name: str, beta: float, **params) -> StepSchedule:
    """Build a catalog schedule whose range stays inside (0, beta).

    constant(value); sinusoidal(lo, hi, period); ramp(start, end, ramp_time).
    All are absolutely continuous with a known derivative bound.
    """
    if beta <= 0:
        raise ConstructionError("beta must be positive")

    if name == "constant":
        value = float(params.pop("value"))
        _reject_extra(name, params)
        if not 0.0 < value < beta:
            raise ConstructionError(f"constant value {value} outside (0, beta={beta})")
        return StepSchedule(
            fn=lambda t: value,
            delta=value,
            eps=beta - value,
            beta=beta,
            deriv_bound=0.0,
            deriv=lambda t: 0.0,
            name=f"constant({value})",
        )

    if name == "sinusoidal":
        lo = float(params.pop("lo"))
        hi = float(params.pop("hi"))
        period = float(params.pop("period", 2.0 * math.pi))
        _reject_extra(name, params)
        if not 0.0 < lo < hi < beta:
            raise ConstructionError(
                f"sinusoidal range [{lo}, {hi}] must satisfy 0 < lo < hi < beta={beta}"
            )
        if period <= 0:
            raise ConstructionError("sinusoidal period must be positive")
        mid = 0.5 * (lo + hi)
        amp = 0.5 * (hi - lo)
        omega = 2.0 * math.pi / period
        return StepSchedule(
            fn=lambda t: mid + amp * math.sin(omega * t),
            delta=lo,
            eps=beta - hi,
            beta=beta,
            deriv_bound=amp * omega,
            deriv=lambda t: amp * omega * math.cos(omega * t),
            name=f"sinusoidal({lo},{hi})",
        )

    if name == "ramp":
        start = float(params.pop("start"))
        end = float(params.pop("end"))
        ramp_time = float(params.pop("ramp_time"))
        _reject_extra(name, params)
        if not (0.0 < start < beta and 0.0 < end < beta):
            raise ConstructionError(
                f"ramp endpoints ({start}, {end}) must lie in (0, beta={beta})"
            )
        if ramp_time <= 0:
            raise ConstructionError("ramp_time must be positive")
        slope = (end - start) / ramp_time
        return StepSchedule(
            fn=lambda t: start + slope * min(t, ramp_time),
            delta=min(start, end),
            eps=beta - max(start, end),
            beta=beta,
            deriv_bound=abs(slope),
            deriv=lambda t: slope if t < ramp_time else 0.0,
            name=f"ramp({start}->{end})",
        )

    raise ConstructionError(f"unknown schedule {name!r}")


def _reject_extra(name: str, params: dict) -> None:
    if params:
        raise ConstructionError(f"{name}: unexpected parameters {sorted(params)}")


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A monotone inclusion 0 in Ax + Bx together with certified metadata.

    rho is a strong-monotonicity modulus of A + B when known; objective is
    the convex objective f + h for minimization instances; domain_project
    maps an arbitrary point into cl(Dom A).
    """

    A: MaximalOperator
    B: LipschitzOperator
    beta: float
    dim: int
    rho: Optional[float] = None
    known_solution: Optional[Array] = None
    objective: Optional[Callable[[Array], float]] = None
    domain_project: Optional[Callable[[Array], Array]] = None
    name: str = "problem"

    def __post_init__(self):
        if self.beta <= 0:
            raise ConstructionError("beta must be positive")
        if not self.B.monotone:
            raise ConstructionError("B must be monotone for the splitting to apply")
        if self.rho is not None:
            declared = self.A.strong_modulus + self.B.strong_modulus
            if self.rho > declared + 1e-12:
                raise ConstructionError(
                    f"rho={self.rho} exceeds the declared moduli of A and B ({declared})"
                )


def fbf_vector_field(problem: ProblemInstance, gamma: float, x: Array):
    """Evaluate the flow field; returns (dx, z) for a point or a batch.

    dx = z - x + gamma*(Bx - Bz) with z = J_{gamma A}(x - gamma*Bx).
    """
    if not 0.0 < gamma < problem.beta:
        raise ParameterError(f"gamma={gamma} outside (0, beta={problem.beta})")
    x = np.asarray(x, dtype=float)
    bx = problem.B(x)
    z = problem.A.resolvent_oracle(gamma, x - gamma * bx)
    dx = z - x + gamma * (bx - problem.B(z))
    return dx, z


@dataclass(eq=False)
class TrajectoryRecord:
    """Sampled trajectory plus running ergodic accumulators.

    ergodic_nums[k] and ergodic_dens[k] hold the trapezoidal integrals of
    gamma(s)*z(s) and gamma(s) over [0, ts[k]], taken at integrator
    resolution; dists/objectives are present only when the problem carries
    a known solution / an objective.
    """

    ts: np.ndarray
    xs: Optional[np.ndarray]
    zs: Optional[np.ndarray]
    residuals: np.ndarray
    gammas: np.ndarray
    ergodic_nums: Optional[np.ndarray]
    ergodic_dens: np.ndarray
    dists: Optional[np.ndarray] = None
    objectives: Optional[np.ndarray] = None
    beta: Optional[float] = None
    h: Optional[float] = None
    method: str = "rk4"

    def __post_init__(self):
        self.ts = np.asarray(self.ts, dtype=float)
        if np.any(np.diff(self.ts) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def ergodic_num(self) -> Array:
        return self.ergodic_nums[-1]

    @property
    def ergodic_den(self) -> float:
        return float(self.ergodic_dens[-1])

    @classmethod
    def from_samples(
        cls,
        ts,
        xs,
        zs,
        gammas,
        dists=None,
        objectives=None,
        beta=None,
        h=None,
        method="synthetic",
    ) -> "TrajectoryRecord":
        """Build a record from raw samples, accumulating ergodic integrals
        by the trapezoidal rule over the given sample grid."""
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(xs, dtype=float)
        zs = np.asarray(zs, dtype=float)
        gammas = np.asarray(gammas, dtype=float)
        residuals = np.linalg.norm(xs - zs, axis=-1) / gammas
        weighted = gammas[:, None] * zs
        nums = np.zeros_like(zs)
        dens = np.zeros(len(ts))
        if len(ts) > 1:
            dt = np.diff(ts)
            nums[1:] = np.cumsum(0.5 * dt[:, None] * (weighted[:-1] + weighted[1:]), axis=0)
            dens[1:] = np.cumsum(0.5 * dt * (gammas[:-1] + gammas[1:]))
        return cls(
            ts=ts,
            xs=xs,
            zs=zs,
            residuals=residuals,
            gammas=gammas,
            ergodic_nums=nums,
            ergodic_dens=dens,
            dists=None if dists is None else np.asarray(dists, dtype=float),
            objectives=None if objectives is None else np.asarray(objectives, dtype=float),
            beta=beta,
            h=h,
            method=method,
        )


def _rk4_step(problem, schedule, t, x, h):
    k1, z = fbf_vector_field(problem, schedule(t), x)
    k2, _ = fbf_vector_field(problem, schedule(t + 0.5 * h), x + 0.5 * h * k1)
    k3, _ = fbf_vector_field(problem, schedule(t + 0.5 * h), x + 0.5 * h * k2)
    k4, _ = fbf_vector_field(problem, schedule(t + h), x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), k1, z


def _euler_step(problem, schedule, t, x, h):
    k1, z = fbf_vector_field(problem, schedule(t), x)
    return x + h * k1, k1, z


_STEPPERS = {"rk4": _rk4_step, "euler": _euler_step}


def integrate(
    problem: ProblemInstance,
    schedule: StepSchedule,
    x0,
    horizon: float,
    method: str = "rk4",
    h: float = 0.01,
    sample_every: Optional[float] = None,
) -> TrajectoryRecord:
    """Advance x' = f(gamma(t), x) from x(0) = x0 up to t = horizon.

    Fixed-step explicit integration (the field is globally sqrt(6)-Lipschitz,
    so rk4/euler at moderate h are stable).  Samples are recorded every
    sample_every time units (snapped to whole steps; default: every step);
    ergodic integrals of gamma*z and gamma accumulate by the trapezoidal
    rule at every internal step.  Raises DivergenceError, reporting the last
    good time, if the state blows past 1e12 or turns non-finite.
    """
    if method not in _STEPPERS:
        raise ParameterError(f"method must be one of {sorted(_STEPPERS)}, got {method!r}")
    if h <= 0:
        raise ParameterError("h must be positive")
    if horizon < h:
        raise ParameterError("horizon must be at least one step h")
    if abs(schedule.beta - problem.beta) > 1e-12:
        raise ParameterError(
            f"schedule.beta={schedule.beta} does not match problem.beta={problem.beta}"
        )
    stepper = _STEPPERS[method]
    x = as_state(x0, dim=problem.dim)

    n_steps = int(math.floor(horizon / h + 1e-9))
    remainder = horizon - n_steps * h
    if remainder < 1e-9 * h:
        remainder = 0.0
    stride = 1 if sample_every is None else max(1, int(round(sample_every / h)))

    xbar = problem.known_solution
    track_obj = problem.objective is not None

    ts, xs, zs, residuals, gammas = [], [], [], [], []
    dists = [] if xbar is not None else None
    objectives = [] if track_obj else None
    erg_nums, erg_dens = [], []

    num = np.zeros(problem.dim)
    den = 0.0
    prev_weight = None  # (gamma_k * z_k, gamma_k) at previous node
    last_good_t = 0.0

    total_nodes = n_steps + (1 if remainder > 0 else 0)

    for k in range(total_nodes + 1):
        t = k * h if k <= n_steps else horizon
        norm_x = float(np.linalg.norm(x))
        if not np.all(np.isfinite(x)) or norm_x > DIVERGENCE_NORM:
            raise DivergenceError(
                f"trajectory diverged near t={t:.6g} (|x|={norm_x:.3e}); "
                f"last good t={last_good_t:.6g}",
                last_good_t=last_good_t,
            )
        gamma = schedule(t)
        dx, z = fbf_vector_field(problem, gamma, x)
        last_good_t = t

        if prev_weight is not None:
            prev_gz, prev_g, prev_t = prev_weight
            dt = t - prev_t
            num = num + 0.5 * dt * (prev_gz + gamma * z)
            den = den + 0.5 * dt * (prev_g + gamma)
        prev_weight = (gamma * z, gamma, t)

        if k % stride == 0 or k == total_nodes:
            ts.append(t)
            xs.append(x.copy())
            zs.append(z)
            residuals.append(float(np.linalg.norm(x - z)) / gamma)
            gammas.append(gamma)
            erg_nums.append(num.copy())
            erg_dens.append(den)
            if dists is not None:
                dists.append(float(np.linalg.norm(x - xbar)))
            if track_obj:
                objectives.append(float(problem.objective(z)))

        if k == total_nodes:
            break
        step_h = h if k < n_steps else remainder
        x, _, _ = stepper(problem, schedule, t, x, step_h)

    return TrajectoryRecord(
        ts=np.asarray(ts),
        xs=np.asarray(xs),
        zs=np.asarray(zs),
        residuals=np.asarray(residuals),
        gammas=np.asarray(gammas),
        ergodic_nums=np.asarray(erg_nums),
        ergodic_dens=np.asarray(erg_dens),
        dists=None if dists is None else np.asarray(dists),
        objectives=None if objectives is None else np.asarray(objectives),
        beta=problem.beta,
        h=h,
        method=method,
    )


def ergodic_point(record: TrajectoryRecord) -> Array:
    """Weighted trajectory average: integral of gamma*z over integral of gamma."""
    if record.ergodic_nums is None or len(record.ts) < 2:
        raise ValueError("ergodic point needs a record spanning t > 0")
    if record.ergodic_den <= 0.0:
        raise ValueError("ergodic point undefined: zero accumulated weight")
    return record.ergodic_num / record.ergodic_den

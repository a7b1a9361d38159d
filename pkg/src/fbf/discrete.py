"""Discrete forward-backward-forward (Tseng) iteration.

    z_n     = J_{gamma_n A}(x_n - gamma_n * B x_n)
    x_{n+1} = z_n + gamma_n * (B x_n - B z_n)

One iteration with gamma_n = gamma(t_n) coincides with one explicit Euler
step of the continuous dynamics at h = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import DIVERGENCE_NORM, DivergenceError, ProblemInstance, StepSchedule
from .operators import Array, ParameterError, as_state


@dataclass(eq=False)
class IterateRecord:
    """Iterate history with running ergodic sums.

    ergodic_nums[k] = sum_{j<=k} gamma_j * z_j and ergodic_dens[k] is the
    matching sum of gamma_j, so the weighted average is available at every
    recorded index.
    """

    ns: np.ndarray
    xs: Optional[np.ndarray]
    zs: Optional[np.ndarray]
    residuals: np.ndarray
    gammas: np.ndarray
    ergodic_nums: Optional[np.ndarray]
    ergodic_dens: np.ndarray
    dists: Optional[np.ndarray] = None
    objectives: Optional[np.ndarray] = None
    beta: Optional[float] = None
    converged: bool = False

    @property
    def ergodic_num(self) -> Array:
        return self.ergodic_nums[-1]

    @property
    def ergodic_den(self) -> float:
        return float(self.ergodic_dens[-1])

    @classmethod
    def from_iterates(cls, xs, zs, gammas, beta=None, dists=None, objectives=None) -> "IterateRecord":
        xs = np.asarray(xs, dtype=float)
        zs = np.asarray(zs, dtype=float)
        gammas = np.asarray(gammas, dtype=float)
        residuals = np.linalg.norm(xs - zs, axis=-1) / gammas
        weighted = gammas[:, None] * zs
        return cls(
            ns=np.arange(len(xs)),
            xs=xs,
            zs=zs,
            residuals=residuals,
            gammas=gammas,
            ergodic_nums=np.cumsum(weighted, axis=0),
            ergodic_dens=np.cumsum(gammas),
            dists=None if dists is None else np.asarray(dists, dtype=float),
            objectives=None if objectives is None else np.asarray(objectives, dtype=float),
            beta=beta,
        )


def tseng_step(problem: ProblemInstance, gamma_n: float, x_n: Array):
    """One forward-backward-forward step; returns (x_next, z_n)."""
    if not 0.0 < gamma_n < problem.beta:
        raise ParameterError(f"gamma={gamma_n} outside (0, beta={problem.beta})")
    x_n = np.asarray(x_n, dtype=float)
    bx = problem.B(x_n)
    z_n = problem.A.resolvent_oracle(gamma_n, x_n - gamma_n * bx)
    x_next = z_n + gamma_n * (bx - problem.B(z_n))
    return x_next, z_n


GammaSpec = Union[StepSchedule, Sequence[float], float]


def _gamma_at(gamma_seq: GammaSpec, n: int, beta: float) -> float:
    if isinstance(gamma_seq, StepSchedule):
        return float(gamma_seq(float(n)))
    if isinstance(gamma_seq, (int, float)):
        return float(gamma_seq)
    if n >= len(gamma_seq):
        raise ParameterError(f"gamma sequence exhausted at iteration {n}")
    return float(gamma_seq[n])


def run_tseng(
    problem: ProblemInstance,
    gamma_seq: GammaSpec,
    x0,
    max_iter: int,
    tol: float = 0.0,
) -> IterateRecord:
    """Iterate until the residual ||x_n - z_n||/gamma_n drops to tol.

    gamma_seq may be a StepSchedule (sampled at t = n), an explicit sequence,
    or a constant.  Every iterate is recorded and feeds the ergodic sums.
    tol = 0 disables the residual test and runs max_iter iterations.
    """
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")
    x = as_state(x0, dim=problem.dim)
    xbar = problem.known_solution
    track_obj = problem.objective is not None

    xs, zs, residuals, gammas = [], [], [], []
    dists = [] if xbar is not None else None
    objectives = [] if track_obj else None
    erg_nums, erg_dens = [], []
    num = np.zeros(problem.dim)
    den = 0.0
    converged = False

    for n in range(max_iter):
        norm_x = float(np.linalg.norm(x))
        if not np.all(np.isfinite(x)) or norm_x > DIVERGENCE_NORM:
            raise DivergenceError(
                f"iterates diverged at n={n} (|x|={norm_x:.3e})", last_good_t=float(n - 1)
            )
        gamma = _gamma_at(gamma_seq, n, problem.beta)
        x_next, z = tseng_step(problem, gamma, x)
        residual = float(np.linalg.norm(x - z)) / gamma

        num = num + gamma * z
        den = den + gamma
        xs.append(x.copy())
        zs.append(z)
        residuals.append(residual)
        gammas.append(gamma)
        erg_nums.append(num.copy())
        erg_dens.append(den)
        if dists is not None:
            dists.append(float(np.linalg.norm(x - xbar)))
        if track_obj:
            objectives.append(float(problem.objective(z)))

        if tol > 0.0 and residual <= tol:
            converged = True
            break
        x = x_next

    return IterateRecord(
        ns=np.arange(len(xs)),
        xs=np.asarray(xs),
        zs=np.asarray(zs),
        residuals=np.asarray(residuals),
        gammas=np.asarray(gammas),
        ergodic_nums=np.asarray(erg_nums),
        ergodic_dens=np.asarray(erg_dens),
        dists=None if dists is None else np.asarray(dists),
        objectives=None if objectives is None else np.asarray(objectives),
        beta=problem.beta,
        converged=converged,
    )


def discrete_ergodic_point(record: IterateRecord) -> Array:
    """Gamma-weighted average of the z iterates."""
    if record.ergodic_nums is None or len(record.ns) == 0:
        raise ValueError("ergodic point needs at least one iterate")
    return record.ergodic_num / record.ergodic_den

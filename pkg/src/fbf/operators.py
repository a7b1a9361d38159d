"""Monotone operators on R^n through their resolvent oracles.

A maximally monotone operator A is represented only by its resolvent
J_{gamma A} = (I + gamma*A)^(-1); a single-valued Lipschitz operator B by a
plain callable plus its constant 1/beta.  All oracles act on the last axis,
so arrays of shape (..., n) evaluate a whole batch of points at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


class InvalidStateError(ValueError):
    """A state vector contains NaN/Inf or has the wrong shape."""


class ParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class ConstructionError(ValueError):
    """An operator or schedule cannot be built from the given parameters."""


def check_finite(x: Array) -> Array:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidStateError("state has non-finite coordinates")
    return x


def as_state(x, dim: Optional[int] = None) -> Array:
    """Coerce to a finite 1-D float vector, optionally of fixed dimension."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InvalidStateError(f"state must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidStateError("state has non-finite coordinates")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidStateError(f"state has dimension {arr.shape[0]}, expected {dim}")
    return arr


@dataclass(frozen=True)
class MaximalOperator:
    """Maximally monotone operator, exposed through its resolvent oracle.

    resolvent_oracle(gamma, x) must return J_{gamma A} x for any gamma > 0 and
    any array x of shape (..., n).  domain_test answers "x in cl(Dom A)";
    strong_modulus is the strong-monotonicity modulus (0 if merely monotone).
    """

    resolvent_oracle: Callable[[float, Array], Array]
    domain_test: Optional[Callable[[Array], bool]] = None
    strong_modulus: float = 0.0
    name: str = "operator"


@dataclass(frozen=True)
class LipschitzOperator:
    """Single-valued operator with Lipschitz constant 1/beta.

    monotone must be True for use inside the splitting; strong_modulus is a
    known strong-monotonicity modulus (0 allowed).
    """

    apply: Callable[[Array], Array]
    beta: float
    monotone: bool = True
    strong_modulus: float = 0.0
    name: str = "operator"

    def __call__(self, x: Array) -> Array:
        return self.apply(x)


def resolvent(op: MaximalOperator, gamma: float, x: Array) -> Array:
    """J_{gamma A} x = (I + gamma*A)^(-1) x."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    x = check_finite(x)
    return op.resolvent_oracle(float(gamma), x)


def yosida(op: MaximalOperator, gamma: float, x: Array) -> Array:
    """Yosida approximation (x - J_{gamma A} x) / gamma."""
    x = np.asarray(x, dtype=float)
    return (x - resolvent(op, gamma, x)) / gamma


@dataclass(frozen=True)
class ParameterInequalityReport:
    lhs: float
    rhs: float
    holds: bool


def check_resolvent_parameter_inequality(
    op: MaximalOperator, lam: float, mu: float, x: Array, tol: float = 1e-10
) -> ParameterInequalityReport:
    """Check ||J_{lam A}x - J_{mu A}x|| <= |lam - mu| * ||Yosida_lam x||."""
    if lam <= 0 or mu <= 0:
        raise ParameterError("resolvent parameters must be positive")
    x = as_state(x)
    lhs = float(np.linalg.norm(resolvent(op, lam, x) - resolvent(op, mu, x)))
    rhs = abs(lam - mu) * float(np.linalg.norm(yosida(op, lam, x)))
    return ParameterInequalityReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + tol)


# --- closed-form resolvent building blocks -------------------------------

def soft_threshold(x: Array, thresh) -> Array:
    """Shrink each coordinate toward zero by thresh; exact zero at the kink."""
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


def project_box(x: Array, lo, hi) -> Array:
    return np.clip(x, lo, hi)


def project_ball(x: Array, radius: float) -> Array:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
    return x * scale


def solve_stacked(mat: Array, x: Array) -> Array:
    """Solve mat @ z_i = x_i for every vector stacked along the last axis."""
    flat = x.reshape(-1, x.shape[-1])
    out = np.linalg.solve(mat, flat.T).T
    return out.reshape(x.shape)


def _symmetric_part_eigs(mat: Array) -> Array:
    sym = 0.5 * (mat + mat.T)
    return np.linalg.eigvalsh(sym)


PSD_TOL = 1e-10

CATALOG_NAMES = (
    "zero",
    "l1_norm",
    "box_indicator",
    "ball_indicator",
    "quadratic",
    "linear_monotone",
)


def prox_catalog(name: str, **params) -> MaximalOperator:
    """Build a catalog operator with a closed-form resolvent.

    Supported: zero, l1_norm(weight), box_indicator(lo, hi),
    ball_indicator(radius), quadratic(q, b), linear_monotone(m).
    """
    if name == "zero":
        return MaximalOperator(
            resolvent_oracle=lambda gamma, x: np.asarray(x, dtype=float),
            name="zero",
        )

    if name == "l1_norm":
        weight = float(params.pop("weight", 1.0))
        _reject_extra(name, params)
        if weight < 0:
            raise ConstructionError("l1_norm weight must be nonnegative")
        return MaximalOperator(
            resolvent_oracle=lambda gamma, x: soft_threshold(x, gamma * weight),
            name=f"l1_norm(w={weight})",
        )

    if name == "box_indicator":
        lo = np.asarray(params.pop("lo", -1.0), dtype=float)
        hi = np.asarray(params.pop("hi", 1.0), dtype=float)
        _reject_extra(name, params)
        if np.any(lo >= hi):
            raise ConstructionError("box_indicator needs lo < hi componentwise")
        return MaximalOperator(
            resolvent_oracle=lambda gamma, x: project_box(x, lo, hi),
            domain_test=lambda x: bool(np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)),
            name="box_indicator",
        )

    if name == "ball_indicator":
        radius = float(params.pop("radius", 1.0))
        _reject_extra(name, params)
        if radius <= 0:
            raise ConstructionError("ball_indicator radius must be positive")
        return MaximalOperator(
            resolvent_oracle=lambda gamma, x: project_ball(x, radius),
            domain_test=lambda x: bool(np.linalg.norm(x) <= radius + 1e-12),
            name=f"ball_indicator(r={radius})",
        )

    if name == "quadratic":
        q = np.asarray(params.pop("q"), dtype=float)
        b = params.pop("b", None)
        _reject_extra(name, params)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ConstructionError("quadratic needs a square matrix")
        if not np.allclose(q, q.T, atol=PSD_TOL):
            raise ConstructionError("quadratic matrix must be symmetric")
        eigs = np.linalg.eigvalsh(q)
        if eigs.min() < -PSD_TOL:
            raise ConstructionError(
                f"quadratic matrix must be PSD (min eigenvalue {eigs.min():.3e})"
            )
        n = q.shape[0]
        shift = np.zeros(n) if b is None else as_state(b, dim=n)
        eye = np.eye(n)

        def _resolve_quadratic(gamma, x):
            return solve_stacked(eye + gamma * q, x - gamma * shift)

        return MaximalOperator(
            resolvent_oracle=_resolve_quadratic,
            strong_modulus=float(max(eigs.min(), 0.0)),
            name="quadratic",
        )

    if name == "linear_monotone":
        m = np.asarray(params.pop("m"), dtype=float)
        _reject_extra(name, params)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConstructionError("linear_monotone needs a square matrix")
        eigs = _symmetric_part_eigs(m)
        if eigs.min() < -PSD_TOL:
            raise ConstructionError(
                f"linear_monotone needs M + M^T PSD (min eigenvalue {eigs.min():.3e})"
            )
        n = m.shape[0]
        eye = np.eye(n)

        def _resolve_linear(gamma, x):
            return solve_stacked(eye + gamma * m, x)

        return MaximalOperator(
            resolvent_oracle=_resolve_linear,
            strong_modulus=float(max(eigs.min(), 0.0)),
            name="linear_monotone",
        )

    raise ConstructionError(f"unknown catalog operator {name!r}")


def _reject_extra(name: str, params: dict) -> None:
    if params:
        raise ConstructionError(f"{name}: unexpected parameters {sorted(params)}")


def linear_lipschitz(m: Array, shift=None, name: str = "linear") -> LipschitzOperator:
    """Affine operator x -> Mx + c with beta = 1/||M||_2; M + M^T must be PSD."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConstructionError("linear operator needs a square matrix")
    eigs = _symmetric_part_eigs(m)
    if eigs.min() < -PSD_TOL:
        raise ConstructionError(
            f"operator is not monotone (min symmetric eigenvalue {eigs.min():.3e})"
        )
    lip = float(np.linalg.norm(m, 2))
    if lip <= 0:
        raise ConstructionError("operator must be nonconstant to carry a Lipschitz constant")
    c = np.zeros(m.shape[0]) if shift is None else as_state(shift, dim=m.shape[0])

    def _apply(x):
        return x @ m.T + c

    return LipschitzOperator(
        apply=_apply,
        beta=1.0 / lip,
        monotone=True,
        strong_modulus=float(max(eigs.min(), 0.0)),
        name=name,
    )

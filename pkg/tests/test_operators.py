import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbf.operators import (
    ConstructionError,
    InvalidStateError,
    ParameterError,
    check_resolvent_parameter_inequality,
    linear_lipschitz,
    prox_catalog,
    resolvent,
    soft_threshold,
    yosida,
)
from fbf.suites import prox_reference

ABS = prox_catalog("l1_norm", weight=1.0)
ZERO = prox_catalog("zero")


def abs_fun(y):
    return np.abs(y).sum(axis=-1)


# --- resolvent -------------------------------------------------------------

def test_resolvent_of_zero_operator_is_identity():
    x = np.array([3.0, -1.0])
    assert np.array_equal(resolvent(ZERO, 0.7, x), x)


def test_resolvent_of_abs_matches_grid_oracle():
    # grid minimization of |y| + (y-3)^2/2 is the independent reference
    brute = prox_reference(abs_fun, 1.0, np.array([3.0]))
    assert abs(brute[0] - 2.0) <= 1e-4
    closed = resolvent(ABS, 1.0, np.array([3.0]))
    assert abs(closed[0] - 2.0) <= 1e-12
    assert abs(closed[0] - brute[0]) <= 1e-4


def test_resolvent_of_linear_operator_solves_shifted_system():
    # A: y -> 2y, gamma=0.5: (1 + 1) z = 4
    lin = prox_catalog("linear_monotone", m=[[2.0]])
    assert np.allclose(resolvent(lin, 0.5, np.array([4.0])), [2.0], atol=1e-12)


def test_resolvent_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        resolvent(ABS, 0.0, np.array([1.0]))
    with pytest.raises(InvalidStateError):
        resolvent(ABS, 1.0, np.array([np.nan]))
    with pytest.raises(InvalidStateError):
        resolvent(ABS, 1.0, np.array([np.inf, 0.0]))


# --- yosida ------------------------------------------------------------------

def test_yosida_of_zero_operator_vanishes():
    assert np.array_equal(yosida(ZERO, 2.3, np.array([1.0, -4.0])), np.zeros(2))


def test_yosida_of_abs():
    assert np.allclose(yosida(ABS, 1.0, np.array([3.0])), [1.0], atol=1e-12)
    assert np.allclose(yosida(ABS, 1.0, np.array([0.0])), [0.0])


# --- parameter inequality ----------------------------------------------------

def test_parameter_inequality_equal_parameters():
    rep = check_resolvent_parameter_inequality(ABS, 1.3, 1.3, np.array([2.0]))
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.holds


def test_parameter_inequality_abs_at_three():
    # soft thresholds: J_1(3) = 2, J_2(3) = 1, Yosida_1(3) = 1
    rep = check_resolvent_parameter_inequality(ABS, 1.0, 2.0, np.array([3.0]))
    assert rep.lhs == pytest.approx(1.0, abs=1e-12)
    assert rep.rhs == pytest.approx(1.0, abs=1e-12)
    assert rep.holds


def test_parameter_inequality_zero_operator():
    rep = check_resolvent_parameter_inequality(ZERO, 0.2, 5.0, np.array([1.0, 2.0]))
    assert rep.lhs == 0.0 and rep.holds


# --- prox catalog -------------------------------------------------------------

def test_box_projection_clamps():
    box = prox_catalog("box_indicator", lo=np.zeros(2), hi=np.ones(2))
    out = resolvent(box, 1.7, np.array([2.0, -0.5]))
    assert np.array_equal(out, [1.0, 0.0])


def test_l1_prox_kills_small_coordinates():
    half = prox_catalog("l1_norm", weight=1.0)
    assert resolvent(half, 0.5, np.array([0.3]))[0] == 0.0
    brute = prox_reference(abs_fun, 0.5, np.array([0.3]))
    assert abs(brute[0]) <= 1e-4


def test_quadratic_prox_is_linear_solve():
    quad = prox_catalog("quadratic", q=[[2.0]], b=[0.0])
    assert np.allclose(resolvent(quad, 0.5, np.array([4.0])), [2.0], atol=1e-12)

    def f(y):
        return (y[:, 0] ** 2).astype(float)

    brute = prox_reference(f, 0.5, np.array([4.0]))
    assert abs(brute[0] - 2.0) <= 1e-4


def test_ball_projection_scales_to_radius():
    ball = prox_catalog("ball_indicator", radius=1.0)
    out = resolvent(ball, 1.0, np.array([3.0, 4.0]))
    assert np.allclose(out, [0.6, 0.8], atol=1e-14)
    assert np.allclose(resolvent(ball, 1.0, np.array([0.1, 0.2])), [0.1, 0.2])


def test_catalog_rejects_bad_construction():
    with pytest.raises(ConstructionError):
        prox_catalog("nonsense")
    with pytest.raises(ConstructionError):
        prox_catalog("quadratic", q=[[-1.0]])
    with pytest.raises(ConstructionError):
        prox_catalog("quadratic", q=[[0.0, 1.0], [0.0, 0.0]])  # not symmetric
    with pytest.raises(ConstructionError):
        prox_catalog("linear_monotone", m=[[-2.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ConstructionError):
        prox_catalog("box_indicator", lo=1.0, hi=0.0)
    with pytest.raises(ConstructionError):
        prox_catalog("ball_indicator", radius=-1.0)


def test_linear_lipschitz_constant_and_monotonicity():
    with pytest.raises(ConstructionError):
        linear_lipschitz(np.array([[-1.0]]))
    op = linear_lipschitz(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert op.beta == pytest.approx(1.0)
    assert op.strong_modulus == 0.0


# --- property tests ----------------------------------------------------------

GAMMAS = (0.01, 0.1, 1.0, 10.0)


def _catalog_for_properties():
    return [
        (ZERO, 2),
        (ABS, 2),
        (prox_catalog("l1_norm", weight=0.3), 3),
        (prox_catalog("box_indicator", lo=-np.ones(2), hi=np.ones(2)), 2),
        (prox_catalog("ball_indicator", radius=2.0), 2),
        (prox_catalog("quadratic", q=[[2.0, 0.5], [0.5, 1.0]], b=[0.4, -0.3]), 2),
        (prox_catalog("linear_monotone", m=[[1.0, 2.0], [-2.0, 1.0]]), 2),
    ]


@pytest.mark.parametrize("gamma", GAMMAS)
def test_firm_nonexpansiveness_on_random_pairs(gamma, rng):
    for op, dim in _catalog_for_properties():
        x = rng.uniform(-10, 10, size=(1000, dim))
        y = rng.uniform(-10, 10, size=(1000, dim))
        jx = op.resolvent_oracle(gamma, x)
        jy = op.resolvent_oracle(gamma, y)
        diff = jx - jy
        lhs = np.sum(diff * diff, axis=-1)
        rhs = np.sum(diff * (x - y), axis=-1)
        assert np.all(lhs <= rhs + 1e-10), op.name


@pytest.mark.parametrize("gamma", GAMMAS)
def test_yosida_is_one_over_gamma_lipschitz(gamma, rng):
    for op, dim in _catalog_for_properties():
        x = rng.uniform(-10, 10, size=(500, dim))
        y = rng.uniform(-10, 10, size=(500, dim))
        mx = (x - op.resolvent_oracle(gamma, x)) / gamma
        my = (y - op.resolvent_oracle(gamma, y)) / gamma
        lhs = np.linalg.norm(mx - my, axis=-1)
        rhs = np.linalg.norm(x - y, axis=-1) / gamma
        assert np.all(lhs <= rhs + 1e-10), op.name


def test_resolvent_fixes_known_zeros():
    cases = [
        (ZERO, [np.array([1.5, -2.0])]),
        (ABS, [np.zeros(2)]),
        (prox_catalog("box_indicator", lo=np.zeros(2), hi=np.ones(2)),
         [np.array([0.3, 0.8]), np.ones(2)]),
        (prox_catalog("ball_indicator", radius=2.0), [np.zeros(2), np.array([1.0, -1.0])]),
    ]
    for op, zeros in cases:
        for gamma in GAMMAS:
            for zero in zeros:
                assert np.linalg.norm(resolvent(op, gamma, zero) - zero) <= 1e-12


def test_parameter_inequality_on_grid(rng):
    lams = (0.1, 0.5, 1.0, 2.0, 5.0)
    for op, dim in _catalog_for_properties():
        for _ in range(3):
            x = rng.uniform(-5, 5, size=dim)
            for lam in lams:
                for mu in lams:
                    assert check_resolvent_parameter_inequality(op, lam, mu, x).holds


def test_grid_oracle_equivalence_2d(rng):
    quad = prox_catalog("quadratic", q=[[2.0, 0.5], [0.5, 1.0]], b=[0.4, -0.3])

    def f(y):
        q = np.array([[2.0, 0.5], [0.5, 1.0]])
        return 0.5 * np.sum((y @ q) * y, axis=-1) + y @ np.array([0.4, -0.3])

    for gamma in (0.5, 2.0):
        x = rng.uniform(-3, 3, size=2)
        assert np.max(np.abs(resolvent(quad, gamma, x) - prox_reference(f, gamma, x))) <= 1e-4


def test_linear_monotone_resolvent_satisfies_defining_equation(rng):
    # (I + gamma*M) z = x is the defining relation; no prox form exists for skew parts
    m = np.array([[1.0, 2.0], [-2.0, 1.0]])
    op = prox_catalog("linear_monotone", m=m)
    for gamma in GAMMAS:
        x = rng.uniform(-5, 5, size=2)
        z = resolvent(op, gamma, x)
        assert np.linalg.norm(z + gamma * (m @ z) - x) <= 1e-10


@settings(max_examples=200, deadline=None)
@given(
    x=st.floats(-50, 50),
    gamma=st.floats(1e-3, 10),
    weight=st.floats(0.0, 5.0),
)
def test_soft_threshold_satisfies_prox_optimality(x, gamma, weight):
    p = float(soft_threshold(np.array([x]), gamma * weight)[0])
    if p == 0.0:
        assert abs(x) <= gamma * weight + 1e-12
    else:
        # stationarity of |.|*weight + (y-x)^2/(2 gamma) at y = p
        assert x - p == pytest.approx(gamma * weight * math.copysign(1.0, p), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    x=st.floats(-20, 20),
    y=st.floats(-20, 20),
    gamma=st.floats(1e-3, 10),
)
def test_firm_nonexpansiveness_scalar_abs(x, y, gamma):
    jx = float(soft_threshold(np.array([x]), gamma)[0])
    jy = float(soft_threshold(np.array([y]), gamma)[0])
    assert (jx - jy) ** 2 <= (jx - jy) * (x - y) + 1e-10


def test_soft_threshold_kink_returns_zero():
    assert soft_threshold(np.array([0.5]), 0.5)[0] == 0.0
    assert soft_threshold(np.array([-0.5]), 0.5)[0] == 0.0


def test_operators_are_usable_with_batches(rng):
    x = rng.uniform(-4, 4, size=(7, 5, 2))
    for op, dim in _catalog_for_properties():
        if dim != 2:
            continue
        out = op.resolvent_oracle(1.0, x)
        assert out.shape == x.shape
        single = op.resolvent_oracle(1.0, x[3, 2])
        assert np.allclose(out[3, 2], single)

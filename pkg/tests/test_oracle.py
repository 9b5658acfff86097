from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsbco.errors import BudgetExceeded, InfeasibleQuery, InvalidArgument, ProtocolViolation
from nsbco.geometry import FeasibleSet, sample_unit_ball
from nsbco.oracle import (
    ONE_POINT,
    TWO_POINT,
    AbsNorm,
    BanditOracle,
    Linear,
    Quadratic,
    smoothed_grad,
    smoothed_value,
    smoothed_value_mc,
)

BALL2 = FeasibleSet.ball(2, 1.0)


def make_oracle(mode=ONE_POINT, T=3):
    return BanditOracle([Quadratic(np.zeros(2))] * T, BALL2, mode)


def test_begin_round_sequence():
    o = make_oracle()
    o.begin_round(1)
    assert o.remaining == 1
    with pytest.raises(ProtocolViolation):
        o.begin_round(3)
    with pytest.raises(ProtocolViolation):
        o.begin_round(1)


def test_two_point_capacity():
    o = make_oracle(TWO_POINT)
    o.begin_round(1)
    assert o.remaining == 2


def test_round_past_horizon():
    o = make_oracle(T=1)
    o.begin_round(1)
    with pytest.raises(ProtocolViolation):
        o.begin_round(2)


def test_query_before_round():
    with pytest.raises(ProtocolViolation):
        make_oracle().query(np.zeros(2))


def test_query_values_and_budget():
    o = make_oracle()
    o.begin_round(1)
    assert o.query(np.array([0.3, 0.4])) == pytest.approx(0.25)
    with pytest.raises(BudgetExceeded):
        o.query(np.zeros(2))
    assert o.total_queries == 1


def test_linear_query():
    lin = Linear(np.array([1.0, -1.0]), 0.5)
    o = BanditOracle([lin], BALL2, ONE_POINT)
    o.begin_round(1)
    assert o.query(np.array([0.2, 0.2])) == pytest.approx(0.5)


def test_infeasible_query():
    o = make_oracle()
    o.begin_round(1)
    with pytest.raises(InfeasibleQuery):
        o.query(np.array([1.0, 1.0]))
    assert o.queries_this_round == 0


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([ONE_POINT, TWO_POINT]), st.lists(st.integers(0, 3), min_size=1, max_size=20))
def test_budget_invariants(mode, attempts):
    o = make_oracle(mode, T=len(attempts))
    for t, k in enumerate(attempts, 1):
        o.begin_round(t)
        for _ in range(k):
            try:
                o.query(np.zeros(2))
            except BudgetExceeded:
                pass
            assert o.queries_this_round <= o.capacity
        assert o.total_queries <= t * o.capacity


FAMILIES = [
    Quadratic(np.array([0.3, -0.2])),
    Linear(np.array([2.0, -1.0]), 0.3),
    AbsNorm(1.5, np.array([0.1, 0.4])),
]


@pytest.mark.parametrize("fn", FAMILIES, ids=lambda f: type(f).__name__)
def test_lipschitz_and_bound_hold(fn):
    rng = np.random.default_rng(4)
    pts = sample_unit_ball(rng, 4000, 2) * BALL2.R
    vals = fn(pts)
    C, L = fn.bound(BALL2), fn.lipschitz(BALL2)
    assert np.all(np.abs(vals) <= C + 1e-12)
    a, b = pts[:2000], pts[2000:]
    ratios = np.abs(fn(a) - fn(b)) / np.linalg.norm(a - b, axis=1)
    assert np.max(ratios) <= L + 1e-9


@pytest.mark.parametrize("fn", FAMILIES, ids=lambda f: type(f).__name__)
def test_convexity_along_segments(fn):
    rng = np.random.default_rng(5)
    a = sample_unit_ball(rng, 500, 2)
    b = sample_unit_ball(rng, 500, 2)
    lam = rng.uniform(size=(500, 1))
    mid = lam * a + (1 - lam) * b
    assert np.all(fn(mid) <= lam[:, 0] * fn(a) + (1 - lam[:, 0]) * fn(b) + 1e-12)


def test_smoothed_value_closed_forms():
    lin = Linear(np.array([1.0, 2.0]), -0.5)
    x = np.array([0.3, -0.1])
    assert smoothed_value(lin, x, 0.4) == lin(x)
    assert smoothed_value(Quadratic(np.zeros(2)), np.zeros(2), 0.5) == pytest.approx(0.125)


def test_quadratic_smoothing_matches_monte_carlo():
    q = Quadratic(np.zeros(2))
    mean, se = smoothed_value_mc(q, np.zeros(2), 0.5, np.random.default_rng(0))
    assert abs(mean - 0.125) <= 3 * se


@pytest.mark.parametrize("fn", FAMILIES, ids=lambda f: type(f).__name__)
def test_smoothing_error_at_most_L_delta(fn):
    x = np.array([0.2, 0.1])
    for delta in (0.1, 0.01, 0.001):
        val = smoothed_value(fn, x, delta, np.random.default_rng(1))
        assert abs(val - fn(x)) <= fn.lipschitz(BALL2) * delta


def test_smoothed_grad_closed_forms():
    np.testing.assert_array_equal(smoothed_grad(Quadratic(np.zeros(2)), np.array([1.0, 0.0]), 0.3), [2.0, 0.0])
    np.testing.assert_array_equal(smoothed_grad(Linear(np.array([3.0, -1.0])), np.zeros(2), 0.3), [3.0, -1.0])


def test_abs_norm_smoothed_grad_matches_sphere_identity():
    # grad f_hat(x) = (d/delta) E[f(x + delta s) s]; compare to the finite-difference helper
    fn = AbsNorm(1.0, np.zeros(2))
    x, delta, n = np.array([0.05, 0.0]), 0.2, 1_000_000
    fd = smoothed_grad(fn, x, delta, np.random.default_rng(7))
    rng = np.random.default_rng(8)
    s = rng.normal(size=(n, 2))
    s /= np.linalg.norm(s, axis=1)[:, None]
    samples = (2 / delta) * fn(x + delta * s)[:, None] * s
    mc, se = samples.mean(axis=0), samples.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(fd - mc) <= 3 * se + 1e-3)


def test_smoothing_rejects_bad_delta():
    with pytest.raises(InvalidArgument):
        smoothed_value(Quadratic(np.zeros(1)), np.zeros(1), 0.0)

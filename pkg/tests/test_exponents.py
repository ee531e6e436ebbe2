import math

import numpy as np
import pytest

from oracles import exponent_scan, kl, renyi
from qdichotomy.divergences import petz, sandwiched
from qdichotomy.ensembles import random_density, random_full_rank, random_pure
from qdichotomy.exceptions import HypothesisViolationError, RejectedInputError
from qdichotomy.exponents import (
    Dichotomy,
    converse_lower_bound,
    f_flat_alpha_form,
    f_minimax_delta_form,
    first_order_rate,
    minimax_inner,
    minimax_objective,
    purified_objective,
    sc_exponent_purified,
    sc_exponent_trace_pure,
    trace_pure_objective,
    trace_pure_objective_beta,
)

P = np.diag([0.9, 0.1])
S = np.diag([0.5, 0.5])
KET0 = np.diag([1.0, 0.0])
E_R2 = 0.0780878554  # classical reference at r = 2, from the log-space scan


def diag_pair(p, q):
    return Dichotomy(np.diag(p), np.diag(q))


def random_pair(dim, rng, pure=False):
    rho = random_pure(dim, seed=rng) if pure else random_density(dim, seed=rng)
    return Dichotomy(rho, random_full_rank(dim, seed=rng))


CLASSICAL = [
    ([0.9, 0.1], [0.5, 0.5], [0.9, 0.1], [0.5, 0.5], 2.0),
    ([0.7, 0.2, 0.1], [0.2, 0.3, 0.5], [0.6, 0.4], [0.3, 0.7], 1.5),
    ([0.5, 0.5], [0.8, 0.2], [0.99, 0.01], [0.4, 0.6], 0.7),
    ([0.25, 0.25, 0.5], [0.1, 0.6, 0.3], [0.2, 0.3, 0.5], [0.5, 0.3, 0.2], 3.0),
]


def test_first_order_rate_examples():
    d = diag_pair([0.9, 0.1], [0.5, 0.5])
    rate = first_order_rate(d, d)
    assert rate.value == pytest.approx(1.0)
    assert rate.numerator == pytest.approx(0.531004406, abs=1e-9)
    same = Dichotomy(P, P)
    assert first_order_rate(d, same).value == math.inf
    assert not first_order_rate(d, same).indeterminate
    assert first_order_rate(same, same).indeterminate


def test_identical_dichotomies_at_rate_one():
    d = diag_pair([0.9, 0.1], [0.5, 0.5])
    res = sc_exponent_purified(d, d, 1.0)
    assert res.value == pytest.approx(0.0, abs=1e-12)
    assert res.rate_threshold == pytest.approx(1.0)
    assert f_flat_alpha_form(d, d, 1.0).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("r", [0.3, 1.0, 4.0])
def test_equal_second_pair_gives_zero(r, rng):
    d1 = random_pair(3, rng)
    rho = random_density(2, seed=rng)
    assert sc_exponent_purified(d1, Dichotomy(rho, rho), r).value == 0.0


@pytest.mark.parametrize("p1,q1,p2,q2,r", CLASSICAL)
def test_classical_exponent_matches_scan(p1, q1, p2, q2, r):
    res = sc_exponent_purified(diag_pair(p1, q1), diag_pair(p2, q2), r)
    expected, _ = exponent_scan(p1, q1, p2, q2, r, points=200_001)
    assert res.value == pytest.approx(expected, abs=1e-6)
    assert res.value >= max(v for _, v in res.curve) - 1e-12
    assert res.rate_threshold == pytest.approx(kl(p1, q1) / kl(p2, q2))


def test_reference_value_at_rate_two():
    d = diag_pair([0.9, 0.1], [0.5, 0.5])
    assert sc_exponent_purified(d, d, 2.0).value == pytest.approx(E_R2, abs=1e-9)


def test_objective_against_scalar_formula():
    d = diag_pair([0.9, 0.1], [0.5, 0.5])
    for alpha in (0.55, 0.7, 0.9):
        beta = alpha / (2 * alpha - 1)
        expected = (1 - alpha) / alpha * (2 * renyi(alpha, [.9, .1], [.5, .5])[0] - renyi(beta, [.9, .1], [.5, .5])[0])
        assert purified_objective(alpha, d, d, 2.0) == pytest.approx(expected, abs=1e-12)
    assert purified_objective(1.0, d, d, 2.0) == 0.0
    with pytest.raises(RejectedInputError):
        purified_objective(0.4, d, d, 2.0)


def test_zero_below_rate_and_monotone(rng):
    d1, d2 = random_pair(3, rng), random_pair(2, rng)
    rate = first_order_rate(d1, d2).value
    values = [sc_exponent_purified(d1, d2, r).value for r in np.linspace(0.1, 3 * rate, 9)]
    for r, v in zip(np.linspace(0.1, 3 * rate, 9), values):
        if r <= rate:
            assert v == pytest.approx(0.0, abs=1e-9)
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_support_failure_semantics():
    d_bad = Dichotomy(np.eye(2) / 2, KET0)
    d_ok = diag_pair([0.9, 0.1], [0.5, 0.5])
    assert sc_exponent_purified(d_bad, d_ok, 2.0).value == 0.0
    with pytest.raises(HypothesisViolationError):
        sc_exponent_purified(d_bad, d_bad, 2.0)
    with pytest.raises(HypothesisViolationError):
        f_minimax_delta_form(d_bad, d_ok, 2.0)
    with pytest.raises(RejectedInputError):
        sc_exponent_purified(d_ok, d_ok, -1.0)


def test_converse_bound_is_shared_code(rng):
    assert converse_lower_bound is sc_exponent_purified
    d1, d2 = random_pair(2, rng), random_pair(3, rng)
    a = converse_lower_bound(d1, d2, 2.5)
    b = sc_exponent_purified(d1, d2, 2.5)
    assert a.curve == b.curve and a.value == b.value


def test_trace_pure_requires_pure_rho2(rng):
    with pytest.raises(RejectedInputError):
        sc_exponent_trace_pure(random_pair(2, rng), random_pair(2, rng), 2.0)


def test_trace_pure_example():
    d = Dichotomy(KET0, np.eye(2) / 2)
    tp = sc_exponent_trace_pure(d, d, 2.0)
    assert tp.value == pytest.approx(sc_exponent_purified(d, d, 2.0).value, abs=1e-8)
    same = Dichotomy(KET0, KET0)
    assert sc_exponent_trace_pure(d, same, 3.0).value == 0.0


def test_beta_form_matches_alpha_form_pointwise(rng):
    d1, d2 = random_pair(3, rng), random_pair(3, rng, pure=True)
    for alpha in np.linspace(0.51, 0.99, 50):
        beta = alpha / (2 * alpha - 1)
        a = trace_pure_objective(alpha, d1, d2, 1.3)
        b = trace_pure_objective_beta(beta, d1, d2, 1.3)
        assert a == pytest.approx(b, abs=1e-9)
        # for pure rho2 the Petz order 2 - 1/alpha is the sandwiched order alpha
        assert petz(2 - 1 / alpha, d2.rho, d2.sigma) == pytest.approx(sandwiched(alpha, d2.rho, d2.sigma), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_flat_upper_bounds_purified(seed):
    rng = np.random.default_rng(seed)
    d1, d2 = random_pair(3, rng), random_pair(2, rng)
    r = 2.0 * first_order_rate(d1, d2).value
    assert f_flat_alpha_form(d1, d2, r).value >= sc_exponent_purified(d1, d2, r).value - 1e-6


@pytest.mark.parametrize("p1,q1,p2,q2,r", CLASSICAL)
def test_all_forms_agree_when_commuting(p1, q1, p2, q2, r):
    d1, d2 = diag_pair(p1, q1), diag_pair(p2, q2)
    e = sc_exponent_purified(d1, d2, r).value
    assert f_flat_alpha_form(d1, d2, r).value == pytest.approx(e, abs=1e-6)
    assert f_minimax_delta_form(d1, d2, r).value == pytest.approx(e, abs=1e-6)


def test_minimax_at_zero_delta(rng):
    d1, d2 = random_pair(3, rng), random_pair(3, rng)
    value, tau1, tau2 = minimax_inner(0.0, d1, d2, 1.7)
    assert value == 0.0
    assert np.allclose(tau1, d1.rho.matrix) and np.allclose(tau2, d2.rho.matrix)


@pytest.mark.parametrize("seed", range(4))
def test_minimax_equals_alpha_form_and_optimizers_are_sound(seed):
    rng = np.random.default_rng(100 + seed)
    d1, d2 = random_pair(3, rng), random_pair(3, rng)
    r = 1.7
    mm = f_minimax_delta_form(d1, d2, r)
    assert mm.value == pytest.approx(f_flat_alpha_form(d1, d2, r).value, abs=1e-6)
    delta = mm.argmax_order
    tau1, tau2 = mm.details["tau1"], mm.details["tau2"]
    assert minimax_objective(tau1, tau2, delta, d1, d2, r) == pytest.approx(mm.value, abs=1e-8)
    for _ in range(20):
        t1, t2 = random_density(3, seed=rng), random_density(3, seed=rng)
        assert minimax_objective(t1, t2, delta, d1, d2, r) >= mm.value - 1e-8

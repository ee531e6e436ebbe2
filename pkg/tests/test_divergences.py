import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qdichotomy.divergences import (
    KINDS,
    d_max,
    fidelity,
    log_euclidean,
    petz,
    petz_order_zero,
    purified_distance,
    renyi_divergence,
    sandwiched,
    support_contained,
    supports_orthogonal,
    trace_distance,
    umegaki,
    von_neumann_entropy,
)
from qdichotomy.ensembles import random_density, random_full_rank, random_pure
from qdichotomy.exceptions import RejectedInputError

P = np.diag([0.9, 0.1])
S = np.diag([0.5, 0.5])
KET0 = np.diag([1.0, 0.0])
KET1 = np.diag([0.0, 1.0])


def _mp(a):
    return mp.matrix([[mp.mpc(complex(v)) for v in row] for row in np.asarray(a)])


def _mp_trace(a):
    return sum(a[i, i] for i in range(a.rows))


def _mp_power(a, p):
    w, v = mp.eighe(a)
    return v * mp.diag([x ** p for x in w]) * v.transpose_conj()


def oracle(kind, alpha, rho, sigma):
    """Rényi divergence in 50-digit arithmetic for full-rank inputs."""
    mp.mp.dps = 50
    r, s, a = _mp(rho), _mp(sigma), mp.mpf(alpha)
    if kind == "sandwiched":
        g = _mp_power(s, (1 - a) / (2 * a))
        q = _mp_trace(_mp_power(g * r * g, a))
    elif kind == "petz":
        q = _mp_trace(_mp_power(r, a) * _mp_power(s, 1 - a))
    else:
        q = _mp_trace(mp.expm(a * mp.logm(r) + (1 - a) * mp.logm(s)))
    return float(mp.log(mp.re(q), 2) / (a - 1))


# -- reference values -----------------------------------------------------


def test_fidelity_examples():
    assert fidelity(S, P) == pytest.approx(math.sqrt(0.45) + math.sqrt(0.05), abs=1e-12)
    assert fidelity(S, P) == pytest.approx(0.894427191, abs=1e-9)
    assert fidelity(KET0, KET1) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(P, P) == pytest.approx(1.0, abs=1e-12)


def test_distance_examples():
    assert trace_distance(P, S) == pytest.approx(0.4, abs=1e-12)
    assert purified_distance(P, S) == pytest.approx(0.447213595, abs=1e-9)
    assert trace_distance(KET0, KET1) == pytest.approx(1.0)
    assert purified_distance(KET0, KET1) == pytest.approx(1.0)
    assert purified_distance(P, P) == pytest.approx(0.0, abs=1e-7)


@pytest.mark.parametrize("kind", KINDS)
def test_commuting_order_two_value(kind):
    assert renyi_divergence(kind, 2.0, P, S).value == pytest.approx(0.713695815, abs=1e-9)


def test_umegaki_and_entropy_examples():
    assert umegaki(P, S).value == pytest.approx(0.531004406, abs=1e-9)
    assert von_neumann_entropy(P) == pytest.approx(0.468995594, abs=1e-9)
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
    assert von_neumann_entropy(KET0) == 0.0
    assert umegaki(KET0, KET1).value == math.inf


@pytest.mark.parametrize("alpha", [0.6, 0.75, 2.0, 3.0])
def test_pure_against_maximally_mixed_is_one_bit(alpha, rng):
    psi = random_pure(2, seed=rng)
    assert sandwiched(alpha, psi, np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)
    assert d_max(psi, np.eye(2) / 2).value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9, 1.5, 4.0])
def test_divergence_of_state_with_itself_is_zero(kind, alpha, rng):
    rho = random_density(3, seed=rng)
    assert renyi_divergence(kind, alpha, rho, rho).value == pytest.approx(0.0, abs=1e-10)


# -- independent high-precision oracle -------------------------------------


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8, 1.3, 2.5])
@pytest.mark.parametrize("dim", [2, 3])
def test_against_high_precision_oracle(kind, alpha, dim):
    rng = np.random.default_rng(1000 * dim + int(10 * alpha))
    rho = random_full_rank(dim, seed=rng, mix=0.05).matrix
    sigma = random_full_rank(dim, seed=rng, mix=0.05).matrix
    got = renyi_divergence(kind, alpha, rho, sigma).value
    assert got == pytest.approx(oracle(kind, alpha, rho, sigma), abs=1e-9)


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.52])
def test_sandwiched_with_widely_spread_sigma(alpha):
    # a large power range of sigma routes through the graded kernel
    rng = np.random.default_rng(5)
    sigma = np.diag([0.6, 0.4 - 1e-10, 1e-10])
    rho = random_full_rank(3, seed=rng).matrix
    assert sandwiched(alpha, rho, sigma) == pytest.approx(oracle("sandwiched", alpha, rho, sigma), abs=1e-9)


def test_eigenvalues_below_rank_tolerance_count_as_zero():
    rho = random_full_rank(3, seed=6).matrix
    tiny = np.diag([0.6, 0.4 - 1e-14, 1e-14])
    cut = np.diag([0.6, 0.4, 0.0])
    for alpha in (0.6, 0.8):
        assert sandwiched(alpha, rho, tiny) == pytest.approx(sandwiched(alpha, rho, cut), abs=1e-12)


# -- support semantics and rejections --------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_support_failures_give_infinity(kind):
    rho = np.eye(2) / 2
    assert renyi_divergence(kind, 2.0, rho, KET0).value == math.inf
    assert renyi_divergence(kind, 0.5, KET0, KET1).value == math.inf
    assert math.isfinite(renyi_divergence(kind, 0.5, rho, KET0).value)


def test_log_euclidean_needs_support_intersection():
    a = np.diag([0.5, 0.5, 0.0])
    b = np.diag([0.0, 0.5, 0.5])
    assert log_euclidean(0.5, a, b) == pytest.approx(2.0, abs=1e-12)
    k0 = np.diag([1.0, 0.0, 0.0])
    assert support_contained(k0, a) and not support_contained(a, k0)
    assert supports_orthogonal(KET0, KET1) and not supports_orthogonal(a, b)
    with pytest.raises(RejectedInputError):
        support_contained(KET0, a)


@pytest.mark.parametrize("alpha", [0.0, -1.0, 1.0, math.inf, math.nan])
def test_bad_orders_rejected(alpha):
    with pytest.raises(RejectedInputError):
        renyi_divergence("petz", alpha, P, S)


def test_bad_inputs_rejected():
    with pytest.raises(RejectedInputError):
        renyi_divergence("geometric", 0.5, P, S)
    with pytest.raises(RejectedInputError):
        sandwiched(0.5, P, np.eye(3) / 3)
    with pytest.raises(RejectedInputError):
        fidelity(P, np.eye(3) / 3)


def test_near_one_order_uses_relative_entropy():
    v = renyi_divergence("sandwiched", 1 + 1e-6, P, S)
    assert v.near_one and v.value == pytest.approx(umegaki(P, S).value)


def test_order_limits():
    rho = random_density(3, seed=11)
    sigma = random_full_rank(3, seed=12)
    for beta in (2, 10, 100):
        assert sandwiched(beta, rho, sigma) <= d_max(rho, sigma).value + 1e-9
    assert petz(1e-3, rho, sigma) == pytest.approx(petz_order_zero(rho, sigma).value, abs=1e-2)
    assert d_max(rho, rho).value == pytest.approx(0.0, abs=1e-9)


# -- properties -------------------------------------------------------------


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_half_order_is_log_fidelity(dim, seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(dim, seed=rng), random_density(dim, seed=rng)
    assert sandwiched(0.5, rho, sigma) == pytest.approx(-2 * math.log2(fidelity(rho, sigma)), abs=1e-9)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1), st.floats(0.55, 0.95))
def test_pure_state_order_identity(dim, seed, alpha):
    rng = np.random.default_rng(seed)
    psi, sigma = random_pure(dim, seed=rng), random_full_rank(dim, seed=rng)
    assert sandwiched(alpha, psi, sigma) == pytest.approx(petz(2 - 1 / alpha, psi, sigma), abs=1e-9)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_fuchs_van_de_graaf(dim, seed):
    rng = np.random.default_rng(seed)
    rho, sigma = random_density(dim, seed=rng), random_density(dim, seed=rng)
    f, d = fidelity(rho, sigma), trace_distance(rho, sigma)
    assert abs(f - fidelity(sigma, rho)) < 1e-10
    assert 1 - f <= d + 1e-10
    assert d <= purified_distance(rho, sigma) + 1e-10

"""Seeded property-test harness for the divergence, exponent and channel inequalities.

Each check draws its own random instances from a generator seeded by
``(seed, crc32(name), dim)``, so results do not depend on the order or
concurrency in which checks run. A check returns one slack per trial:
for inequalities the slack is ``rhs - lhs`` (negative means violated), for
equalities it is ``|lhs - rhs|``.
"""
from __future__ import annotations

import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .channels import ChoiChannel, apply_choi
from .divergences import (
    d_max,
    fidelity,
    purified_distance,
    renyi_divergence,
    trace_distance,
    umegaki,
)
from .ensembles import random_channel, random_density, random_full_rank, random_pure, random_unitary
from .exponents import (
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
)
from .finite import fidelity_sdp, solve_optimal_fidelity, solve_optimal_trace
from .linalg import DensityOperator, pinching_map

THREADS_ENV = "QDICHOTOMY_THREADS"
VALID_DIMS = frozenset(range(2, 7))
KINDS = ("sandwiched", "petz", "log-euclidean")

#: properties that must each be covered by at least one check
MANIFEST = frozenset({
    "fidelity-half-order-identity",
    "pure-state-order-identity",
    "monotonicity-in-order",
    "monotonicity-in-sigma",
    "variational-log-euclidean",
    "data-processing",
    "pinching-approximation",
    "family-ordering",
    "commuting-collapse",
    "max-divergence-bound",
    "fuchs-van-de-graaf",
    "pure-state-fuchs-van-de-graaf",
    "fidelity-continuity",
    "fidelity-relative-entropy-bound",
    "block-pinching-fidelity",
    "pinching-inequality",
    "zero-below-rate",
    "monotone-in-rate",
    "achievability-sandwich",
    "minimax-equality",
    "gibbs-optimizer-soundness",
    "trace-pure-consistency",
    "converse-bound-shared",
    "fidelity-block-sdp",
    "replacement-channel-bound",
    "pure-target-distance-bridge",
})


@dataclass(frozen=True)
class Check:
    name: str
    property: str
    kind: str  # "inequality" or "equality"
    func: Callable
    #: trials are divided by this for expensive checks (at least one trial per dim)
    cost: int = 1
    #: smallest tolerance meaningful for the check (solver accuracy)
    floor: float = 0.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    property: str
    kind: str
    trials: int
    worst_slack: float
    tolerance: float
    passed: bool

    @property
    def margin(self) -> float:
        """Signed distance from failure; smaller is closer to failing."""
        if self.kind == "equality":
            return self.tolerance - abs(self.worst_slack)
        return self.worst_slack + self.tolerance


@dataclass(frozen=True)
class SuiteReport:
    checks: list
    seed: int
    dims_tested: list
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", all(c.passed for c in self.checks))

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dims_tested": list(self.dims_tested),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        width = max(len(c.name) for c in self.checks)
        lines = [f"{'check':<{width}}  {'kind':<10}  {'trials':>6}  {'worst slack':>13}  result"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:<{width}}  {c.kind:<10}  {c.trials:>6}  {c.worst_slack:>13.4e}  {status}")
        lines.append(f"seed={self.seed} dims={list(self.dims_tested)} tolerance={self.tolerance:g} "
                     f"overall={'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# instance generators


def _rho(rng, d):
    return random_density(d, rank=int(rng.integers(1, d + 1)), seed=rng)


def _sigma(rng, d):
    return random_full_rank(d, seed=rng)


def _order(rng, lo, hi):
    """Log-uniform order in [lo, hi] kept away from 1."""
    while True:
        a = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        if abs(a - 1.0) > 1e-3:
            return a


def _div(kind, alpha, rho, sigma):
    return renyi_divergence(kind, alpha, rho, sigma).value


def _diff(a, b):
    if math.isinf(a) and math.isinf(b) and (a > 0) == (b > 0):
        return 0.0
    return abs(a - b)


def _degenerate_sigma(rng, d):
    """Full-rank state whose spectrum has repeated eigenvalues, so v(sigma) < d sometimes."""
    levels = rng.uniform(0.1, 1.0, size=int(rng.integers(1, d + 1)))
    spectrum = rng.choice(levels, size=d)
    spectrum = spectrum / spectrum.sum()
    u = random_unitary(d, seed=rng)
    return DensityOperator((u * spectrum) @ u.conj().T)


def _commuting_pair(rng, d):
    u = random_unitary(d, seed=rng)
    p = rng.dirichlet(np.ones(d))
    q = rng.dirichlet(np.ones(d)) * 0.99 + 0.01 / d
    return DensityOperator((u * p) @ u.conj().T), DensityOperator((u * q) @ u.conj().T)


def _dichotomy(rng, d, pure_rho=False):
    rho = random_pure(d, seed=rng) if pure_rho else random_full_rank(d, seed=rng, mix=0.05)
    return Dichotomy(rho, random_full_rank(d, seed=rng, mix=0.05))


# ---------------------------------------------------------------------------
# divergence checks


def _half_order_identity(rng, d):
    rho, sigma = _rho(rng, d), _rho(rng, d)
    lhs = _div("sandwiched", 0.5, rho, sigma)
    f = fidelity(rho, sigma)
    rhs = math.inf if f == 0 else -2.0 * math.log2(f)
    return _diff(lhs, rhs)


def _pure_state_identity(rng, d):
    rho, sigma = random_pure(d, seed=rng), _sigma(rng, d)
    alpha = float(rng.uniform(0.51, 0.99))
    return _diff(_div("sandwiched", alpha, rho, sigma), _div("petz", 2.0 - 1.0 / alpha, rho, sigma))


def _monotone_order(rng, d):
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    a, b = sorted((_order(rng, 0.05, 8.0), _order(rng, 0.05, 8.0)))
    return min(_div(k, b, rho, sigma) - _div(k, a, rho, sigma) for k in KINDS)


_SIGMA_RANGES = {"sandwiched": (0.5, 8.0), "petz": (0.05, 2.0), "log-euclidean": (0.05, 8.0)}
_DPI_RANGES = {"sandwiched": (0.5, 8.0), "petz": (0.05, 2.0), "log-euclidean": (0.05, 0.999)}


def _monotone_sigma(rng, d):
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    extra = random_density(d, rank=int(rng.integers(1, d + 1)), seed=rng).matrix
    bigger = sigma.matrix + rng.uniform(0.01, 1.0) * extra
    slacks = []
    for k, (lo, hi) in _SIGMA_RANGES.items():
        a = _order(rng, lo, hi)
        slacks.append(_div(k, a, rho, sigma) - _div(k, a, rho, bigger))
    return min(slacks)


def _variational_flat(rng, d):
    rho, sigma = _sigma(rng, d), _sigma(rng, d)
    tau = random_density(d, seed=rng)
    alpha = _order(rng, 0.05, 8.0)
    bound = umegaki(tau, sigma).value - alpha / (alpha - 1.0) * umegaki(tau, rho).value
    value = _div("log-euclidean", alpha, rho, sigma)
    # minimum over tau below order one, maximum above
    return bound - value if alpha < 1 else value - bound


def _data_processing(rng, d):
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    d_out = int(rng.integers(2, d + 1))
    env = -(-d // d_out)
    ch = random_channel(d, d_out, int(rng.integers(env, env + 3)), seed=rng)
    n_rho, n_sigma = apply_choi(ch, rho.matrix).matrix, apply_choi(ch, sigma.matrix).matrix
    slacks = []
    for k, (lo, hi) in _DPI_RANGES.items():
        a = _order(rng, lo, hi)
        slacks.append(_div(k, a, rho, sigma) - _div(k, a, n_rho, n_sigma))
    return min(slacks)


def _data_processing_mutant(rng, d):
    """Deliberately wrong: the channel is applied to rho only."""
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    ch = random_channel(d, d, 2, seed=rng)
    n_rho = apply_choi(ch, rho.matrix).matrix
    return _div("sandwiched", 2.0, rho, sigma) - _div("sandwiched", 2.0, n_rho, sigma)


def _pinching_approximation(rng, d):
    rho, sigma = _rho(rng, d), _degenerate_sigma(rng, d)
    pinch = pinching_map(sigma.matrix)
    pinched = pinch(rho.matrix)
    slacks = []
    for alpha in (0.5, 0.8, 2.0):
        mid = _div("sandwiched", alpha, rho, sigma)
        low = _div("sandwiched", alpha, pinched, sigma)
        slacks += [mid - low, low + 2.0 * math.log2(pinch.v) - mid]
    return min(slacks)


def _family_ordering(rng, d):
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    alpha = _order(rng, 0.05, 8.0)
    s, p, f = (_div(k, alpha, rho, sigma) for k in KINDS)
    if alpha < 1:
        return min(p - s, f - p)
    return min(p - s, s - f)


def _commuting_collapse(rng, d):
    rho, sigma = _commuting_pair(rng, d)
    alpha = _order(rng, 0.05, 8.0)
    values = [_div(k, alpha, rho, sigma) for k in KINDS]
    return max(values) - min(values)


def _max_divergence_bound(rng, d):
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    top = d_max(rho, sigma).value
    return min(top - _div("sandwiched", b, rho, sigma) for b in (2.0, 10.0, 100.0))


def _fuchs_van_de_graaf(rng, d):
    rho, sigma = _rho(rng, d), _rho(rng, d)
    t, f = trace_distance(rho, sigma), fidelity(rho, sigma)
    return min(t - (1.0 - f), purified_distance(rho, sigma) - t)


def _pure_fvdg(rng, d):
    rho, phi = _rho(rng, d), random_pure(d, seed=rng)
    return math.sqrt(trace_distance(rho, phi)) - purified_distance(rho, phi)


def _fidelity_continuity(rng, d):
    rho, sigma = _rho(rng, d), _rho(rng, d)
    # tau near rho half of the time so the bound is not vacuous
    tau = _rho(rng, d)
    if rng.random() < 0.5:
        w = rng.uniform(0.0, 0.1)
        tau = DensityOperator((1 - w) * rho.matrix + w * tau.matrix)
    norm1 = float(np.sum(np.abs(np.linalg.eigvalsh(rho.matrix - tau.matrix))))
    return fidelity(tau, sigma) ** 2 - (fidelity(rho, sigma) ** 2 - math.sqrt(norm1))


def _fidelity_relative_entropy(rng, d):
    rho, sigma, tau = _sigma(rng, d), _sigma(rng, d), _rho(rng, d)
    lhs = -2.0 * math.log2(fidelity(rho, sigma))
    return umegaki(tau, rho).value + umegaki(tau, sigma).value - lhs


def _random_blocks(rng, d):
    u = random_unitary(d, seed=rng)
    cuts = np.sort(rng.choice(np.arange(1, d), size=int(rng.integers(0, d)), replace=False))
    edges = [0, *cuts.tolist(), d]
    return [u[:, a:b] @ u[:, a:b].conj().T for a, b in zip(edges, edges[1:])]


def _block_pinching_fidelity(rng, d):
    rho = _rho(rng, d)
    blocks = _random_blocks(rng, d)
    parts = [random_density(d, seed=rng).matrix for _ in blocks]
    weights = rng.dirichlet(np.ones(len(blocks)))
    sigma = sum(w * p @ s @ p for w, p, s in zip(weights, blocks, parts))
    sigma = sigma / np.trace(sigma).real
    pinched = sum(p @ rho.matrix @ p for p in blocks)
    return math.sqrt(len(blocks)) * fidelity(rho, sigma) - fidelity(pinched, sigma)


def _pinching_inequality(rng, d):
    a = _degenerate_sigma(rng, d)
    sigma = _rho(rng, d)
    pinch = pinching_map(a.matrix)
    gap = pinch.v * pinch(sigma.matrix).matrix - sigma.matrix
    return float(np.linalg.eigvalsh(gap)[0])


# ---------------------------------------------------------------------------
# exponent checks


def _target_dim(rng, d):
    return int(rng.integers(2, d + 1))


def _zero_below_rate(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d))
    rate = first_order_rate(d1, d2).value
    r = rate * float(rng.uniform(0.2, 1.0))
    return abs(sc_exponent_purified(d1, d2, r).value)


def _monotone_in_rate(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d))
    rate = first_order_rate(d1, d2).value
    r1, r2 = sorted(rate * rng.uniform(0.5, 4.0, size=2))
    return sc_exponent_purified(d1, d2, r2).value - sc_exponent_purified(d1, d2, r1).value


def _achievability_sandwich(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d))
    r = first_order_rate(d1, d2).value * float(rng.uniform(0.8, 3.0))
    return f_flat_alpha_form(d1, d2, r).value - sc_exponent_purified(d1, d2, r).value


def _exponent_commuting_collapse(rng, d):
    d1 = Dichotomy(*_commuting_pair(rng, d))
    d2 = Dichotomy(*_commuting_pair(rng, _target_dim(rng, d)))
    r = first_order_rate(d1, d2).value * float(rng.uniform(0.8, 3.0))
    return abs(f_flat_alpha_form(d1, d2, r).value - sc_exponent_purified(d1, d2, r).value)


def _minimax_equality(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d))
    r = float(rng.choice([0.5, 1.0, 1.7, 3.0]))
    return abs(f_flat_alpha_form(d1, d2, r).value - f_minimax_delta_form(d1, d2, r).value)


def _gibbs_soundness(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d))
    r = float(rng.choice([0.5, 1.0, 1.7, 3.0]))
    delta = f_minimax_delta_form(d1, d2, r).argmax_order
    value, tau1, tau2 = minimax_inner(delta, d1, d2, r)
    # the reported optimizers must reproduce the infimum; random probes must not beat it
    slacks = [-abs(minimax_objective(tau1, tau2, delta, d1, d2, r) - value)]
    for _ in range(10):
        t1 = random_full_rank(d1.dim, seed=rng, mix=float(rng.uniform(0.01, 0.5)))
        t2 = random_full_rank(d2.dim, seed=rng, mix=float(rng.uniform(0.01, 0.5)))
        slacks.append(minimax_objective(t1, t2, delta, d1, d2, r) - value)
    return min(slacks)


def _trace_pure_consistency(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d), pure_rho=True)
    rate = first_order_rate(d1, d2).value
    r = rate * float(rng.uniform(0.8, 3.0))
    res = sc_exponent_trace_pure(d1, d2, r)
    return abs(res.value - res.details["purified_value"])


def _converse_shared(rng, d):
    d1, d2 = _dichotomy(rng, d), _dichotomy(rng, _target_dim(rng, d))
    r = first_order_rate(d1, d2).value * float(rng.uniform(1.0, 3.0))
    assert converse_lower_bound is sc_exponent_purified
    curve = converse_lower_bound(d1, d2, r, grid_points=51).curve
    return max(_diff(v, purified_objective(a, d1, d2, r)) for a, v in curve)


# ---------------------------------------------------------------------------
# channel-optimization checks


def _fidelity_block_sdp(rng, d):
    rho, sigma = _rho(rng, d), _sigma(rng, d)
    return abs(fidelity_sdp(rho, sigma) - fidelity(rho, sigma))


def _small_instance(rng, d, pure_target=False):
    d_in, d_out = min(d, 3), 2
    rho_t = random_pure(d_out, seed=rng) if pure_target else _sigma(rng, d_out)
    return _sigma(rng, d_in), _sigma(rng, d_in), rho_t, _sigma(rng, d_out)


def _replacement_bound(rng, d):
    rho_in, sigma_in, rho_t, sigma_t = _small_instance(rng, d)
    res = solve_optimal_fidelity(rho_in, sigma_in, rho_t, sigma_t, tol=1e-8)
    replaced = ChoiChannel.replacement(sigma_in.dim, sigma_t.matrix)
    assert apply_choi(replaced, rho_in.matrix).dim == rho_t.dim
    return math.sqrt(res.optimal_fidelity_sq) - fidelity(sigma_t, rho_t)


def _pure_target_bridge(rng, d):
    rho_in, sigma_in, rho_t, sigma_t = _small_instance(rng, d, pure_target=True)
    p_opt = solve_optimal_fidelity(rho_in, sigma_in, rho_t, sigma_t, tol=1e-9).optimal_error
    d_opt = solve_optimal_trace(rho_in, sigma_in, rho_t, sigma_t, tol=1e-9).optimal_error
    return min(p_opt - d_opt, math.sqrt(d_opt) - p_opt)


CHECKS = (
    Check("half_order_fidelity_identity", "fidelity-half-order-identity", "equality", _half_order_identity),
    Check("pure_state_order_identity", "pure-state-order-identity", "equality", _pure_state_identity),
    Check("monotone_in_order", "monotonicity-in-order", "inequality", _monotone_order),
    Check("monotone_in_sigma", "monotonicity-in-sigma", "inequality", _monotone_sigma),
    Check("log_euclidean_variational", "variational-log-euclidean", "inequality", _variational_flat),
    Check("data_processing", "data-processing", "inequality", _data_processing),
    Check("pinching_approximation", "pinching-approximation", "inequality", _pinching_approximation),
    Check("family_ordering", "family-ordering", "inequality", _family_ordering),
    Check("commuting_families_agree", "commuting-collapse", "equality", _commuting_collapse),
    Check("max_divergence_bound", "max-divergence-bound", "inequality", _max_divergence_bound),
    Check("fuchs_van_de_graaf", "fuchs-van-de-graaf", "inequality", _fuchs_van_de_graaf),
    Check("pure_state_fuchs_van_de_graaf", "pure-state-fuchs-van-de-graaf", "inequality", _pure_fvdg),
    Check("fidelity_continuity", "fidelity-continuity", "inequality", _fidelity_continuity),
    Check("fidelity_relative_entropy_bound", "fidelity-relative-entropy-bound", "inequality",
          _fidelity_relative_entropy),
    Check("block_pinching_fidelity", "block-pinching-fidelity", "inequality", _block_pinching_fidelity),
    Check("pinching_inequality", "pinching-inequality", "inequality", _pinching_inequality),
    Check("exponent_zero_below_rate", "zero-below-rate", "equality", _zero_below_rate, cost=20),
    Check("exponent_monotone_in_rate", "monotone-in-rate", "inequality", _monotone_in_rate, cost=20),
    Check("log_euclidean_upper_bound", "achievability-sandwich", "inequality", _achievability_sandwich,
          cost=20),
    Check("commuting_exponents_agree", "commuting-collapse", "equality", _exponent_commuting_collapse,
          cost=20),
    Check("minimax_equals_alpha_form", "minimax-equality", "equality", _minimax_equality, cost=20),
    Check("gibbs_optimizer_soundness", "gibbs-optimizer-soundness", "inequality", _gibbs_soundness,
          cost=20),
    Check("trace_pure_matches_purified", "trace-pure-consistency", "equality", _trace_pure_consistency,
          cost=20),
    Check("converse_bound_shared", "converse-bound-shared", "equality", _converse_shared, cost=20),
    Check("fidelity_block_sdp", "fidelity-block-sdp", "equality", _fidelity_block_sdp, cost=20,
          floor=1e-7),
    Check("replacement_channel_bound", "replacement-channel-bound", "inequality", _replacement_bound,
          cost=40, floor=1e-6),
    Check("pure_target_distance_bridge", "pure-target-distance-bridge", "inequality",
          _pure_target_bridge, cost=40, floor=1e-6),
)

#: harness self-test: must fail
MUTANTS = (
    Check("data_processing_one_sided", "data-processing", "inequality", _data_processing_mutant),
)


def check_coverage(checks=CHECKS) -> None:
    covered = {c.property for c in checks}
    missing = MANIFEST - covered
    if missing:
        raise RuntimeError(f"verification suite misses properties: {sorted(missing)}")


def _generator(seed: int, name: str, dim: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode()), dim]))


def run_check(check: Check, seed: int, trials: int, dims, tolerance: float) -> CheckResult:
    n = max(1, trials // check.cost)
    slacks = []
    for d in dims:
        rng = _generator(seed, check.name, d)
        slacks += [float(check.func(rng, d)) for _ in range(n)]
    tol = max(tolerance, check.floor)
    if check.kind == "equality":
        worst = max(slacks)
        passed = abs(worst) <= tol
    else:
        worst = min(slacks)
        passed = worst >= -tol
    return CheckResult(check.name, check.property, check.kind, n * len(dims), worst, tol, passed)


def thread_count(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw)) if raw else default
    except ValueError:
        return default


def run_suite(seed: int = 42, trials: int = 200, dims=(2, 3, 4), tolerance: float = 1e-6,
              checks=CHECKS, workers: int | None = None) -> SuiteReport:
    """Run every check on ``trials`` instances per dim; report sorted by worst margin.

    Expensive checks (exponent optimizations and SDPs) run ``trials // cost``
    instances per dim. Checks run concurrently on ``workers`` threads
    (default from the ``QDICHOTOMY_THREADS`` environment variable).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    dims = sorted(set(int(d) for d in dims))
    if not dims or not set(dims) <= VALID_DIMS:
        raise ValueError(f"dims must be a nonempty subset of {sorted(VALID_DIMS)}, got {dims}")
    if checks is CHECKS:
        check_coverage()
    workers = thread_count() if workers is None else workers

    def job(c):
        return run_check(c, seed, trials, dims, tolerance)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, checks))
    else:
        results = [job(c) for c in checks]
    results.sort(key=lambda c: (c.margin, c.name))
    return SuiteReport(results, seed, dims, tolerance)

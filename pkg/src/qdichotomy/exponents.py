"""Strong converse exponents of dichotomy transformations.

Four evaluators live here:

* :func:`sc_exponent_purified`, the sup over alpha in [1/2, 1] of
  ``(1-a)/a * (r D*_a(rho2||sigma2) - D*_{a/(2a-1)}(rho1||sigma1))``;
* :func:`sc_exponent_trace_pure`, the Petz/sandwiched variant for a pure
  ``rho2``, computed in the beta = a/(2a-1) parametrization;
* :func:`f_flat_alpha_form`, the same shape with log-Euclidean divergences;
* :func:`f_minimax_delta_form`, the minimax form of the log-Euclidean
  quantity, whose inner infimum over states is solved by Gibbs states.

All values are in bits per copy.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .divergences import (
    _log2sum,
    _restricted_log,
    _spectrum,
    d_max,
    log_euclidean_max,
    petz_order_zero,
    renyi_divergence,
    support_contained,
    umegaki,
)
from .exceptions import HypothesisViolationError, RejectedInputError
from .linalg import DensityOperator, as_density, intersect_supports, support_projector

logger = logging.getLogger(__name__)

GRID_POINTS = 513
ORDER_TOL = 1e-8
#: above this beta the order-infinity limit replaces D_beta
BETA_CAP = 1e6
#: golden-section resolution of the minimax parameter
DELTA_TOL = 1e-10
CROSS_CHECK_TOL = 1e-8

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class Dichotomy:
    """Ordered pair of states on a common space."""

    rho: DensityOperator
    sigma: DensityOperator
    supported: bool = field(init=False)

    def __post_init__(self):
        rho, sigma = as_density(self.rho), as_density(self.sigma)
        if rho.dim != sigma.dim:
            raise RejectedInputError(f"dichotomy states differ in dimension: {rho.dim} vs {sigma.dim}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "supported", support_contained(rho, sigma))

    @property
    def dim(self) -> int:
        return self.rho.dim

    def relative_entropy(self) -> float:
        return umegaki(self.rho, self.sigma).value


@dataclass(frozen=True)
class FirstOrderRate:
    """``D(rho1||sigma1) / D(rho2||sigma2)``; 0/0 is reported as indeterminate."""

    value: float
    numerator: float
    denominator: float
    indeterminate: bool = False

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class ExponentResult:
    """Optimized exponent with optimizer diagnostics.

    ``argmax_order`` is alpha for the alpha-parametrized forms and delta for
    the minimax form. ``curve`` holds the sampled ``(order, objective)`` pairs
    in increasing order. ``details`` carries form-specific extras such as the
    Gibbs optimizers or a cross-check discrepancy.
    """

    value: float
    argmax_order: float
    curve: tuple
    rate_threshold: float
    form: str
    details: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _as_dichotomy(d) -> Dichotomy:
    if isinstance(d, Dichotomy):
        return d
    rho, sigma = d
    return Dichotomy(rho, sigma)


def first_order_rate(d1, d2) -> FirstOrderRate:
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    num, den = d1.relative_entropy(), d2.relative_entropy()
    if math.isinf(num):
        return FirstOrderRate(math.inf, num, den, indeterminate=math.isinf(den))
    if den == 0.0 or abs(den) < 1e-14:
        return FirstOrderRate(math.inf, num, den, indeterminate=abs(num) < 1e-14)
    return FirstOrderRate(num / den, num, den)


# ---------------------------------------------------------------------------
# extended-real helpers


def _combine(coef: float, r: float, second: float, first: float) -> float:
    """``coef * (r * second - first)`` with r*inf = inf, x - inf = -inf."""
    if coef == 0.0:
        return 0.0
    if math.isinf(first):
        return -math.inf
    if math.isinf(second):
        return math.inf if r > 0 else -first * coef
    return coef * (r * second - first)


def _beta(alpha: float) -> float:
    den = 2.0 * alpha - 1.0
    return math.inf if den <= 0 else alpha / den


def _golden_max(fun: Callable[[float], float], lo: float, hi: float, tol: float):
    """Golden-section search for a maximum of ``fun`` on ``[lo, hi]``.

    Returns the best point seen and every evaluation made.
    """
    evals = []

    def f(x):
        v = fun(x)
        evals.append((x, v))
        return v

    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    best = max(evals, key=lambda e: e[1])
    return best, evals


def maximize_order(fun: Callable[[float], float], lo: float, hi: float,
                   grid_points: int = GRID_POINTS, tol: float = ORDER_TOL, workers: int = 1):
    """Dense uniform grid, then golden-section refinement around the best grid point.

    Returns ``(argmax, value, curve)``. The reduction is a plain max over a
    fixed list of points, so the result does not depend on ``workers``.
    """
    grid = np.linspace(lo, hi, grid_points)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(fun, grid))
    else:
        values = [fun(x) for x in grid]
    curve = list(zip(grid.tolist(), values))
    i = int(np.argmax(values))
    best = (float(grid[i]), values[i])
    if math.isinf(best[1]):
        return best[0], best[1], tuple(curve)
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    (x, v), evals = _golden_max(fun, float(a), float(b), tol)
    curve.extend(evals)
    curve.sort(key=lambda e: e[0])
    if v > best[1]:
        best = (x, v)
    return best[0], best[1], tuple(curve)


def _result(form, argmax, value, curve, d1, d2, details=None) -> ExponentResult:
    if value < 0.0:
        value, argmax = 0.0, 1.0
    return ExponentResult(value, argmax, curve, first_order_rate(d1, d2).value, form, details or {})


# ---------------------------------------------------------------------------
# sandwiched formula (shared by the converse lower bound and the exact exponent)


def purified_objective(alpha: float, d1, d2, r: float) -> float:
    """Objective of the purified-distance exponent at order ``alpha`` in [1/2, 1]."""
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if not 0.5 <= alpha <= 1.0:
        raise RejectedInputError(f"order must lie in [1/2, 1], got {alpha}")
    if alpha == 1.0:
        return 0.0
    coef = (1.0 - alpha) / alpha
    beta = _beta(alpha)
    second = renyi_divergence("sandwiched", alpha, d2.rho, d2.sigma).value
    if beta > BETA_CAP:
        first = d_max(d1.rho, d1.sigma).value
    else:
        first = renyi_divergence("sandwiched", beta, d1.rho, d1.sigma).value
    return _combine(coef, r, second, first)


def _check_r(r: float) -> float:
    r = float(r)
    if not r > 0 or not math.isfinite(r):
        raise RejectedInputError(f"rate must be positive and finite, got {r}")
    return r


def sc_exponent_purified(d1, d2, r: float, grid_points: int = GRID_POINTS,
                         tol: float = ORDER_TOL, workers: int = 1) -> ExponentResult:
    """Strong converse exponent for the purified distance.

    Requires supp(rho1) in supp(sigma1) or supp(rho2) in supp(sigma2).
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    r = _check_r(r)
    if not (d1.supported or d2.supported):
        raise HypothesisViolationError(
            "need supp(rho1) inside supp(sigma1) or supp(rho2) inside supp(sigma2)"
        )
    x, v, curve = maximize_order(lambda a: purified_objective(a, d1, d2, r), 0.5, 1.0,
                                 grid_points, tol, workers)
    return _result("purified", x, v, curve, d1, d2)


#: The converse lower bound is the same formula; one implementation serves both.
converse_lower_bound = sc_exponent_purified


# ---------------------------------------------------------------------------
# trace distance, pure rho2


def _petz_at(gamma: float, rho, sigma) -> float:
    if gamma <= 0.0:
        return petz_order_zero(rho, sigma).value
    return renyi_divergence("petz", gamma, rho, sigma).value


def trace_pure_objective(alpha: float, d1, d2, r: float) -> float:
    """Trace-distance objective written in the alpha parametrization."""
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if alpha == 1.0:
        return 0.0
    beta = _beta(alpha)
    second = _petz_at(2.0 - 1.0 / alpha, d2.rho, d2.sigma)
    if beta > BETA_CAP:
        first = d_max(d1.rho, d1.sigma).value
    else:
        first = renyi_divergence("sandwiched", beta, d1.rho, d1.sigma).value
    return _combine((1.0 - alpha) / alpha, r, second, first)


def trace_pure_objective_beta(beta: float, d1, d2, r: float) -> float:
    """Trace-distance objective at ``beta >= 1`` (``inf`` allowed)."""
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if beta == 1.0:
        return 0.0
    if math.isinf(beta) or beta > BETA_CAP:
        return _combine(1.0, r, _petz_at(0.0, d2.rho, d2.sigma), d_max(d1.rho, d1.sigma).value)
    second = _petz_at(1.0 / beta, d2.rho, d2.sigma)
    first = renyi_divergence("sandwiched", beta, d1.rho, d1.sigma).value
    return _combine((beta - 1.0) / beta, r, second, first)


def sc_exponent_trace_pure(d1, d2, r: float, grid_points: int = GRID_POINTS,
                           tol: float = ORDER_TOL, workers: int = 1) -> ExponentResult:
    """Trace-distance exponent when ``rho2`` is pure.

    The sup over beta >= 1 is taken in the alpha variable, alpha in [1/2, 1].
    The purified-distance exponent is computed alongside and the discrepancy is
    stored in ``details["cross_check"]``.
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    r = _check_r(r)
    if not d2.rho.is_pure:
        raise RejectedInputError("trace-distance exponent is only available for a pure rho2")
    if not (d1.supported or d2.supported):
        raise HypothesisViolationError(
            "need supp(rho1) inside supp(sigma1) or supp(rho2) inside supp(sigma2)"
        )

    def objective(alpha):
        return trace_pure_objective_beta(_beta(alpha), d1, d2, r)

    x, v, curve = maximize_order(objective, 0.5, 1.0, grid_points, tol, workers)
    out = _result("trace-pure", x, v, curve, d1, d2)
    purified = sc_exponent_purified(d1, d2, r, grid_points, tol, workers)
    gap = abs(out.value - purified.value) if math.isfinite(out.value) else 0.0
    if gap > CROSS_CHECK_TOL:
        logger.warning("trace/purified exponent mismatch %.3e exceeds %.1e", gap, CROSS_CHECK_TOL)
    out.details.update(cross_check=gap, purified_value=purified.value, beta=_beta(out.argmax_order))
    return out


# ---------------------------------------------------------------------------
# log-Euclidean quantity, alpha form


def flat_objective(alpha: float, d1, d2, r: float) -> float:
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if alpha == 1.0:
        return 0.0
    beta = _beta(alpha)
    second = renyi_divergence("log-euclidean", alpha, d2.rho, d2.sigma).value
    if beta > BETA_CAP:
        first = log_euclidean_max(d1.rho, d1.sigma).value
    else:
        first = renyi_divergence("log-euclidean", beta, d1.rho, d1.sigma).value
    return _combine((1.0 - alpha) / alpha, r, second, first)


def f_flat_alpha_form(d1, d2, r: float, grid_points: int = GRID_POINTS,
                      tol: float = ORDER_TOL, workers: int = 1) -> ExponentResult:
    """Sup over alpha of the log-Euclidean objective.

    The open interval (1/2, 1) is handled through the continuous extensions at
    its ends: the order-infinity limit at alpha = 1/2 and zero at alpha = 1.
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    r = float(r)
    if r < 0:
        raise RejectedInputError(f"rate must be nonnegative, got {r}")
    if not d1.supported:
        raise HypothesisViolationError("need supp(rho1) inside supp(sigma1)")
    x, v, curve = maximize_order(lambda a: flat_objective(a, d1, d2, r), 0.5, 1.0,
                                 grid_points, tol, workers)
    return _result("flat-alpha", x, v, curve, d1, d2)


# ---------------------------------------------------------------------------
# minimax form with Gibbs optimizers


def _gibbs(h: np.ndarray, basis: np.ndarray):
    """Return ``(log2 Tr 2^h, 2^h / Tr 2^h embedded through basis)``."""
    w, u = np.linalg.eigh(0.5 * (h + h.conj().T))
    log_z = _log2sum(w)
    c = basis @ u
    return log_z, (c * np.exp2(w - log_z)) @ c.conj().T


def minimax_inner(delta: float, d1, d2, r: float):
    """Inner infimum over (tau1, tau2) of the minimax objective at fixed delta.

    Returns ``(value, tau1, tau2)`` with the minimizing states as arrays.
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if not 0.0 <= delta <= 1.0:
        raise RejectedInputError(f"delta must lie in [0, 1], got {delta}")
    if delta == 0.0:
        return 0.0, d1.rho.matrix, d2.rho.matrix

    lam1, v1 = _spectrum(d1.rho)
    a1 = np.diag(np.log2(lam1)) - delta * _restricted_log(d1.sigma, v1)
    if delta == 1.0:
        w, u = np.linalg.eigh(0.5 * (a1 + a1.conj().T))
        top = v1 @ u[:, -1]
        part1, tau1 = -float(w[-1]), np.outer(top, top.conj())
    else:
        log_z1, tau1 = _gibbs(a1 / (1.0 - delta), v1)
        part1 = -(1.0 - delta) * log_z1

    inter = intersect_supports(support_projector(d2.rho), support_projector(d2.sigma))
    if inter.rank == 0:
        return (math.inf if r > 0 else part1), tau1, d2.rho.matrix
    w2 = inter.basis
    a2 = (_restricted_log(d2.rho, w2) + delta * _restricted_log(d2.sigma, w2)) / (1.0 + delta)
    log_z2, tau2 = _gibbs(a2, w2)
    return part1 - r * (1.0 + delta) * log_z2, tau1, tau2


def minimax_objective(tau1, tau2, delta: float, d1, d2, r: float) -> float:
    """``r D(t2||rho2) + D(t1||rho1) + delta (r D(t2||sigma2) - D(t1||sigma1))``."""
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    a = umegaki(tau2, d2.rho).value
    b = umegaki(tau1, d1.rho).value
    c = umegaki(tau2, d2.sigma).value if delta > 0 else 0.0
    e = umegaki(tau1, d1.sigma).value
    return r * a + b + delta * (r * c - e)


def f_minimax_delta_form(d1, d2, r: float, tol: float = DELTA_TOL) -> ExponentResult:
    """Sup over delta in [0, 1] of the Gibbs-solved inner infimum.

    The inner value is concave in delta, so a golden-section search over the
    whole interval finds the maximum; both endpoints are evaluated as well.
    ``details`` holds the optimizers ``tau1`` and ``tau2`` at ``delta*``.
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    r = float(r)
    if r < 0:
        raise RejectedInputError(f"rate must be nonnegative, got {r}")
    if not d1.supported:
        raise HypothesisViolationError("need supp(rho1) inside supp(sigma1)")

    def g(delta):
        return minimax_inner(delta, d1, d2, r)[0]

    (x, v), evals = _golden_max(g, 0.0, 1.0, tol)
    candidates = evals + [(0.0, 0.0), (1.0, g(1.0))]
    x, v = max(candidates, key=lambda e: e[1])
    curve = tuple(sorted(candidates, key=lambda e: e[0]))
    value, tau1, tau2 = minimax_inner(x, d1, d2, r)
    return ExponentResult(value, x, curve, first_order_rate(d1, d2).value, "minimax-delta",
                          {"tau1": tau1, "tau2": tau2})

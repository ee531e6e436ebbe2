"""Optimal finite-blocklength dichotomy transformations.

For inputs ``(rho_in, sigma_in)`` and targets ``(rho_t, sigma_t)`` the
optimization runs over channels E with ``E(sigma_in) = sigma_t`` exactly,
maximizing ``F(E(rho_in), rho_t)`` or minimizing ``d(E(rho_in), rho_t)``.

General instances are semidefinite programs over the Choi matrix. When both
dichotomies commute, the problem is classical: a column-stochastic matrix T
with ``T s1 = s2``. Tensor powers of a classical dichotomy are further reduced
to type classes, which is exact because both members of each pair are i.i.d.
and so constant on type classes.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaln

from .channels import ChoiChannel, apply_choi
from .divergences import fidelity
from .exceptions import DimensionCapError, RejectedInputError
from .exponents import Dichotomy, _as_dichotomy
from .linalg import DensityOperator, as_density, tensor_power
from .sdp import HermitianProblem, solve_sdp

logger = logging.getLogger(__name__)

#: largest dim_in * dim_out accepted by the SDP path (and by the reduced classical path)
CHOI_CAP = 4096
DEFAULT_TOL = 1e-7
COMMUTE_TOL = 1e-10
KINDS = ("purified", "trace")


@dataclass(frozen=True, eq=False)
class FiniteBlockResult:
    """Optimal error of one finite instance.

    ``representation`` says where ``channel`` acts: ``"full"`` for the
    original spaces, ``"classical"`` for the common eigenbases of the
    classical reduction, and ``"types"`` for the type-class registers of
    tensor powers.
    """

    n: int
    m: int
    distance_kind: str
    optimal_error: float
    optimal_fidelity_sq: float
    channel: ChoiChannel
    solver_gap: float
    method: str = "sdp"
    representation: str = "full"
    residuals: dict = field(default_factory=dict)

    @property
    def neg_log_fid_rate(self) -> float:
        if self.n == 0:
            return math.nan
        if self.optimal_fidelity_sq <= 0:
            return math.inf
        return -math.log2(self.optimal_fidelity_sq) / self.n


@dataclass(frozen=True)
class ClassicalInstance:
    """Probability vectors of two commuting dichotomies in common eigenbases."""

    p1: np.ndarray
    s1: np.ndarray
    p2: np.ndarray
    s2: np.ndarray
    basis1: np.ndarray
    basis2: np.ndarray


@dataclass(frozen=True)
class TransformCount:
    """Largest target count within the error budget and the search trajectory."""

    m: int
    visited: tuple
    monotone: bool
    cap: int

    def __int__(self) -> int:
        return self.m

    def __index__(self) -> int:
        return self.m


# ---------------------------------------------------------------------------
# SDP formulations


def _in_map_adjoint(a: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Adjoint of ``J -> Tr_in[(A^T (x) I) J]`` applied to ``basis``."""
    return np.kron(a.T, basis)


def _channel_constraints(prob: HermitianProblem, sigma_in: np.ndarray, sigma_t: np.ndarray,
                         d_in: int, d_out: int, j: int = 0) -> None:
    eye_out = np.eye(d_out)
    prob.add_hermitian_equality(lambda b: {j: np.kron(b, eye_out)}, np.eye(d_in))
    prob.add_hermitian_equality(lambda b: {j: _in_map_adjoint(sigma_in, b)}, sigma_t)


def _check_instance(rho_in, sigma_in, rho_t, sigma_t):
    ops = [as_density(x) for x in (rho_in, sigma_in, rho_t, sigma_t)]
    if ops[0].dim != ops[1].dim or ops[2].dim != ops[3].dim:
        raise RejectedInputError("input pair and target pair must each share a dimension")
    # sigma_t is a state, so the replacement channel X -> Tr(X) sigma_t is feasible
    assert abs(ops[3].trace - 1.0) < 1e-9
    return ops


def _residuals(channel: ChoiChannel, sigma_in, sigma_t) -> dict:
    image = apply_choi(channel, sigma_in).matrix
    return {
        "tp": channel.tp_residual,
        "sigma": float(np.linalg.norm(image - np.asarray(sigma_t))),
        "sigma_trace_norm": float(np.sum(np.abs(np.linalg.eigvalsh(image - np.asarray(sigma_t))))),
        "min_eig": float(channel.choi.eigenvalues[-1]),
    }


def solve_optimal_fidelity(rho_in, sigma_in, rho_t, sigma_t, tol: float = DEFAULT_TOL,
                           n: int = 1, m: int = 1) -> FiniteBlockResult:
    """Maximize ``F(E(rho_in), rho_t)`` over channels with ``E(sigma_in) = sigma_t``.

    Uses ``F(A, B) = max Re Tr X`` over ``[[A, X], [X^dag, B]] >= 0``. The
    fixed block B = rho_t is compressed to its support so that the program
    stays strictly feasible for low-rank targets.
    """
    r_in, s_in, r_t, s_t = _check_instance(rho_in, sigma_in, rho_t, sigma_t)
    d_in, d_out = r_in.dim, r_t.dim
    _check_cap(d_in, d_out)
    mask = r_t.eigenvalues > 0
    w, lam = r_t.eigenvectors[:, mask], r_t.eigenvalues[mask]
    k = lam.size

    prob = HermitianProblem([d_in * d_out, d_out + k])
    c = np.zeros((d_out + k, d_out + k), dtype=complex)
    c[:d_out, d_out:] = 0.5 * w
    c[d_out:, :d_out] = 0.5 * w.conj().T
    prob.objective[1] = -c
    _channel_constraints(prob, s_in.matrix, s_t.matrix, d_in, d_out)

    def top_left(b):
        g = np.zeros((d_out + k, d_out + k), dtype=complex)
        g[:d_out, :d_out] = b
        return {1: g, 0: -_in_map_adjoint(r_in.matrix, b)}

    def bottom_right(b):
        g = np.zeros((d_out + k, d_out + k), dtype=complex)
        g[d_out:, d_out:] = b
        return {1: g}

    prob.add_hermitian_equality(top_left, np.zeros((d_out, d_out)))
    prob.add_hermitian_equality(bottom_right, np.diag(lam))
    blocks, res = prob.solve(tol=tol)
    channel = ChoiChannel(d_in, d_out, blocks[0])
    f = min(max(-res.primal_objective, 0.0), 1.0)
    return FiniteBlockResult(
        n, m, "purified", math.sqrt(max(0.0, 1.0 - f * f)), f * f, channel, res.gap,
        residuals=_residuals(channel, s_in.matrix, s_t.matrix),
    )


def solve_optimal_trace(rho_in, sigma_in, rho_t, sigma_t, tol: float = DEFAULT_TOL,
                        n: int = 1, m: int = 1) -> FiniteBlockResult:
    """Minimize ``d(E(rho_in), rho_t)`` over channels with ``E(sigma_in) = sigma_t``.

    ``d = min (Tr A + Tr B)/2`` subject to ``A - B = E(rho_in) - rho_t``,
    ``A, B >= 0``.
    """
    r_in, s_in, r_t, s_t = _check_instance(rho_in, sigma_in, rho_t, sigma_t)
    d_in, d_out = r_in.dim, r_t.dim
    _check_cap(d_in, d_out)
    prob = HermitianProblem([d_in * d_out, d_out, d_out])
    prob.objective[1] = 0.5 * np.eye(d_out)
    prob.objective[2] = 0.5 * np.eye(d_out)
    _channel_constraints(prob, s_in.matrix, s_t.matrix, d_in, d_out)
    prob.add_hermitian_equality(
        lambda b: {1: b, 2: -b, 0: -_in_map_adjoint(r_in.matrix, b)}, -r_t.matrix
    )
    blocks, res = prob.solve(tol=tol)
    channel = ChoiChannel(d_in, d_out, blocks[0])
    image = apply_choi(channel, r_in.matrix).matrix
    image = image / np.trace(image).real
    err = min(max(res.primal_objective, 0.0), 1.0)
    f = fidelity(DensityOperator(_psd_part(image)), r_t)
    return FiniteBlockResult(
        n, m, "trace", err, f * f, channel, res.gap,
        residuals=_residuals(channel, s_in.matrix, s_t.matrix),
    )


def _psd_part(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.clip(w, 0.0, None)
    return (v * (w / w.sum())) @ v.conj().T


def fidelity_sdp(rho, sigma, tol: float = 1e-9) -> float:
    """Fidelity from the block SDP alone, with no channel in between.

    Both fixed blocks are compressed to their supports: with support bases
    Vr, Vs the program is ``max Re Tr(X' Vs^dag Vr)`` over
    ``[[Lr, X'], [X'^dag, Ls]] >= 0``, which keeps it strictly feasible.
    """
    r, s = as_density(rho), as_density(sigma)
    mr, ms = r.eigenvalues > 0, s.eigenvalues > 0
    vr, lr = r.eigenvectors[:, mr], r.eigenvalues[mr]
    vs, ls = s.eigenvectors[:, ms], s.eigenvalues[ms]
    kr, ks = lr.size, ls.size
    k = vs.conj().T @ vr
    size = kr + ks
    prob = HermitianProblem([size])
    c = np.zeros((size, size), dtype=complex)
    c[:kr, kr:] = 0.5 * k.conj().T
    c[kr:, :kr] = 0.5 * k
    prob.objective[0] = -c

    def block(lo, hi):
        def adjoint(b):
            g = np.zeros((size, size), dtype=complex)
            g[lo:hi, lo:hi] = b
            return {0: g}
        return adjoint

    prob.add_hermitian_equality(block(0, kr), np.diag(lr))
    prob.add_hermitian_equality(block(kr, size), np.diag(ls))
    _, res = prob.solve(tol=tol)
    return -res.primal_objective


def _check_cap(d_in: int, d_out: int, cap: int = CHOI_CAP) -> None:
    if d_in * d_out > cap:
        raise DimensionCapError(
            f"Choi space dim_in*dim_out = {d_in}*{d_out} = {d_in * d_out} exceeds cap {cap}",
            dims=(d_in, d_out),
        )


# ---------------------------------------------------------------------------
# classical fast path


def _common_basis(rho: DensityOperator, sigma: DensityOperator):
    comm = rho.matrix @ sigma.matrix - sigma.matrix @ rho.matrix
    if np.linalg.norm(comm) > COMMUTE_TOL:
        return None
    w, v = rho.eigenvalues, rho.eigenvectors
    cols, start = [], 0
    # diagonalize sigma inside each eigenspace of rho
    for i in range(1, len(w) + 1):
        if i == len(w) or abs(w[i] - w[i - 1]) > 1e-9:
            block = v[:, start:i]
            _, u = np.linalg.eigh(block.conj().T @ sigma.matrix @ block)
            cols.append(block @ u)
            start = i
    basis = np.concatenate(cols, axis=1)
    p = np.real(np.einsum("ij,ik,kj->j", basis.conj(), rho.matrix, basis))
    s = np.real(np.einsum("ij,ik,kj->j", basis.conj(), sigma.matrix, basis))
    off = basis.conj().T @ sigma.matrix @ basis - np.diag(s)
    if np.linalg.norm(off) > COMMUTE_TOL:
        return None
    return np.clip(p, 0, None), np.clip(s, 0, None), basis


def classical_reduce(d1, d2) -> ClassicalInstance | None:
    """Probability vectors if each dichotomy commutes, else ``None``."""
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    a = _common_basis(d1.rho, d1.sigma)
    b = _common_basis(d2.rho, d2.sigma)
    if a is None or b is None:
        return None
    return ClassicalInstance(a[0], a[1], b[0], b[1], a[2], b[2])


def classical_fidelity(p1, s1, p2, s2, tol: float = 1e-10, full_output: bool = False):
    """Maximize ``sum_j sqrt((T p1)_j p2_j)`` over admissible stochastic T.

    The concave program is written as a small conic problem: the coupling
    ``Q = T diag(s1)`` lives on scalar PSD blocks, and each output symbol has
    a 2 x 2 block ``[[a_j, x_j], [x_j, p2_j]] >= 0`` so that
    ``x_j <= sqrt(a_j p2_j)``. Columns with ``s1_i = 0`` are unconstrained
    stochastic columns. Returns ``(fidelity, T)``, plus the solver duality
    gap when ``full_output`` is set.
    """
    p1, s1, p2, s2 = (np.asarray(x, dtype=float) for x in (p1, s1, p2, s2))
    d_out, d_in = p2.size, p1.size
    live = np.flatnonzero(s1 > 0)
    free = np.flatnonzero(s1 <= 0)
    ratio = p1[live] / s1[live]
    rows_out = np.flatnonzero(p2 > 0)
    nq = d_out * d_in
    n_blocks = nq + rows_out.size
    # constraints: row marginals, live column sums, free column sums, a_j links, p2_j pins
    n_con = d_out + live.size + free.size + 2 * rows_out.size
    a_blocks = [np.zeros((n_con, 1, 1)) for _ in range(nq)] + \
        [np.zeros((n_con, 2, 2)) for _ in range(rows_out.size)]
    c_blocks = [np.zeros((1, 1)) for _ in range(nq)] + \
        [np.array([[0.0, -0.5], [-0.5, 0.0]]) for _ in range(rows_out.size)]
    b = np.zeros(n_con)

    def q(j, i):
        return j * d_in + i

    for j in range(d_out):
        for k, i in enumerate(live):
            a_blocks[q(j, i)][j, 0, 0] = 1.0
            a_blocks[q(j, i)][d_out + k, 0, 0] = 1.0
        for k, i in enumerate(free):
            a_blocks[q(j, i)][d_out + live.size + k, 0, 0] = 1.0
    b[:d_out] = s2
    b[d_out:d_out + live.size] = s1[live]
    b[d_out + live.size:d_out + live.size + free.size] = 1.0
    base = d_out + live.size + free.size
    for k, j in enumerate(rows_out):
        blk = nq + k
        link, pin = base + 2 * k, base + 2 * k + 1
        a_blocks[blk][link, 0, 0] = 1.0
        for kk, i in enumerate(live):
            a_blocks[q(j, i)][link, 0, 0] = -ratio[kk]
        for i in free:
            a_blocks[q(j, i)][link, 0, 0] = -p1[i]
        a_blocks[blk][pin, 1, 1] = 1.0
        b[pin] = p2[j]
    res = solve_sdp(c_blocks, a_blocks, b, tol=tol)
    coupling = np.array([res.x[k][0, 0] for k in range(nq)]).reshape(d_out, d_in)
    t = np.clip(coupling, 0.0, None)
    t[:, live] = t[:, live] / s1[live]
    t = t / t.sum(axis=0, keepdims=True)
    value = min(float(np.sum(np.sqrt(np.clip(t @ p1, 0, None) * p2))), 1.0)
    return (value, t, res.gap) if full_output else (value, t)


def classical_trace(p1, s1, p2, s2, full_output: bool = False):
    """Minimize ``||T p1 - p2||_1 / 2`` as a linear program.

    Returns ``(distance, T)``, plus the LP duality gap when ``full_output`` is set.
    """
    p1, s1, p2, s2 = (np.asarray(x, dtype=float) for x in (p1, s1, p2, s2))
    d_out, d_in = p2.size, p1.size
    nt = d_out * d_in
    # variables: T (row-major), u >= |T p1 - p2|
    cost = np.concatenate([np.zeros(nt), 0.5 * np.ones(d_out)])
    eq = np.zeros((d_in + d_out, nt + d_out))
    for i in range(d_in):
        eq[i, i:nt:d_in] = 1.0
    for j in range(d_out):
        eq[d_in + j, j * d_in:(j + 1) * d_in] = s1
    rhs = np.concatenate([np.ones(d_in), s2])
    ub = np.zeros((2 * d_out, nt + d_out))
    for j in range(d_out):
        ub[j, j * d_in:(j + 1) * d_in] = p1
        ub[d_out + j, j * d_in:(j + 1) * d_in] = -p1
        ub[j, nt + j] = ub[d_out + j, nt + j] = -1.0
    ub_rhs = np.concatenate([p2, -p2])
    res = linprog(cost, A_ub=ub, b_ub=ub_rhs, A_eq=eq, b_eq=rhs,
                  bounds=[(0, None)] * (nt + d_out), method="highs")
    if not res.success:
        raise RejectedInputError(f"classical trace-distance LP failed: {res.message}")
    t = np.clip(res.x[:nt].reshape(d_out, d_in), 0.0, None)
    t = t / t.sum(axis=0, keepdims=True)
    value = min(max(0.5 * float(np.sum(np.abs(t @ p1 - p2))), 0.0), 1.0)
    dual = float(rhs @ res.eqlin.marginals + ub_rhs @ res.ineqlin.marginals)
    return (value, t, abs(res.fun - dual)) if full_output else (value, t)


def type_distribution(p: np.ndarray, n: int) -> np.ndarray:
    """Probabilities of the type classes of n i.i.d. draws from ``p``.

    Types are listed in the order of ``itertools.combinations_with_replacement``.
    """
    p = np.asarray(p, dtype=float)
    d = p.size
    out = []
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    for combo in itertools.combinations_with_replacement(range(d), n):
        counts = np.bincount(np.asarray(combo, dtype=int), minlength=d)
        log_mult = gammaln(n + 1) - np.sum(gammaln(counts + 1))
        terms = np.where(counts > 0, counts * logp, 0.0)
        out.append(math.exp(log_mult + float(np.sum(terms))))
    return np.asarray(out)


def _classical_result(inst: ClassicalInstance, n: int, m: int, kind: str, tol: float,
                      use_types: bool) -> FiniteBlockResult:
    if use_types:
        p1, s1 = type_distribution(inst.p1, n), type_distribution(inst.s1, n)
        p2, s2 = type_distribution(inst.p2, m), type_distribution(inst.s2, m)
        representation, b_in, b_out = "types", None, None
    else:
        p1, s1, p2, s2 = inst.p1, inst.s1, inst.p2, inst.s2
        representation, b_in, b_out = "classical", inst.basis1, inst.basis2
    _check_cap(p1.size, p2.size)
    if kind == "purified":
        f, t, gap = classical_fidelity(p1, s1, p2, s2, tol=min(tol, 1e-9), full_output=True)
        err, fsq = math.sqrt(max(0.0, 1.0 - f * f)), f * f
    else:
        err, t, gap = classical_trace(p1, s1, p2, s2, full_output=True)
        a = t @ p1
        fsq = float(np.sum(np.sqrt(np.clip(a, 0, None) * p2))) ** 2
    channel = ChoiChannel.classical(t, b_in, b_out)
    sigma_in = np.diag(s1) if b_in is None else (b_in * s1) @ b_in.conj().T
    sigma_t = np.diag(s2) if b_out is None else (b_out * s2) @ b_out.conj().T
    return FiniteBlockResult(n, m, kind, err, min(fsq, 1.0), channel, gap, method="classical",
                             representation=representation,
                             residuals=_residuals(channel, sigma_in, sigma_t))


# ---------------------------------------------------------------------------
# blocklength drivers


def _target_count(n: int, r: float) -> int:
    return int(math.floor(n * r + 1e-9))


def eps_at_rate(d1, d2, r: float, n: int, kind: str = "purified", tol: float = DEFAULT_TOL,
                method: str = "auto", m: int | None = None) -> FiniteBlockResult:
    """Optimal error for n input copies and ``m = floor(n r)`` target copies.

    ``method`` is ``"auto"`` (classical fast path whenever both dichotomies
    commute), ``"classical"`` or ``"sdp"``. Pass ``m`` to override the count.
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if kind not in KINDS:
        raise RejectedInputError(f"unknown distance kind {kind!r}; expected one of {KINDS}")
    if n < 1:
        raise RejectedInputError(f"need n >= 1, got {n}")
    if m is None:
        if not r > 0:
            raise RejectedInputError(f"rate must be positive, got {r}")
        m = _target_count(n, r)
    if m == 0:
        return FiniteBlockResult(n, 0, kind, 0.0, 1.0, ChoiChannel(1, 1, np.eye(1)), 0.0,
                                 method="trivial", representation="trace-out")

    inst = classical_reduce(d1, d2) if method in ("auto", "classical") else None
    if method == "classical" and inst is None:
        raise RejectedInputError("classical fast path requested for non-commuting dichotomies")
    if inst is not None:
        return _classical_result(inst, n, m, kind, tol, use_types=(n > 1 or m > 1))

    d_in, d_out = d1.dim ** n, d2.dim ** m
    _check_cap(d_in, d_out)
    ops = [tensor_power(d1.rho.matrix, n), tensor_power(d1.sigma.matrix, n),
           tensor_power(d2.rho.matrix, m), tensor_power(d2.sigma.matrix, m)]
    solver = solve_optimal_fidelity if kind == "purified" else solve_optimal_trace
    return solver(*ops, tol=tol, n=n, m=m)


def _count_cap(d1: Dichotomy, d2: Dichotomy, n: int, classical: bool) -> int:
    """Largest m whose instance stays under the dimension cap."""
    if classical:
        size_in = math.comb(n + d1.dim - 1, d1.dim - 1)
        size_out = lambda m: math.comb(m + d2.dim - 1, d2.dim - 1)  # noqa: E731
    else:
        size_in = d1.dim ** n
        size_out = lambda m: d2.dim ** m  # noqa: E731
    if size_in > CHOI_CAP:
        raise DimensionCapError(f"input size {size_in} for n={n} already exceeds cap {CHOI_CAP}",
                                dims=(size_in,))
    m = 0
    while size_in * size_out(m + 1) <= CHOI_CAP and (d2.dim > 1 or m < CHOI_CAP):
        m += 1
    return m


def error_slack(kind: str, tol: float) -> float:
    """Resolution of a returned error given the solver tolerance.

    A fidelity gap ``tol`` near ``F = 1`` moves the purified error by up to
    ``sqrt(2 tol)``; the trace distance is linear in the gap.
    """
    return math.sqrt(2.0 * tol) if kind == "purified" else tol


def max_transform_count(d1, d2, n: int, eps: float, kind: str = "purified",
                        tol: float = DEFAULT_TOL, method: str = "auto") -> TransformCount:
    """Largest m whose optimal error is at most ``eps`` (up to :func:`error_slack`).

    Doubling then bisection over m. The error is expected to be nondecreasing
    in m; every visited point is checked and violations are logged and
    reported through ``monotone``.
    """
    d1, d2 = _as_dichotomy(d1), _as_dichotomy(d2)
    if not 0.0 <= eps <= 1.0:
        raise RejectedInputError(f"error budget must lie in [0, 1], got {eps}")
    classical = method != "sdp" and classical_reduce(d1, d2) is not None
    cap = _count_cap(d1, d2, n, classical)
    if eps >= 1.0:
        return TransformCount(cap, (), True, cap)

    visited = {0: 0.0}
    budget = eps + error_slack(kind, tol)

    def err(m):
        if m not in visited:
            visited[m] = eps_at_rate(d1, d2, 0.0, n, kind, tol, method, m=m).optimal_error
        return visited[m]

    lo, hi = 0, None
    step = max(1, n)
    while hi is None:
        probe = min(lo + step, cap)
        if err(probe) <= budget:
            lo = probe
            if probe == cap:
                break
            step *= 2
        else:
            hi = probe
    if hi is not None:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if err(mid) <= budget:
                lo = mid
            else:
                hi = mid
    trail = tuple(sorted(visited.items()))
    errors = [e for _, e in trail]
    monotone = all(b >= a - error_slack(kind, tol) for a, b in zip(errors, errors[1:]))
    if not monotone:
        logger.warning("optimal error not monotone in m along search: %s", trail)
    return TransformCount(lo, trail, monotone, cap)

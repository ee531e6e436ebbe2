"""Dense primal-dual interior-point solver for small semidefinite programs.

Standard form over a product of real symmetric PSD blocks::

    minimize   <C, X>
    subject to <A_i, X> = b_i,   X >= 0

with dual ``maximize b^T y  s.t.  sum_i y_i A_i + S = C, S >= 0``.

Search directions are HKM directions with a Mehrotra predictor-corrector and
an infeasible start. Complex Hermitian problems are written with
:class:`HermitianProblem`, which embeds each d x d Hermitian block as the
2d x 2d real symmetric matrix ``[[Re H, -Im H], [Im H, Re H]]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import RejectedInputError, SolverError

MAX_ITER = 200
STEP_FRACTION = 0.95


@dataclass
class SDPResult:
    x: list
    y: np.ndarray
    s: list
    primal_objective: float
    dual_objective: float
    iterations: int
    primal_residual: float
    dual_residual: float

    @property
    def gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective)


def _inner(a: list, b: list) -> float:
    return float(sum(np.vdot(x, y).real for x, y in zip(a, b)))


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest t with x + t dx still PSD (x positive definite)."""
    chol = np.linalg.cholesky(x)
    tmp = sla.solve_triangular(chol, dx, lower=True)
    tmp = sla.solve_triangular(chol, tmp.T, lower=True)
    lam = np.linalg.eigvalsh(_sym(tmp))[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _independent_rows(a: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    """Drop linearly dependent constraints; the dropped ones must be consistent."""
    if a.shape[0] == 0:
        return a, b
    _, r, piv = sla.qr(a.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * diag[0]))
    keep = np.sort(piv[:rank])
    a_k, b_k = a[keep], b[keep]
    coef, *_ = np.linalg.lstsq(a_k.T, a.T, rcond=None)
    if np.max(np.abs(coef.T @ b_k - b), initial=0.0) > 1e-8 * (1 + np.max(np.abs(b))):
        raise RejectedInputError("equality constraints are inconsistent")
    return a_k, b_k


def solve_sdp(c_blocks: list, a_blocks: list, b: np.ndarray, tol: float = 1e-8,
              feas_tol: float = 1e-10, max_iter: int = MAX_ITER) -> SDPResult:
    """Solve a block-diagonal standard-form SDP.

    Parameters
    ----------
    c_blocks : list of (n_k, n_k) arrays
        Objective matrix, one symmetric block per cone.
    a_blocks : list of (m, n_k, n_k) arrays
        Constraint matrices, stacked per block.
    b : (m,) array
    tol : float
        Target absolute duality gap.
    feas_tol : float
        Target relative primal and dual infeasibility.
    """
    c_blocks = [np.asarray(c, dtype=float) for c in c_blocks]
    sizes = [c.shape[0] for c in c_blocks]
    b = np.asarray(b, dtype=float)
    m = b.size
    flat = np.concatenate([np.asarray(a, dtype=float).reshape(m, -1) for a in a_blocks], axis=1)
    flat, b = _independent_rows(flat, b)
    m = b.size
    a_blocks, start = [], 0
    for n in sizes:
        a_blocks.append(flat[:, start:start + n * n].reshape(m, n, n))
        start += n * n

    def op_a(xs):
        return sum(a.reshape(m, -1) @ x.ravel() for a, x in zip(a_blocks, xs))

    def op_at(y):
        return [np.tensordot(y, a, axes=1) for a in a_blocks]

    total = sum(sizes)
    norm_b = np.linalg.norm(b)
    norm_c = math.sqrt(_inner(c_blocks, c_blocks))
    a_norms = np.linalg.norm(flat, axis=1)
    xi = max(10.0, math.sqrt(max(sizes)), float(np.max((1 + np.abs(b)) / (1 + a_norms))))
    eta = max(10.0, math.sqrt(max(sizes)), norm_c, float(np.max(a_norms)))
    xs = [xi * np.eye(n) for n in sizes]
    ss = [eta * np.eye(n) for n in sizes]
    y = np.zeros(m)
    best = None

    for it in range(1, max_iter + 1):
        rp = b - op_a(xs)
        rd = [c - s - aty for c, s, aty in zip(c_blocks, ss, op_at(y))]
        pobj, dobj = _inner(c_blocks, xs), float(b @ y)
        pres = np.linalg.norm(rp) / (1 + norm_b)
        dres = math.sqrt(_inner(rd, rd)) / (1 + norm_c)
        current = SDPResult(xs, y, ss, pobj, dobj, it, pres, dres)
        if pres <= feas_tol and dres <= feas_tol:
            if best is None or current.gap < best.gap:
                best = current
            if current.gap <= tol:
                return current
        mu = _inner(xs, ss) / total
        try:
            xs, ss, y = _step(xs, ss, y, rp, rd, mu, total, a_blocks, m, op_a, op_at)
        except np.linalg.LinAlgError:
            # iterates became numerically singular; accept the best point if it is good enough
            break

    if best is not None and best.gap <= tol:
        return best
    raise SolverError(
        f"interior-point method stopped after {it} iterations without reaching gap {tol:.1e}",
        primal=None if best is None else best.primal_objective,
        dual=None if best is None else best.dual_objective,
        iterations=it,
    )


def _step(xs, ss, y, rp, rd, mu, total, a_blocks, m, op_a, op_at):
    """One Mehrotra predictor-corrector step with HKM directions."""
    s_inv = [np.linalg.inv(s) for s in ss]
    s_inv = [_sym(si) for si in s_inv]
    schur = np.zeros((m, m))
    for a, x, si in zip(a_blocks, xs, s_inv):
        t = np.matmul(np.matmul(x, a), si)
        schur += a.reshape(m, -1) @ t.reshape(m, -1).T
    schur = _sym(schur)
    try:
        factor = sla.cho_factor(schur)
        solve = lambda rhs: sla.cho_solve(factor, rhs)  # noqa: E731
    except np.linalg.LinAlgError:
        solve = lambda rhs: np.linalg.lstsq(schur, rhs, rcond=None)[0]  # noqa: E731

    x_rd_si = [x @ r @ si for x, r, si in zip(xs, rd, s_inv)]

    def direction(r_si):
        # r_si is R S^-1 for the complementarity target R
        rhs = rp - op_a(r_si) + op_a(x_rd_si)
        dy = solve(rhs)
        ds = [r - aty for r, aty in zip(rd, op_at(dy))]
        dx = [_sym(q - x @ d @ si) for q, x, d, si in zip(r_si, xs, ds, s_inv)]
        return dx, dy, ds

    def steps(dx, ds):
        ap = min(1.0, min(_max_step(x, d) for x, d in zip(xs, dx)))
        ad = min(1.0, min(_max_step(s, d) for s, d in zip(ss, ds)))
        return ap, ad

    dx_a, dy_a, ds_a = direction([-x for x in xs])
    ap, ad = steps(dx_a, ds_a)
    mu_aff = _inner([x + ap * d for x, d in zip(xs, dx_a)],
                    [s + ad * d for s, d in zip(ss, ds_a)]) / total
    sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

    target = [sigma * mu * si - x - dxa @ dsa @ si
              for si, x, dxa, dsa in zip(s_inv, xs, dx_a, ds_a)]
    dx, dy, ds = direction(target)
    ap, ad = steps(dx, ds)
    ap, ad = min(1.0, STEP_FRACTION * ap), min(1.0, STEP_FRACTION * ad)
    xs = [x + ap * d for x, d in zip(xs, dx)]
    ss = [s + ad * d for s, d in zip(ss, ds)]
    y = y + ad * dy
    return xs, ss, y


# ---------------------------------------------------------------------------
# complex Hermitian modeling layer


def embed(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed(y: np.ndarray) -> np.ndarray:
    n = y.shape[0] // 2
    re = 0.5 * (y[:n, :n] + y[n:, n:])
    im = 0.5 * (y[n:, :n] - y[:n, n:])
    h = re + 1j * im
    return 0.5 * (h + h.conj().T)


def hermitian_basis(d: int) -> list:
    """Orthonormal basis of d x d Hermitian matrices (Hilbert-Schmidt product)."""
    out = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        out.append(e)
    s = 1.0 / math.sqrt(2.0)
    for k in range(d):
        for l in range(k + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = e[l, k] = s
            out.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[k, l], e[l, k] = -1j * s, 1j * s
            out.append(e)
    return out


@dataclass
class HermitianProblem:
    """Builder for ``minimize Re sum_k Tr(C_k X_k)`` over Hermitian PSD blocks.

    Constraints are real linear: ``Re sum_k Tr(G_k X_k) = rhs``.
    """

    sizes: list
    objective: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def add_constraint(self, terms: dict, rhs: float) -> None:
        self.rows.append((terms, float(rhs)))

    def add_hermitian_equality(self, adjoint, target: np.ndarray) -> None:
        """Impose the Hermitian-valued constraint ``L(X) = target``.

        ``adjoint(B)`` must return ``{block: G}`` with ``Re Tr(B L(X)) = Re sum Tr(G X)``.
        """
        target = np.asarray(target, dtype=complex)
        for basis in hermitian_basis(target.shape[0]):
            self.add_constraint(adjoint(basis), np.trace(basis @ target).real)

    def solve(self, tol: float = 1e-8, feas_tol: float = 1e-10, max_iter: int = MAX_ITER):
        """Solve and return ``(hermitian_blocks, SDPResult)``."""
        real_sizes = [2 * n for n in self.sizes]
        c_blocks = [np.zeros((n, n)) for n in real_sizes]
        for k, g in self.objective.items():
            c_blocks[k] = 0.5 * embed(g)
        m = len(self.rows)
        a_blocks = [np.zeros((m, n, n)) for n in real_sizes]
        b = np.zeros(m)
        for i, (terms, rhs) in enumerate(self.rows):
            for k, g in terms.items():
                a_blocks[k][i] = 0.5 * embed(g)
            b[i] = rhs
        # the embedding doubles traces; halving the data keeps objective values unchanged
        res = solve_sdp(c_blocks, a_blocks, b, tol=tol, feas_tol=feas_tol, max_iter=max_iter)
        return [unembed(x) for x in res.x], res

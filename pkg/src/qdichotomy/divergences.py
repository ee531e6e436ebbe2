"""Fidelity, distances, Rényi divergences and relative entropies.

Every quantity is in bits. Divergences return :class:`DivergenceValue`, whose
``value`` may be ``+inf`` when the support condition of the divergence fails.
Traces of matrix powers are accumulated in log space so that large orders do
not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import RejectedInputError
from .linalg import (
    RANK_TOL,
    DensityOperator,
    HermitianOperator,
    as_density,
    as_hermitian,
    graded_log_singular_values,
    intersect_supports,
    support_mask,
    support_projector,
)

KINDS = ("sandwiched", "petz", "log-euclidean")
#: orders closer than this to 1 are evaluated as the Umegaki relative entropy
NEAR_ONE = 1e-4
#: spectral-norm leakage allowed when testing support containment
SUPPORT_TOL = 1e-8
#: singular values of eigenbasis overlaps below this count as zero
OVERLAP_TOL = 1e-12
#: dynamic range of the sigma power beyond which the graded SVD is used
GRADING_LIMIT = 1e4

Order = Union[float, str]


@dataclass(frozen=True)
class DivergenceValue:
    """Extended-real divergence value.

    ``near_one`` flags an order within :data:`NEAR_ONE` of 1 that was
    evaluated as the Umegaki relative entropy instead of the Rényi quotient.
    """

    value: float
    kind: str
    order: Order
    near_one: bool = False

    def __float__(self) -> float:
        return self.value

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


def _state(rho) -> DensityOperator:
    return as_density(rho)


def _psd(sigma) -> HermitianOperator:
    op = as_hermitian(sigma)
    if not op.is_psd():
        raise RejectedInputError("second argument must be positive semidefinite")
    return op


def _check_dims(a: HermitianOperator, b: HermitianOperator) -> None:
    if a.dim != b.dim:
        raise RejectedInputError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _spectrum(op: HermitianOperator, tol: float = RANK_TOL):
    """Positive eigenvalues and their eigenvectors."""
    mask = support_mask(op.eigenvalues, tol)
    return op.eigenvalues[mask], op.eigenvectors[:, mask]


def _log2sum(x: np.ndarray) -> float:
    x = np.ravel(x)
    if x.size == 0:
        return -math.inf
    return float(np.logaddexp2.reduce(x))


def support_contained(rho, sigma, tol: float = SUPPORT_TOL) -> bool:
    """True when supp(rho) lies inside supp(sigma)."""
    a, b = as_hermitian(rho), as_hermitian(sigma)
    _check_dims(a, b)
    _, vr = _spectrum(a)
    _, vs = _spectrum(b)
    if vr.shape[1] == 0:
        return True
    leak = vr - vs @ (vs.conj().T @ vr)
    return bool(np.linalg.norm(leak, 2) <= tol)


def supports_orthogonal(rho, sigma, tol: float = SUPPORT_TOL) -> bool:
    a, b = as_hermitian(rho), as_hermitian(sigma)
    _check_dims(a, b)
    _, vr = _spectrum(a)
    _, vs = _spectrum(b)
    if vr.shape[1] == 0 or vs.shape[1] == 0:
        return True
    return bool(np.linalg.norm(vs.conj().T @ vr, 2) <= tol)


# ---------------------------------------------------------------------------
# fidelity and distances


def fidelity(rho, sigma) -> float:
    """``|| sqrt(rho) sqrt(sigma) ||_1`` as a sum of singular values."""
    r, s = _state(rho), _state(sigma)
    _check_dims(r, s)
    lr, vr = _spectrum(r)
    ls, vs = _spectrum(s)
    core = (np.sqrt(lr)[:, None] * (vr.conj().T @ vs)) * np.sqrt(ls)[None, :]
    f = float(np.sum(np.linalg.svd(core, compute_uv=False)))
    return min(f, 1.0)


def trace_distance(rho, sigma) -> float:
    r, s = _state(rho), _state(sigma)
    _check_dims(r, s)
    return min(0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(r.matrix - s.matrix)))), 1.0)


def purified_distance(rho, sigma) -> float:
    return math.sqrt(max(0.0, 1.0 - fidelity(rho, sigma) ** 2))


# ---------------------------------------------------------------------------
# log-trace kernels; each returns log2 Q for valid supports


def _log_q_sandwiched(alpha: float, rho: HermitianOperator, sigma: HermitianOperator) -> float:
    lr, vr = _spectrum(rho)
    ls, vs = _spectrum(sigma)
    s = (1.0 - alpha) / (2.0 * alpha)
    overlap = vs.conj().T @ vr
    rank = int(np.sum(np.linalg.svd(overlap, compute_uv=False) > OVERLAP_TOL))
    if rank == 0:
        return -math.inf
    # nonzero spectrum of sigma^s rho sigma^s = squared singular values of
    # B = diag(ls^s) overlap diag(sqrt lr); B^dagger carries the sigma power as column scaling
    log_scale = s * np.log2(ls)
    x = np.sqrt(lr)[:, None] * overlap.conj().T
    if np.ptp(log_scale) > math.log2(GRADING_LIMIT):
        log_sv = graded_log_singular_values(x, log_scale)[:rank]
    else:
        with np.errstate(divide="ignore"):
            log_sv = np.log2(np.linalg.svd(x * np.exp2(log_scale)[None, :], compute_uv=False)[:rank])
    return _log2sum(2.0 * alpha * log_sv)


def _log_q_petz(alpha: float, rho: HermitianOperator, sigma: HermitianOperator) -> float:
    lr, vr = _spectrum(rho)
    ls, vs = _spectrum(sigma)
    overlap = np.abs(vr.conj().T @ vs) ** 2
    with np.errstate(divide="ignore"):
        terms = (alpha * np.log2(lr))[:, None] + ((1.0 - alpha) * np.log2(ls))[None, :] + np.log2(overlap)
    return _log2sum(terms)


def _restricted_log(op: HermitianOperator, basis: np.ndarray) -> np.ndarray:
    """Compression of log2(op) (taken on its support) onto span(basis)."""
    lam, v = _spectrum(op)
    c = basis.conj().T @ v
    return (c * np.log2(lam)) @ c.conj().T


def _log_q_flat(alpha: float, rho: HermitianOperator, sigma: HermitianOperator) -> float:
    inter = intersect_supports(support_projector(rho), support_projector(sigma))
    if inter.rank == 0:
        return -math.inf
    w = inter.basis
    h = alpha * _restricted_log(rho, w) + (1.0 - alpha) * _restricted_log(sigma, w)
    return _log2sum(np.linalg.eigvalsh(0.5 * (h + h.conj().T)))


_KERNELS = {
    "sandwiched": _log_q_sandwiched,
    "petz": _log_q_petz,
    "log-euclidean": _log_q_flat,
}


def log_quasi(kind: str, alpha: float, rho, sigma) -> float:
    """log2 of the trace functional Q of the given family (no support checks)."""
    return _KERNELS[kind](alpha, as_hermitian(rho), as_hermitian(sigma))


def _support_ok(kind: str, alpha: float, rho, sigma) -> bool:
    if alpha > 1:
        return support_contained(rho, sigma)
    if kind == "log-euclidean":
        return intersect_supports(support_projector(rho), support_projector(sigma)).rank > 0
    return not supports_orthogonal(rho, sigma)


def renyi_divergence(kind: str, alpha: float, rho, sigma) -> DivergenceValue:
    """Sandwiched, Petz or log-Euclidean Rényi divergence of order ``alpha``.

    Raises :class:`RejectedInputError` for ``alpha <= 0`` or ``alpha == 1``;
    use :func:`umegaki` for order one.
    """
    if kind not in KINDS:
        raise RejectedInputError(f"unknown divergence kind {kind!r}; expected one of {KINDS}")
    alpha = float(alpha)
    if not alpha > 0 or alpha == 1.0 or not math.isfinite(alpha):
        raise RejectedInputError(f"order must be positive, finite and != 1, got {alpha}")
    r, s = _state(rho), _psd(sigma)
    _check_dims(r, s)
    if abs(alpha - 1.0) < NEAR_ONE:
        return DivergenceValue(umegaki(r, s).value, kind, alpha, near_one=True)
    if not _support_ok(kind, alpha, r, s):
        return DivergenceValue(math.inf, kind, alpha)
    log_q = _KERNELS[kind](alpha, r, s)
    if log_q == -math.inf:
        return DivergenceValue(math.inf, kind, alpha)
    return DivergenceValue(log_q / (alpha - 1.0), kind, alpha)


def sandwiched(alpha: float, rho, sigma) -> float:
    return renyi_divergence("sandwiched", alpha, rho, sigma).value


def petz(alpha: float, rho, sigma) -> float:
    return renyi_divergence("petz", alpha, rho, sigma).value


def log_euclidean(alpha: float, rho, sigma) -> float:
    return renyi_divergence("log-euclidean", alpha, rho, sigma).value


def umegaki(rho, sigma) -> DivergenceValue:
    """``Tr rho (log rho - log sigma)``, or ``+inf`` unless supp(rho) is inside supp(sigma)."""
    r, s = _state(rho), _psd(sigma)
    _check_dims(r, s)
    if not support_contained(r, s):
        return DivergenceValue(math.inf, "umegaki", "limit-1")
    lr, vr = _spectrum(r)
    ls, vs = _spectrum(s)
    overlap = np.abs(vr.conj().T @ vs) ** 2
    cross = float(lr @ overlap @ np.log2(ls))
    return DivergenceValue(float(lr @ np.log2(lr)) - cross, "umegaki", "limit-1")


def d_max(rho, sigma) -> DivergenceValue:
    """``log2 lambda_max(sigma^-1/2 rho sigma^-1/2)`` on supp(sigma)."""
    r, s = _state(rho), _psd(sigma)
    _check_dims(r, s)
    if not support_contained(r, s):
        return DivergenceValue(math.inf, "max", "limit-infinity")
    lr, vr = _spectrum(r)
    ls, vs = _spectrum(s)
    b = (ls ** -0.5)[:, None] * (vs.conj().T @ vr) * np.sqrt(lr)[None, :]
    top = np.linalg.norm(b, 2) ** 2
    return DivergenceValue(float(np.log2(top)), "max", "limit-infinity")


def log_euclidean_max(rho, sigma) -> DivergenceValue:
    """Order-infinity limit of the log-Euclidean divergence.

    Equals the largest eigenvalue of ``log rho - log sigma`` compressed to
    supp(rho).
    """
    r, s = _state(rho), _psd(sigma)
    _check_dims(r, s)
    if not support_contained(r, s):
        return DivergenceValue(math.inf, "log-euclidean", "limit-infinity")
    lr, vr = _spectrum(r)
    h = np.diag(np.log2(lr)) - _restricted_log(s, vr)
    return DivergenceValue(float(np.linalg.eigvalsh(0.5 * (h + h.conj().T))[-1]),
                           "log-euclidean", "limit-infinity")


def petz_order_zero(rho, sigma) -> DivergenceValue:
    """Order-zero limit of the Petz divergence, ``-log2 Tr(Pi_rho sigma)``."""
    r, s = _state(rho), _psd(sigma)
    _check_dims(r, s)
    _, vr = _spectrum(r)
    overlap = float(np.real(np.trace(vr.conj().T @ s.matrix @ vr)))
    if overlap <= 0 or supports_orthogonal(r, s):
        return DivergenceValue(math.inf, "petz", 0.0)
    return DivergenceValue(-math.log2(overlap), "petz", 0.0)


def von_neumann_entropy(rho) -> float:
    lam, _ = _spectrum(_state(rho))
    return max(0.0, -float(lam @ np.log2(lam)))

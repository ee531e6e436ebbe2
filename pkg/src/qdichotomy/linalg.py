"""Dense Hermitian linear algebra.

Operators are stored as immutable dense complex matrices with their spectral
decomposition computed once at construction. All logarithms and exponentials
are base 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import RejectedInputError, SingularOperatorError

#: support membership threshold, relative to the largest |eigenvalue|
RANK_TOL = 1e-12
#: allowed relative Frobenius deviation from Hermiticity
HERMITIAN_TOL = 1e-12
#: relative eigenvalue gap below which eigenvalues are merged by pinching
DEGENERACY_TOL = 1e-9
#: trace tolerance for density operators
TRACE_TOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Complex Hermitian matrix with a cached spectral decomposition.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors`` holds
    the matching orthonormal columns.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise RejectedInputError(f"expected a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise RejectedInputError("matrix has non-finite entries")
        norm = np.linalg.norm(m)
        skew = np.linalg.norm(m - m.conj().T)
        if skew > HERMITIAN_TOL * max(norm, 1e-300):
            raise RejectedInputError(
                f"matrix is not Hermitian (relative deviation {skew / norm:.3e})"
            )
        m = 0.5 * (m + m.conj().T)
        w, v = np.linalg.eigh(m)
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "eigenvalues", _readonly(w[::-1].copy()))
        object.__setattr__(self, "eigenvectors", _readonly(v[:, ::-1].copy()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    def support(self, tol: float = RANK_TOL) -> "SupportProjector":
        return support_projector(self, tol)

    def is_psd(self, tol: float = RANK_TOL) -> bool:
        scale = max(np.max(np.abs(self.eigenvalues)), 1e-300)
        return bool(self.eigenvalues[-1] >= -tol * scale)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DensityOperator(HermitianOperator):
    """Positive semidefinite, unit-trace operator.

    Eigenvalues within ``rank_tolerance * lambda_max`` of zero (including small
    negative ones) are clamped to exactly zero on construction.
    """

    rank_tolerance: float = RANK_TOL

    def __post_init__(self):
        super().__post_init__()
        w = self.eigenvalues
        lam_max = w[0]
        if lam_max <= 0:
            raise RejectedInputError("density operator must have a positive eigenvalue")
        cut = self.rank_tolerance * lam_max
        if w[-1] < -cut:
            raise RejectedInputError(
                f"operator is not positive semidefinite (min eigenvalue {w[-1]:.3e})"
            )
        small = np.abs(w) <= cut
        if np.any(small):
            w = np.where(small, 0.0, w)
            v = self.eigenvectors
            object.__setattr__(self, "matrix", _readonly((v * w) @ v.conj().T))
            object.__setattr__(self, "eigenvalues", _readonly(w))
        tr = float(np.sum(w))
        if abs(tr - 1.0) > TRACE_TOL:
            raise RejectedInputError(f"density operator must have unit trace, got {tr!r}")

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))

    @property
    def is_pure(self) -> bool:
        return self.rank == 1


@dataclass(frozen=True, eq=False)
class SupportProjector:
    """Orthogonal projector onto a subspace, with an orthonormal basis of it."""

    projector: HermitianOperator
    rank: int
    basis: np.ndarray = field(repr=False)

    def contains(self, other: "SupportProjector", tol: float = 1e-8) -> bool:
        """True when ``other``'s subspace lies inside this one."""
        if other.rank == 0:
            return True
        leak = other.basis - self.projector.matrix @ other.basis
        return bool(np.linalg.norm(leak, 2) <= tol)

    def orthogonal_to(self, other: "SupportProjector", tol: float = 1e-8) -> bool:
        if self.rank == 0 or other.rank == 0:
            return True
        return bool(np.linalg.norm(self.basis.conj().T @ other.basis, 2) <= tol)


@dataclass(frozen=True, eq=False)
class PinchingMap:
    """Dephasing into the eigenspaces of a reference operator.

    ``v`` is the number of distinct eigenvalues of the reference operator.
    """

    projectors: tuple
    v: int

    @property
    def dim(self) -> int:
        return self.projectors[0].projector.dim

    def __call__(self, x):
        return apply_pinching(self, x)


def as_hermitian(x) -> HermitianOperator:
    if isinstance(x, HermitianOperator):
        return x
    return HermitianOperator(np.asarray(x))


def as_density(x, rank_tolerance: float = RANK_TOL) -> DensityOperator:
    if isinstance(x, DensityOperator):
        return x
    if isinstance(x, HermitianOperator):
        x = x.matrix
    return DensityOperator(np.asarray(x), rank_tolerance=rank_tolerance)


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and unitary eigenvector matrix of ``h``."""
    op = as_hermitian(h)
    return op.eigenvalues, op.eigenvectors


def from_spectrum(eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> np.ndarray:
    """Recompose ``V diag(w) V^dagger`` as a plain array."""
    return (eigenvectors * eigenvalues) @ eigenvectors.conj().T


def support_mask(eigenvalues: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    scale = np.max(np.abs(eigenvalues)) if eigenvalues.size else 0.0
    if scale == 0.0:
        return np.zeros(eigenvalues.shape, dtype=bool)
    return eigenvalues > tol * scale


def graded_log_singular_values(x, log_scale, tol: float = 1e-15, max_sweeps: int = 80) -> np.ndarray:
    """log2 singular values (descending) of ``x @ diag(2**log_scale)``.

    One-sided Jacobi on columns stored as unit vectors times ``2**e``. This
    gives high relative accuracy when x is well conditioned, whatever the
    dynamic range of the scaling, and never forms the scaled matrix, so
    column norms far outside floating-point range are handled.
    Zero columns give ``-inf``.
    """
    a = np.array(x, dtype=complex)
    norms = np.linalg.norm(a, axis=0)
    live = norms > 0
    a[:, live] /= norms[live]
    with np.errstate(divide="ignore"):
        e = np.where(live, np.log2(np.where(live, norms, 1.0)) + np.asarray(log_scale, dtype=float), -np.inf)
    n = a.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                if not (np.isfinite(e[i]) and np.isfinite(e[j])):
                    continue
                p, q = (i, j) if e[i] >= e[j] else (j, i)
                gamma = np.vdot(a[:, p], a[:, q])
                g = abs(gamma)
                if g <= tol:
                    continue
                rotated = True
                phase = gamma / g
                aq = a[:, q] * np.conj(phase)
                # norm ratio x <= 1; tangent of the rotation written without 1/x
                xr = 2.0 ** (e[q] - e[p])
                u = 1.0 - xr * xr
                denom = u + math.sqrt(u * u + 4.0 * g * g * xr * xr)
                c = 1.0 / math.sqrt(1.0 + (2.0 * g * xr / denom) ** 2)
                s_x = -c * 2.0 * g * xr * xr / denom   # sin * x
                s_over_x = -c * 2.0 * g / denom         # sin / x
                new_p = c * a[:, p] - s_x * aq
                new_q = (s_over_x * a[:, p] + c * aq) * phase
                for k, v in ((p, new_p), (q, new_q)):
                    nv = np.linalg.norm(v)
                    if nv == 0.0:
                        a[:, k], e[k] = 0.0, -np.inf
                    else:
                        a[:, k] = v / nv
                        e[k] = e[k] + math.log2(nv)
        if not rotated:
            break
    return np.sort(e)[::-1]


def support_projector(a, tol: float = RANK_TOL) -> SupportProjector:
    op = as_hermitian(a)
    mask = support_mask(op.eigenvalues, tol)
    basis = op.eigenvectors[:, mask]
    return SupportProjector(HermitianOperator(basis @ basis.conj().T), int(mask.sum()), basis)


def intersect_supports(p: SupportProjector, q: SupportProjector, tol: float = 1e-8) -> SupportProjector:
    """Projector onto range(P) and range(Q).

    Vectors in the intersection are exactly the eigenvectors of P Q P with
    eigenvalue one.
    """
    d = p.projector.dim
    if p.rank == 0 or q.rank == 0:
        return SupportProjector(HermitianOperator(np.zeros((d, d))), 0, np.zeros((d, 0), dtype=complex))
    # compress Q to range(P): eigenvalues of B^dag Q B are the squared cosines
    b = p.basis
    w, v = np.linalg.eigh(b.conj().T @ q.projector.matrix @ b)
    keep = w >= 1.0 - tol
    basis = b @ v[:, keep]
    return SupportProjector(HermitianOperator(basis @ basis.conj().T), int(keep.sum()), basis)


_FUNCS = ("power", "log", "exp")


def spectral_transform(a, func: str, power: float | None = None, on_support: bool = False,
                       tol: float = RANK_TOL) -> HermitianOperator:
    """Apply a scalar function to the spectrum of ``a``.

    Parameters
    ----------
    func : {"power", "log", "exp"}
        ``power`` needs the exponent ``power``; ``log`` and ``exp`` are base 2.
    on_support : bool
        For ``log`` and negative powers, act only on the support and map the
        kernel to zero. Without it a singular input raises
        :class:`SingularOperatorError`.

    Eigenvalues of magnitude below ``tol * max|eigenvalue|`` count as zero, and
    ``0 ** p`` is taken to be zero for every ``p``.
    """
    if func not in _FUNCS:
        raise RejectedInputError(f"unknown spectral function {func!r}; expected one of {_FUNCS}")
    op = as_hermitian(a)
    w, v = op.eigenvalues, op.eigenvectors
    if func == "exp":
        return HermitianOperator(from_spectrum(np.exp2(w), v))

    scale = max(np.max(np.abs(w)), 1e-300)
    zero = np.abs(w) <= tol * scale
    negative = (w < 0) & ~zero
    if func == "power":
        if power is None:
            raise RejectedInputError("power transform needs an exponent")
        if np.any(negative) and float(power) != int(power):
            raise RejectedInputError("fractional power of an operator with negative eigenvalues")
        if power < 0 and np.any(zero) and not on_support:
            raise SingularOperatorError("negative power of a singular operator; pass on_support=True")
        safe = np.where(zero, 1.0, w)
        mapped = safe ** int(power) if np.any(negative) else safe ** power
        out = np.where(zero, 0.0, mapped)
    else:
        if np.any(negative):
            raise RejectedInputError("logarithm of an operator with negative eigenvalues")
        if np.any(zero) and not on_support:
            raise SingularOperatorError("logarithm of a singular operator; pass on_support=True")
        out = np.where(zero, 0.0, np.log2(np.where(zero, 1.0, w)))
    return HermitianOperator(from_spectrum(out, v))


def tensor(a, b) -> HermitianOperator:
    """Kronecker product of two Hermitian operators."""
    return HermitianOperator(np.kron(np.asarray(a), np.asarray(b)))


def tensor_power(a, n: int) -> np.ndarray:
    """n-fold Kronecker power as a plain array (``n = 0`` gives ``[[1]]``)."""
    out = np.ones((1, 1), dtype=complex)
    m = np.asarray(a)
    for _ in range(n):
        out = np.kron(out, m)
    return out


def partial_trace(x, dims: Sequence[int], keep: Iterable[int]) -> HermitianOperator:
    """Trace out every tensor factor not listed in ``keep``.

    Kept factors appear in increasing index order in the result.
    """
    m = np.asarray(x)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise RejectedInputError(f"factor dims {dims} do not match operator shape {m.shape}")
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise RejectedInputError(f"keep indices {keep} out of range for {n} factors")
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out = keep + [n + k for k in keep]
    reduced = np.einsum(m.reshape(dims + dims), row + col, out)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return HermitianOperator(reduced.reshape(d, d))


def pinching_map(a, degeneracy_tolerance: float = DEGENERACY_TOL) -> PinchingMap:
    """Spectral projectors of ``a`` with near-degenerate eigenvalues merged.

    Consecutive (sorted) eigenvalues whose gap is at most
    ``degeneracy_tolerance`` times the spectral range share a projector.
    """
    op = as_hermitian(a)
    w, v = op.eigenvalues, op.eigenvectors
    spread = w[0] - w[-1]
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i - 1] - w[i] <= degeneracy_tolerance * spread:
            groups[-1].append(i)
        else:
            groups.append([i])
    projectors = []
    for g in groups:
        basis = v[:, g]
        projectors.append(SupportProjector(HermitianOperator(basis @ basis.conj().T), len(g), basis))
    return PinchingMap(tuple(projectors), len(projectors))


def apply_pinching(pinch: PinchingMap, x) -> HermitianOperator:
    m = np.asarray(x)
    if m.shape != (pinch.dim, pinch.dim):
        raise RejectedInputError(f"operator shape {m.shape} does not match pinching dim {pinch.dim}")
    out = np.zeros_like(m, dtype=complex)
    for p in pinch.projectors:
        b = p.basis
        out += b @ (b.conj().T @ m @ b) @ b.conj().T
    return HermitianOperator(out)

"""Choi-matrix representation of quantum channels.

The Choi matrix uses the input factor first::

    J = sum_ij |i><j| (x) N(|i><j|),      N(A) = Tr_in[(A^T (x) I) J].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import RejectedInputError
from .linalg import HermitianOperator, as_hermitian, partial_trace

PSD_TOL = 1e-8
TP_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class ChoiChannel:
    """CPTP map stored as its Choi matrix on the (in x out) space."""

    dim_in: int
    dim_out: int
    choi: HermitianOperator

    def __post_init__(self):
        choi = as_hermitian(self.choi)
        object.__setattr__(self, "choi", choi)
        if choi.dim != self.dim_in * self.dim_out:
            raise RejectedInputError(
                f"Choi matrix dim {choi.dim} != dim_in*dim_out = {self.dim_in * self.dim_out}"
            )
        if choi.eigenvalues[-1] < -PSD_TOL:
            raise RejectedInputError(
                f"Choi matrix not positive semidefinite (min eigenvalue {choi.eigenvalues[-1]:.3e})"
            )
        if self.tp_residual > TP_TOL:
            raise RejectedInputError(f"map is not trace preserving (residual {self.tp_residual:.3e})")

    @property
    def tp_residual(self) -> float:
        reduced = partial_trace(self.choi.matrix, [self.dim_in, self.dim_out], [0]).matrix
        return float(np.linalg.norm(reduced - np.eye(self.dim_in)))

    def __call__(self, a):
        return apply_choi(self, a)

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray]) -> "ChoiChannel":
        return choi_from_kraus(kraus)

    @classmethod
    def identity(cls, dim: int) -> "ChoiChannel":
        omega = np.eye(dim, dtype=complex).reshape(-1)
        return cls(dim, dim, HermitianOperator(np.outer(omega, omega.conj())))

    @classmethod
    def replacement(cls, dim_in: int, state) -> "ChoiChannel":
        """X -> Tr(X) * state."""
        s = np.asarray(state, dtype=complex)
        return cls(dim_in, s.shape[0], HermitianOperator(np.kron(np.eye(dim_in), s)))

    @classmethod
    def classical(cls, transition: np.ndarray, basis_in: np.ndarray | None = None,
                  basis_out: np.ndarray | None = None) -> "ChoiChannel":
        """Measure in ``basis_in``, apply a column-stochastic matrix, prepare in ``basis_out``.

        ``transition[j, i]`` is the probability of output j given input i.
        """
        t = np.asarray(transition, dtype=float)
        d_out, d_in = t.shape
        u = np.eye(d_in) if basis_in is None else np.asarray(basis_in)
        w = np.eye(d_out) if basis_out is None else np.asarray(basis_out)
        choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for i in range(d_in):
            vi = u[:, i].conj()
            pin = np.outer(vi, vi.conj())
            out = (w * t[:, i]) @ w.conj().T
            choi += np.kron(pin, out)
        return cls(d_in, d_out, HermitianOperator(choi))


def apply_choi(channel: ChoiChannel, a) -> HermitianOperator:
    """Image of ``a`` under the channel, ``Tr_in[(A^T (x) I) J]``."""
    m = np.asarray(a)
    if m.shape != (channel.dim_in, channel.dim_in):
        raise RejectedInputError(
            f"operator shape {m.shape} does not match channel input dim {channel.dim_in}"
        )
    j = channel.choi.matrix.reshape(channel.dim_in, channel.dim_out, channel.dim_in, channel.dim_out)
    return HermitianOperator(np.einsum("ij,iajb->ab", m, j))


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> ChoiChannel:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d_out, d_in = kraus[0].shape
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        x = k.T.reshape(-1)
        choi += np.outer(x, x.conj())
    return ChoiChannel(d_in, d_out, HermitianOperator(choi))


def apply_kraus(kraus: Sequence[np.ndarray], a) -> np.ndarray:
    m = np.asarray(a)
    return sum(k @ m @ k.conj().T for k in kraus)

"""Seeded random test instances: states, pure states, isometries and channels."""
from __future__ import annotations

import numpy as np

from .channels import ChoiChannel, choi_from_kraus
from .exceptions import RejectedInputError
from .linalg import DensityOperator


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_density(dim: int, rank: int | None = None, seed=None) -> DensityOperator:
    """Normalized ``G G^dagger`` for a complex Gaussian ``dim x rank`` matrix G."""
    rank = dim if rank is None else rank
    if dim < 1 or not 1 <= rank <= dim:
        raise RejectedInputError(f"need 1 <= rank <= dim, got dim={dim}, rank={rank}")
    g = _ginibre(_rng(seed), dim, rank)
    rho = g @ g.conj().T
    return DensityOperator(rho / np.trace(rho).real)


def random_pure(dim: int, seed=None) -> DensityOperator:
    return random_density(dim, 1, seed)


def random_full_rank(dim: int, seed=None, mix: float = 0.01) -> DensityOperator:
    """Random state mixed with ``mix`` times the maximally mixed state."""
    rho = random_density(dim, dim, seed).matrix
    return DensityOperator((1 - mix) * rho + mix * np.eye(dim) / dim)


def random_isometry(dim_in: int, dim_out: int, seed=None) -> np.ndarray:
    """Haar-like isometry ``dim_in -> dim_out`` from a QR decomposition."""
    if dim_out < dim_in:
        raise RejectedInputError(f"isometry needs dim_out >= dim_in, got {dim_out} < {dim_in}")
    q, r = np.linalg.qr(_ginibre(_rng(seed), dim_out, dim_in))
    # fix column phases so the distribution does not depend on QR conventions
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_kraus(dim_in: int, dim_out: int, env_dim: int, seed=None) -> list[np.ndarray]:
    """Kraus operators of ``X -> Tr_env[V X V^dagger]`` for a random isometry V."""
    if min(dim_in, dim_out, env_dim) < 1:
        raise RejectedInputError("channel dims must be positive")
    v = random_isometry(dim_in, dim_out * env_dim, seed).reshape(dim_out, env_dim, dim_in)
    return [v[:, e, :] for e in range(env_dim)]


def random_channel(dim_in: int, dim_out: int, env_dim: int, seed=None) -> ChoiChannel:
    return choi_from_kraus(random_kraus(dim_in, dim_out, env_dim, seed))


def random_unitary(dim: int, seed=None) -> np.ndarray:
    return random_isometry(dim, dim, seed)

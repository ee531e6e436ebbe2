"""JSON state files: ``{"dim": d, "re": [[...]], "im": [[...]]}``.

``im`` may be omitted for real matrices. Channel files carry the Choi matrix in
the same layout plus ``dim_in`` and ``dim_out``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import ChoiChannel
from .exceptions import RejectedInputError
from .linalg import DensityOperator, HermitianOperator


def matrix_to_dict(m) -> dict:
    m = np.asarray(m, dtype=complex)
    out = {"dim": int(m.shape[0]), "re": m.real.tolist()}
    if np.any(m.imag != 0):
        out["im"] = m.imag.tolist()
    return out


def matrix_from_dict(data: dict) -> np.ndarray:
    try:
        dim = int(data["dim"])
        re = np.asarray(data["re"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise RejectedInputError(f"malformed state record: {exc}") from None
    im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise RejectedInputError(f"state record arrays must be {dim}x{dim}")
    return re + 1j * im


def load_state(path, density: bool = True):
    """Read a state file; returns a :class:`DensityOperator` unless ``density`` is False."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RejectedInputError(f"cannot read state file {path}: {exc}") from None
    m = matrix_from_dict(data)
    return DensityOperator(m) if density else HermitianOperator(m)


def save_state(path, op) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(op)))


def channel_to_dict(channel: ChoiChannel) -> dict:
    out = matrix_to_dict(channel.choi.matrix)
    out.update(dim_in=channel.dim_in, dim_out=channel.dim_out)
    return out


def channel_from_dict(data: dict) -> ChoiChannel:
    return ChoiChannel(int(data["dim_in"]), int(data["dim_out"]), HermitianOperator(matrix_from_dict(data)))


def save_channel(path, channel: ChoiChannel, **extra) -> None:
    """Write the Choi matrix plus dims; ``extra`` keys (e.g. ``representation``) are added."""
    data = channel_to_dict(channel)
    data.update(extra)
    Path(path).write_text(json.dumps(data))


def load_channel(path) -> ChoiChannel:
    return channel_from_dict(json.loads(Path(path).read_text()))

import json

import numpy as np
import pytest

from qdichotomy.channels import ChoiChannel, apply_choi, apply_kraus, choi_from_kraus
from qdichotomy.ensembles import random_channel, random_density, random_kraus
from qdichotomy.exceptions import RejectedInputError
from qdichotomy.statefile import (
    channel_from_dict,
    channel_to_dict,
    load_channel,
    load_state,
    save_channel,
    save_state,
)


def test_identity_channel_is_identity(rng):
    a = random_density(3, seed=rng).matrix
    assert np.allclose(apply_choi(ChoiChannel.identity(3), a).matrix, a)


def test_replacement_channel_outputs_state(rng):
    rho, sigma = random_density(2, seed=rng).matrix, random_density(3, seed=rng).matrix
    assert np.allclose(apply_choi(ChoiChannel.replacement(2, sigma), rho).matrix, sigma)


@pytest.mark.parametrize("dims", [(2, 2, 1), (2, 3, 2), (3, 2, 3), (4, 4, 2)])
def test_choi_agrees_with_kraus(dims, rng):
    d_in, d_out, env = dims
    kraus = random_kraus(d_in, d_out, env, seed=rng)
    ch = choi_from_kraus(kraus)
    x = random_density(d_in, seed=rng).matrix
    assert np.allclose(apply_choi(ch, x).matrix, apply_kraus(kraus, x), atol=1e-10)
    assert ch.tp_residual < 1e-10


def test_transpose_map_is_not_completely_positive():
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[2 * i + j, 2 * j + i] = 1.0
    with pytest.raises(RejectedInputError):
        ChoiChannel(2, 2, swap)


def test_non_trace_preserving_rejected():
    with pytest.raises(RejectedInputError):
        ChoiChannel(2, 2, 0.3 * np.eye(4))


def test_dimension_mismatch_rejected():
    with pytest.raises(RejectedInputError):
        apply_choi(ChoiChannel.identity(2), np.eye(3) / 3)


def test_classical_channel_in_rotated_bases(rng):
    t = np.array([[0.7, 0.2], [0.3, 0.8]])
    u, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    ch = ChoiChannel.classical(t, u, u)
    p = np.array([0.6, 0.4])
    out = apply_choi(ch, (u * p) @ u.conj().T).matrix
    assert np.allclose(out, (u * (t @ p)) @ u.conj().T)


def test_state_and_channel_files_round_trip(tmp_path, rng):
    rho = random_density(3, seed=rng)
    save_state(tmp_path / "rho.json", rho)
    assert np.array_equal(load_state(tmp_path / "rho.json").matrix, rho.matrix)
    ch = random_channel(2, 3, 2, seed=rng)
    save_channel(tmp_path / "ch.json", ch, representation="full")
    data = json.loads((tmp_path / "ch.json").read_text())
    assert data["dim_in"] == 2 and data["dim_out"] == 3 and data["representation"] == "full"
    back = load_channel(tmp_path / "ch.json")
    assert np.array_equal(back.choi.matrix, ch.choi.matrix)
    assert channel_from_dict(channel_to_dict(ch)).dim_out == 3


def test_real_state_file_without_imaginary_part(tmp_path):
    (tmp_path / "s.json").write_text(json.dumps({"dim": 2, "re": [[0.5, 0], [0, 0.5]]}))
    assert np.allclose(load_state(tmp_path / "s.json").matrix, np.eye(2) / 2)

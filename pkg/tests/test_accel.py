import numpy as np
import pytest
import scipy.linalg as sl

from spinfact import _accel, pauli

backends = ["numpy"] + (["numba"] if _accel.numba is not None else [])


@pytest.mark.parametrize("backend", backends)
def test_apply_rotations_matches_dense(backend):
    rng = np.random.default_rng(1)
    n = 4
    xs, zs, a = rng.integers(0, 16, 6), rng.integers(0, 16, 6), rng.normal(size=6)
    psi = rng.normal(size=(16, 3)) + 1j * rng.normal(size=(16, 3))
    U = np.eye(16, dtype=complex)
    for x, z, t in zip(xs, zs, a):
        P = pauli.pauli_matrix(pauli.masks_to_letters(int(x), int(z), n)).toarray()
        U = sl.expm(1j * t * P) @ U
    assert np.abs(_accel.apply_rotations(psi, xs, zs, a, backend) - U @ psi).max() < 1e-13
    assert np.abs(_accel.apply_rotations(psi[:, 1], xs, zs, a, backend) - U @ psi[:, 1]).max() < 1e-13


def test_backends_agree_on_decomposition():
    if _accel.numba is None:
        pytest.skip("numba unavailable")
    rng = np.random.default_rng(2)
    rows, cols = rng.integers(0, 64, 40), rng.integers(0, 64, 40)
    vals = rng.normal(size=40)
    a = _accel.decompose_masks(rows, cols, vals, 6, backend="numpy")
    b = _accel.decompose_masks(rows, cols, vals, 6, backend="numba")
    ka = sorted(zip(a[0], a[1], np.round(a[2], 12)))
    kb = sorted(zip(b[0], b[1], np.round(b[2], 12)))
    assert ka == kb


def test_env_flag_selects_numpy(tmp_path):
    import os
    import subprocess
    import sys

    env = {**os.environ, "SPINFACT_BACKEND": "numpy"}
    out = subprocess.run([sys.executable, "-c", "from spinfact import _accel; print(_accel.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_parity_table():
    p = _accel.parity_table(4)
    assert [int(v) for v in p[:8]] == [0, 1, 1, 0, 1, 0, 0, 1]

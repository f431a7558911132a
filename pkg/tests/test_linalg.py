import numpy as np
import pytest
import scipy.sparse as sp

from spinfact.fock import build_g
from spinfact.linalg import AdExp, batched_ad_exp, expm, expm_normal, is_cubic_rotation, rotation_exp


def _so3(v):
    x, y, z = v
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=float)


def test_expm_matches_schur_route():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(6, 6))
    a = a - a.T
    assert np.abs(expm(a) - expm_normal(a)).max() < 1e-12


def test_expm_rejects_nan():
    with pytest.raises(ValueError):
        expm(np.array([[np.nan]]))


@pytest.mark.parametrize("t", [0.0, 0.3, -1.7, np.pi, 5.0])
def test_closed_form_exponential(t):
    # eigenvalues {0, +-i, +-2i}: direct sum of unit and double-speed rotations
    x = np.zeros((5, 5))
    x[:3, :3] = _so3([0, 0, 1])
    x[3:, 3:] = [[0, -2], [2, 0]]
    e = AdExp(x)
    assert e.closed
    assert np.abs(e(t) - expm(t * x)).max() < 1e-13


def test_closed_form_falls_back():
    x = _so3([0, 0, 3.0])
    e = AdExp(x)
    assert not e.closed
    assert np.abs(e(0.4) - expm(0.4 * x)).max() < 1e-13


def test_batched_closed_form():
    x = _so3([0, 1, 0])
    powers = np.stack([np.linalg.matrix_power(x, k)[None] for k in range(1, 5)])
    assert np.abs(batched_ad_exp(powers, 0.9)[0] - expm(0.9 * x)).max() < 1e-13


def test_rotation_exp_closed_form():
    g = build_g([0, 1], [2, 3], 4)
    assert is_cubic_rotation(g)
    u = rotation_exp(g, 0.8)
    assert np.abs(np.asarray(u.todense()) - expm(0.8 * g.toarray())).max() < 1e-14

import json

import numpy as np
import pytest
import scipy.sparse as sp

from spinfact import pauli
from spinfact.factorize import build_problem, factorize, fock_target
from spinfact.fock import build_g


def test_letter_masks_round_trip():
    for s in ("IXYZ", "ZZII", "YIXZ"):
        x, z = pauli.letters_to_masks(s)
        assert pauli.masks_to_letters(x, z, len(s)) == s


def test_decomposition_matches_trace_oracle():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    fast = pauli.pauli_decompose(m)
    slow = pauli.pauli_decompose_trace(m)
    assert [p.letters for p in fast] == [p.letters for p in slow]
    assert max(abs(a.coefficient - b.coefficient) for a, b in zip(fast, slow)) < 1e-12


def test_reconstruction():
    g = build_g([0, 1], [2, 3], 4)
    ps = pauli.pauli_decompose(g)
    assert len(ps) == 8
    assert abs(pauli.reconstruct(ps) - g).max() < 1e-14


def test_single_qubit_conventions():
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    assert pauli.pauli_decompose(x)[0].letters == "X"
    assert pauli.pauli_decompose(y)[0].letters == "Y"
    assert pauli.pauli_decompose(np.diag([1.0, -1.0]))[0].letters == "Z"


def test_commutation_check():
    assert pauli.check_commuting(["XX", "YY", "ZZ"])
    assert not pauli.check_commuting(["XI", "ZI"])
    assert pauli.strings_commute("XZ", "ZX")


def test_sort_order_is_i_z_x_y():
    assert sorted(["YI", "XI", "ZI", "II"], key=pauli.sort_key) == ["II", "ZI", "XI", "YI"]


def test_gate_estimate():
    assert pauli.gate_estimate("XIYZ") == {"cnot": 4, "rz": 1, "basis_change": 4}


@pytest.fixture(scope="module")
def s2_schedule():
    r = factorize("s2_iiab", 0.9, problem=build_problem("s2_iiab", 0.0))
    return r, pauli.schedule(r)


def test_schedule_counts(s2_schedule):
    _, s = s2_schedule
    assert s.total_strings == 48
    assert s.per_factor_counts() == [16, 16, 16, 16, 16]


def test_schedule_replay_matches_target(s2_schedule):
    r, s = s2_schedule
    assert np.abs(pauli.schedule_unitary(s) - fock_target(r.problem)).max() < 1e-12


def test_schedule_json_round_trip(s2_schedule):
    _, s = s2_schedule
    d = s.to_json()
    back = pauli.PauliSchedule.from_json(json.loads(json.dumps(d)))
    assert back.entries == s.entries
    assert json.dumps(back.to_json(), sort_keys=True) == json.dumps(d, sort_keys=True)


def test_apply_schedule_rejects_wrong_dimension(s2_schedule):
    _, s = s2_schedule
    with pytest.raises(ValueError):
        pauli.apply_schedule(np.ones(4), s)


def test_non_commuting_factor_rejected():
    # XI and ZX anticommute
    m = sp.csr_matrix(1j * (pauli.pauli_matrix("XI") + pauli.pauli_matrix("ZX")))
    with pytest.raises(pauli.ScheduleError):
        pauli.rotation_terms(m)

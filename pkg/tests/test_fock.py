import numpy as np
import pytest
import scipy.sparse as sp

from spinfact.fock import (SENIORITY2, SENIORITY4, build_g, build_single, jw_ladder, number_op, occupations,
                           s_squared, spin_ops, total_number)


def _anti(a, b):
    return (a @ b + b @ a).toarray()


def test_canonical_anticommutation():
    n = 4
    for p in range(n):
        for q in range(n):
            ap, aq = jw_ladder(p, "annihilate", n), jw_ladder(q, "annihilate", n)
            assert np.allclose(_anti(ap, aq.T), np.eye(2 ** n) * (p == q))
            assert np.allclose(_anti(ap, aq), 0)


def test_qubit_zero_is_most_significant_bit():
    c = jw_ladder(0, "create", 3)
    assert c[0b100, 0b000] == 1.0
    assert c[0b101, 0b001] == 1.0
    # creation on qubit 2 picks up the parity of qubits 0 and 1
    c2 = jw_ladder(2, "create", 3)
    assert c2[0b111, 0b110] == 1.0
    assert c2[0b101, 0b100] == -1.0


def test_number_and_occupations():
    n = 3
    occ = occupations(n)
    for q in range(n):
        assert np.array_equal(number_op(q, n).diagonal(), occ[:, q])
    assert np.array_equal(total_number(n).diagonal(), occ.sum(1))


def test_rotation_generators_are_antihermitian_and_conserve_number():
    n = 6
    g = build_g([0, 1], [2, 5], n)
    s = build_single(0, 3, n)
    N = total_number(n)
    for m in (g, s):
        assert abs(m + m.T).max() == 0
        assert abs(m @ N - N @ m).max() == 0


def test_build_g_rejects_repeated_orbitals():
    with pytest.raises(ValueError):
        build_g([0, 1], [1, 2], 4)


def test_rotation_has_unit_spectrum():
    g = build_g([0, 1], [2, 3], 4).toarray()
    ev = np.linalg.eigvalsh(1j * g)
    assert np.allclose(np.sort(np.unique(np.round(ev, 12))), [-1, 0, 1])


def test_spin_operators():
    splus, sz = spin_ops(SENIORITY2)
    s2 = s_squared(SENIORITY2)
    assert abs(s2 @ sz - sz @ s2).max() < 1e-12
    ev = np.linalg.eigvalsh(s2.toarray())
    S = (-1 + np.sqrt(1 + 4 * ev)) / 2
    assert np.allclose(2 * S, np.round(2 * S))


def test_orbital_order():
    assert SENIORITY4.labels[:4] == ("i.a", "i.b", "j.a", "j.b")
    assert SENIORITY2.labels == ("i.a", "i.b", "a.a", "a.b", "b.a", "b.b")
    assert SENIORITY4.dim == 256

import numpy as np
import pytest

from spinfact import lie
from spinfact.families import load_family
from spinfact.fock import build_g, build_single


def test_closure_of_a_single_rotation_is_one_dimensional():
    g = build_g([0, 1], [2, 3], 8)
    assert len(lie.close([g])) == 1


def test_closure_of_su2_generators():
    # one-body rotations among three modes close to so(3)
    a = build_single(0, 1, 3)
    b = build_single(0, 2, 3)
    mats = lie.close([a, b])
    assert len(mats) == 3
    M, res = lie.structure_constants(mats)
    assert res < 1e-12
    assert lie.jacobi_residual(M) < 1e-12


def test_structure_constants_antisymmetric(models):
    M = models("s4_singlet").structure
    assert np.abs(M + M.transpose(1, 0, 2)).max() < 1e-12
    assert lie.jacobi_residual(M) < 1e-10


def test_s2_structure(models):
    m = models("s2_iiab")
    assert m.m == 5
    assert m.center().shape[0] == 2
    assert m.derived().shape[0] == 3
    assert [I.dim for I in m.ideals()] == [3]
    # A1 and A2 differ from A5 and A4 by central elements
    assert sorted(m.ideals()[0].members) == [0, 1, 2, 3, 4]


def test_center_is_annihilated_by_ad(models):
    m = models("s4_singlet")
    C = m.center()
    ads = m.ad()
    for z in C:
        assert np.abs(np.tensordot(z, ads, axes=1)).max() < 1e-10


def test_killing_form_negative_definite_on_derived(models):
    for fam in ("s2_iiab", "s4_singlet"):
        m = models(fam)
        assert np.linalg.eigvalsh(lie.killing_form(m, m.derived())).max() < -1e-8


def test_ideal_partition_into_su2_blocks(models):
    m = models("s4_singlet")
    ideals = m.ideals()
    assert [I.dim for I in ideals] == [3] * 8
    for I in ideals:
        assert lie.is_ideal(m, I.vectors)[0]


def test_integer_witness_ideal_in_singlet(models):
    m = models("s4_singlet")
    w = np.array([lie.combo_coords(m, {8: 1, 22: 1}), lie.combo_coords(m, {14: 1, 26: 1}),
                  lie.combo_coords(m, {20: 1, 27: 1})])
    ok, leak = lie.is_ideal(m, w)
    assert ok and leak < 1e-12


def test_non_ideal_detected(models):
    m = models("s2_iiab")
    ok, leak = lie.is_ideal(m, np.eye(5)[[0]])
    assert not ok and leak > 0.1


def test_listed_abelian_tuples(models):
    m = models("s4_singlet")
    for tup in load_family("s4_singlet").extra["abelian"]:
        assert lie.verify_abelian(m, [k - 1 for k in tup])


def test_listed_center_combinations_are_central(models):
    for fam in ("s2_iiab", "s2_ijaa", "s4_singlet"):
        m = models(fam)
        for combo in load_family(fam).center_combos:
            assert lie.central_residual(m, lie.combo_coords(m, combo)) < 1e-12


def test_discovery_and_appendix_span_the_same_space(models):
    for fam in ("s2_iiab", "s4_singlet"):
        a, d = models(fam), models(fam, "discovery")
        assert lie.span_residual(a.mats, d.mats) < 1e-9


def test_json_is_deterministic(models):
    import json

    m = models("s2_iiab")
    assert json.dumps(lie.to_json(m), sort_keys=True) == json.dumps(lie.to_json(m), sort_keys=True)


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        lie.from_family("s2_iiab", "guess")

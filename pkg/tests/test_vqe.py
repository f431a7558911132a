import numpy as np
import pytest
import scipy.linalg as sl
import scipy.sparse as sp

from spinfact import pauli
from spinfact.factorize import build_problem, factorize, symmetrized_matrix
from spinfact.vqe import (FcidumpError, VqeConfig, adapt_vqe, apply_exp_generator, build_hamiltonian, build_pool,
                          closed_shell, determinant, exact_ground, hf_energy, number_operator, parse_fcidump,
                          run_config, s2_operator, sector_indices, spin_operators, synth_integrals, triplet_csf,
                          write_fcidump)
from spinfact.vqe.integrals import MolecularIntegrals


def _commutator_norm(a, b):
    c = a @ b - b @ a
    return abs(c).max() if c.nnz else 0.0


# ---------------------------------------------------------------- integrals


def test_core_only_dump():
    text = " &FCI NORB=2,NELEC=0,MS2=0,\n &END\n 0.75 0 0 0 0\n"
    ints = parse_fcidump(text)
    H = build_hamiltonian(ints)
    vac = determinant(2, [], [])
    assert np.isclose(vac @ (H @ vac), 0.75)
    idx = sector_indices(2, 0, 0)
    assert np.allclose(H[idx][:, idx].toarray(), 0.75)


@pytest.mark.parametrize("seed", range(3))
def test_fcidump_round_trip_is_exact(seed):
    ints = synth_integrals(4, seed)
    back = parse_fcidump(write_fcidump(ints))
    assert np.array_equal(back.h, ints.h) and np.array_equal(back.g, ints.g)
    assert back.e_core == ints.e_core and back.n_electrons == ints.n_electrons


def test_parsed_hamiltonian_matches_direct_build():
    ints = synth_integrals(4, 7)
    H1 = build_hamiltonian(ints)
    H2 = build_hamiltonian(parse_fcidump(write_fcidump(ints)))
    assert abs(H1 - H2).max() < 1e-12


def test_fcidump_errors_carry_line_numbers():
    base = " &FCI NORB=2,NELEC=2,MS2=0,\n &END\n"
    with pytest.raises(FcidumpError, match="line 3"):
        parse_fcidump(base + " 0.5 3 1 0 0\n")
    with pytest.raises(FcidumpError, match="line 4"):
        parse_fcidump(base + " 0.5 1 2 1 1\n 0.6 2 1 1 1\n")
    with pytest.raises(FcidumpError):
        parse_fcidump("NORB=2\n 0.1 0 0 0 0\n")


def test_synthetic_is_deterministic_and_symmetric():
    a, b = synth_integrals(3, 11), synth_integrals(3, 11)
    assert np.array_equal(a.g, b.g) and np.array_equal(a.h, b.h)
    assert a.symmetry_residual() == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_hamiltonian_conserves_number_and_spin(seed):
    ints = synth_integrals(3, seed)
    H = build_hamiltonian(ints)
    assert _commutator_norm(H, s2_operator(3)) < 1e-10
    assert _commutator_norm(H, number_operator(3)) < 1e-10
    assert _commutator_norm(H, spin_operators(3)[1]) < 1e-10
    assert abs(H - H.T).max() < 1e-12


def test_noninteracting_limit():
    ints = synth_integrals(4, 3, two_body=False)
    H = build_hamiltonian(ints)
    eps = np.linalg.eigvalsh(ints.h)
    want = ints.e_core + 2 * eps[:2].sum()
    assert np.isclose(exact_ground(H, 4, (4, 0)), want)


def test_two_level_one_electron_spectrum():
    h = np.array([[-1.0, 0.3], [0.3, 0.5]])
    ints = MolecularIntegrals(2, 0.0, h, np.zeros((2,) * 4), 1, 1)
    H = build_hamiltonian(ints)
    idx = sector_indices(2, 1, 1)
    assert np.allclose(np.linalg.eigvalsh(H[idx][:, idx].toarray()), np.linalg.eigvalsh(h))


def test_hf_energy_expression():
    ints = synth_integrals(4, 2)
    H = build_hamiltonian(ints)
    ref = closed_shell(4, 4)
    assert np.isclose(ref @ (H @ ref), hf_energy(ints, [0, 1], [0, 1]), atol=1e-12)
    det = determinant(4, [0, 2], [1])
    assert np.isclose(det @ (H @ det), hf_energy(ints, [0, 2], [1]), atol=1e-12)


def test_spectrum_invariant_under_spin_flip():
    ints = synth_integrals(3, 4)
    H = build_hamiltonian(ints)
    up = np.linalg.eigvalsh(H[sector_indices(3, 3, 1)][:, sector_indices(3, 3, 1)].toarray())
    dn = np.linalg.eigvalsh(H[sector_indices(3, 3, -1)][:, sector_indices(3, 3, -1)].toarray())
    assert np.allclose(up, dn)


# ---------------------------------------------------------------- spin


def test_two_electron_singlet_and_triplet():
    s2 = s2_operator(2)
    splus, _ = spin_operators(2)
    hs = determinant(2, [0, 1], [])
    t0 = splus.T @ hs
    t0 /= np.linalg.norm(t0)
    assert np.isclose(t0 @ (s2 @ t0), 2.0)
    assert np.allclose(triplet_csf(2, 0, 0, 1), t0)
    a, b = determinant(2, [0], [1]), determinant(2, [1], [0])
    for sgn in (1, -1):
        v = (a + sgn * b) / np.sqrt(2)
        val = v @ (s2 @ v)
        assert np.isclose(val, 0.0) or np.isclose(val, 2.0)
    assert _commutator_norm(s2, spin_operators(2)[1]) < 1e-14


# ---------------------------------------------------------------- pools


def test_sd_pool_hand_count():
    # 1 occupied, 1 virtual spatial orbital: 2 singles and 1 double
    assert len(build_pool("SD", 2, [0])) == 3
    # 2 occupied, 2 virtual: 8 singles; doubles: alpha-alpha 1, beta-beta 1, alpha-beta 4 x 4 = 16
    assert len(build_pool("SD", 4, [0, 1])) == 8 + 18


@pytest.mark.parametrize("occ,vir", [([0], [1, 2]), ([0, 1], [2, 3]), ([0, 1, 2], [3])])
def test_pair_pool_size(occ, vir):
    n = len(occ) + len(vir)
    assert len(build_pool("PAIR", n, occ)) == 2 * len(occ) * len(vir)


def test_pool_symmetries():
    s2, N = s2_operator(4), number_operator(4)
    sz = spin_operators(4)[1]
    for kind in ("SA", "PAIR"):
        for m in build_pool(kind, 4, [0, 1]).matrices:
            assert _commutator_norm(m, s2) < 1e-10
            assert abs(m + m.T).max() == 0
    for m in build_pool("SD", 4, [0, 1]).matrices:
        assert _commutator_norm(m, N) < 1e-12 and _commutator_norm(m, sz) < 1e-12


def test_sa_pool_flags_coincident_doubles():
    pool = build_pool("SA", 4, [0, 1])
    assert pool.metadata["includes_coincident_index_doubles"]
    assert any(lbl.startswith("SA_iiab") for lbl in pool.labels)
    assert any(lbl.startswith("SA_ijaa") for lbl in pool.labels)


# ---------------------------------------------------------------- dynamics


def test_apply_exp_generator():
    rng = np.random.default_rng(0)
    a = build_pool("SA", 2, [0]).matrices[1]
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi /= np.linalg.norm(psi)
    assert np.array_equal(apply_exp_generator(psi, a, 0.0), psi)
    for t in (0.3, -2.0, 7.0):
        out = apply_exp_generator(psi, a, t)
        assert abs(np.linalg.norm(out) - 1) < 1e-12
        assert np.abs(out - sl.expm(t * a.toarray()) @ psi).max() < 1e-10


@pytest.mark.parametrize("family", ["s2_iiab", "s4_singlet"])
def test_exact_action_matches_factorized_schedule(family):
    problem = build_problem(family, 0.0)
    g = symmetrized_matrix(problem)
    rng = np.random.default_rng(1)
    psi = rng.normal(size=g.shape[0]) + 1j * rng.normal(size=g.shape[0])
    psi /= np.linalg.norm(psi)
    for theta in (0.6, -1.9):
        sched = pauli.schedule(factorize(family, theta, problem=problem))
        assert np.abs(pauli.apply_schedule(psi, sched) - apply_exp_generator(psi, g, theta)).max() < 1e-6


def test_exact_ground_sectors():
    ints = synth_integrals(2, 5)
    H = build_hamiltonian(ints)
    dense = np.linalg.eigvalsh(H.toarray())
    assert np.isclose(min(exact_ground(H, 2, (n, ms)) for n in range(5) for ms in range(-n, n + 1, 2)
                          if len(sector_indices(2, n, ms))), dense[0])
    assert exact_ground(H, 2, (2, 0, 1)) >= exact_ground(H, 2, (2, 0)) - 1e-12
    with pytest.raises(ValueError):
        exact_ground(H, 2, (2, 0, 3))


def test_vqe_from_ground_state_needs_no_iterations():
    h = np.diag([-1.0, 0.5])
    ints = MolecularIntegrals(2, 0.0, h, np.zeros((2,) * 4), 2, 0)
    H = build_hamiltonian(ints)
    run = adapt_vqe(H, build_pool("SA", 2, [0]), closed_shell(2, 2), n_electrons=2)
    assert run.converged and run.n_parameters == 0


@pytest.mark.parametrize("kind", ["SA", "SD"])
def test_vqe_reaches_exact_energy(kind):
    ints = synth_integrals(3, 0)
    H = build_hamiltonian(ints)
    run = adapt_vqe(H, build_pool(kind, 3, [0]), closed_shell(3, 2), n_electrons=2, exact_sector=(2, 0, 0))
    assert run.converged and run.final_max_grad < 1e-5
    assert abs(run.error) < 1e-6
    assert all(b <= a + 1e-12 for a, b in zip(run.energies, run.energies[1:]))
    if kind == "SA":
        assert run.spin_drift < 1e-8


def test_run_config_and_outputs(tmp_path):
    run = run_config(VqeConfig("synthetic:{3,1}", pool="PAIR"))
    d = run.to_json()
    assert d["metadata"]["config"]["pool"] == "PAIR"
    assert d["n_parameters"] == len(d["iterations"])
    lines = run.to_csv().strip().splitlines()
    assert lines[0] == "iteration,energy,s2,max_grad" and len(lines) == run.n_parameters + 3


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        VqeConfig.from_dict({"hamiltonian": "synthetic:{3,0}", "colour": "red"})

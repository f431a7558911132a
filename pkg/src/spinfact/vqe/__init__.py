"""Adaptive VQE harness on spin-free Hamiltonians."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import GRAD_TOL, VqeIteration, VqeRun, adapt_vqe, apply_exp_generator, exact_ground
from .hamiltonian import (build_hamiltonian, closed_shell, determinant, hf_energy, number_operator,
                          s2_operator, sector_indices, spin_operators, triplet_csf)
from .integrals import (FcidumpError, MolecularIntegrals, parse_fcidump, read_fcidump, synth_integrals,
                        write_fcidump)
from .pools import POOL_KINDS, OperatorPool, PoolElement, build_pool

__all__ = [
    "GRAD_TOL", "VqeIteration", "VqeRun", "adapt_vqe", "apply_exp_generator", "exact_ground",
    "build_hamiltonian", "closed_shell", "determinant", "hf_energy", "number_operator", "s2_operator",
    "sector_indices", "spin_operators", "triplet_csf", "FcidumpError", "MolecularIntegrals",
    "parse_fcidump", "read_fcidump", "synth_integrals", "write_fcidump", "POOL_KINDS", "OperatorPool",
    "PoolElement", "build_pool", "VqeConfig", "load_integrals", "build_reference", "run_config",
    "spin_collapse_demo",
]

_SYNTH_RE = re.compile(r"synthetic:\{?\s*(?:n=)?(\d+)\s*,\s*(?:seed=)?(\d+)\s*\}?$")


@dataclass
class VqeConfig:
    """Resolved run configuration.

    ``reference`` is ``"closed_shell"``, ``{"triplet_csf": {"core": c, "open": [p, q]}}``
    or ``{"amplitudes": [[alpha_occ, beta_occ, amplitude], ...]}``.
    """

    hamiltonian: str
    pool: str = "SA"
    reference: object = "closed_shell"
    grad_tol: float = GRAD_TOL
    max_iters: int = 200
    seed: int = 0
    n_electrons: int | None = None
    occupied: list[int] | None = None
    spin: float | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "VqeConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "hamiltonian" not in d:
            raise ValueError("config needs a 'hamiltonian' source")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def load_integrals(source: str, n_electrons: int | None = None) -> MolecularIntegrals:
    """Integrals from ``synthetic:{n,seed}`` or an FCIDUMP path."""
    m = _SYNTH_RE.match(source.strip())
    if m:
        return synth_integrals(int(m.group(1)), int(m.group(2)), n_electrons=n_electrons)
    ints = read_fcidump(source)
    if n_electrons is not None:
        ints.n_electrons = n_electrons
    return ints


def build_reference(spec, n_spatial: int, n_electrons: int) -> tuple[np.ndarray, list[int], float]:
    """Reference state, its occupied orbitals and its total spin."""
    if spec in (None, "closed_shell"):
        occ = list(range(n_electrons // 2))
        return closed_shell(n_spatial, n_electrons), occ, 0.0
    if isinstance(spec, dict) and "triplet_csf" in spec:
        t = spec["triplet_csf"]
        core, (p, q) = int(t.get("core", 0)), t["open"]
        return triplet_csf(n_spatial, core, p, q), list(range(core)) + sorted({p, q}), 1.0
    if isinstance(spec, dict) and "amplitudes" in spec:
        v = np.zeros(4 ** n_spatial)
        occ: set[int] = set()
        for a_occ, b_occ, amp in spec["amplitudes"]:
            v += amp * determinant(n_spatial, a_occ, b_occ)
            occ |= set(a_occ) | set(b_occ)
        v /= np.linalg.norm(v)
        s2 = float(v @ (s2_operator(n_spatial) @ v))
        return v, sorted(occ), float((-1 + np.sqrt(1 + 4 * s2)) / 2)
    raise ValueError(f"unrecognized reference {spec!r}")


def run_config(cfg: VqeConfig) -> VqeRun:
    ints = load_integrals(cfg.hamiltonian, cfg.n_electrons)
    n = ints.n_spatial
    H = build_hamiltonian(ints)
    ref, occ, S = build_reference(cfg.reference, n, ints.n_electrons)
    occ = cfg.occupied if cfg.occupied is not None else occ
    S = cfg.spin if cfg.spin is not None else S
    splus, sz = spin_operators(n)
    ms2 = int(round(2 * float(ref @ (sz @ ref))))
    pool = build_pool(cfg.pool, n, occ)
    run = adapt_vqe(H, pool, ref, n_electrons=ints.n_electrons, ms2=ms2, grad_tol=cfg.grad_tol,
                    max_iters=cfg.max_iters, exact_sector=(ints.n_electrons, ms2, S))
    run.metadata["config"] = cfg.to_dict()
    run.metadata["reference_spin"] = S
    return run


def spin_collapse_demo(n_spatial: int = 4, seed: int = 1, core: int = 1, open_shell=(1, 2),
                       grad_tol: float = GRAD_TOL) -> dict:
    """SA and SD runs from an m_s = 0 triplet CSF on a Hamiltonian with a singlet ground state.

    Both pools excite out of every orbital occupied in the reference. The
    SA run must stay at <S^2> = 2; whether the SD run leaves the triplet is
    reported, not asserted.
    """
    n_el = 2 * core + 2
    ints = synth_integrals(n_spatial, seed, n_electrons=n_el)
    H = build_hamiltonian(ints)
    ref = triplet_csf(n_spatial, core, *open_shell)
    occ = sorted(set(range(core)) | set(open_shell))
    out = {"n_spatial": n_spatial, "seed": seed, "n_electrons": n_el, "core": core, "open": list(open_shell),
           "ground_singlet": exact_ground(H, n_spatial, (n_el, 0, 0)),
           "ground_triplet": exact_ground(H, n_spatial, (n_el, 0, 1)),
           "ground_ms0": exact_ground(H, n_spatial, (n_el, 0))}
    for kind in ("SA", "SD"):
        run = adapt_vqe(H, build_pool(kind, n_spatial, occ), ref, n_electrons=n_el, grad_tol=grad_tol,
                        exact_sector=(n_el, 0, 1))
        out[kind] = {"converged": run.converged, "final_energy": run.final_energy,
                     "final_s2": run.s2_values[-1], "spin_drift": run.spin_drift,
                     "n_parameters": run.n_parameters}
    return out

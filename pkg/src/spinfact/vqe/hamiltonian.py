"""Second-quantized operators on interleaved spin orbitals (2p alpha, 2p+1 beta)."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..fock import _create, occupations
from .integrals import MolecularIntegrals


def alpha(p: int) -> int:
    return 2 * p


def beta(p: int) -> int:
    return 2 * p + 1


@lru_cache(maxsize=64)
def excitation(p: int, q: int, n_spatial: int) -> sp.csr_matrix:
    """Spin-summed excitation E_pq = sum_sigma a+_{p sigma} a_{q sigma}."""
    n = 2 * n_spatial
    out = _create(alpha(p), n) @ _create(alpha(q), n).T + _create(beta(p), n) @ _create(beta(q), n).T
    return out.tocsr()


def build_hamiltonian(ints: MolecularIntegrals) -> sp.csr_matrix:
    """H = e_core + sum h_pq E_pq + 1/2 sum (pq|rs) (E_pq E_rs - delta_qr E_ps)."""
    n = ints.n_spatial
    dim = 4 ** n
    E = [[excitation(p, q, n) for q in range(n)] for p in range(n)]
    H = sp.csr_matrix((dim, dim))
    H = H + ints.e_core * sp.identity(dim, format="csr")
    for p in range(n):
        for q in range(n):
            if ints.h[p, q]:
                H = H + ints.h[p, q] * E[p][q]
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s in range(n):
                    v = ints.g[p, q, r, s]
                    if not v:
                        continue
                    term = E[p][q] @ E[r][s]
                    if q == r:
                        term = term - E[p][s]
                    H = H + 0.5 * v * term
    H = ((H + H.T) * 0.5).tocsr()
    H.eliminate_zeros()
    return H


def spin_operators(n_spatial: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """(S_plus, S_z) on the interleaved ordering."""
    n = 2 * n_spatial
    sz_diag = np.zeros(2 ** n)
    occ = occupations(n)
    sz_diag = 0.5 * (occ[:, 0::2].sum(1) - occ[:, 1::2].sum(1))
    splus = sum(_create(alpha(p), n) @ _create(beta(p), n).T for p in range(n_spatial))
    return sp.csr_matrix(splus), sp.diags(sz_diag, format="csr")


def s2_operator(n_spatial: int) -> sp.csr_matrix:
    """Total spin S^2 = S- S+ + Sz (Sz + 1)."""
    splus, sz = spin_operators(n_spatial)
    eye = sp.identity(sz.shape[0], format="csr")
    return (splus.T @ splus + sz @ (sz + eye)).tocsr()


def number_operator(n_spatial: int) -> sp.csr_matrix:
    return sp.diags(occupations(2 * n_spatial).sum(1).astype(float), format="csr")


def sector_indices(n_spatial: int, n_electrons: int, ms2: int) -> np.ndarray:
    """Basis indices with the given electron number and 2 Sz."""
    occ = occupations(2 * n_spatial)
    na, nb = occ[:, 0::2].sum(1), occ[:, 1::2].sum(1)
    return np.flatnonzero((na + nb == n_electrons) & (na - nb == ms2))


def determinant(n_spatial: int, alpha_occ, beta_occ) -> np.ndarray:
    """Basis vector of a determinant a+_{a1} a+_{a2} ... |0> in JW order.

    Creation operators are applied in ascending spin-orbital order, so the
    result is +|bits> with no sign.
    """
    n = 2 * n_spatial
    idx = 0
    for q in [alpha(p) for p in alpha_occ] + [beta(p) for p in beta_occ]:
        idx |= 1 << (n - 1 - q)
    v = np.zeros(2 ** n)
    v[idx] = 1.0
    return v


def closed_shell(n_spatial: int, n_electrons: int) -> np.ndarray:
    if n_electrons % 2:
        raise ValueError("closed-shell reference needs an even electron count")
    occ = range(n_electrons // 2)
    return determinant(n_spatial, occ, occ)


def triplet_csf(n_spatial: int, core: int, p: int, q: int) -> np.ndarray:
    """m_s = 0 triplet CSF with ``core`` doubly occupied orbitals and p, q singly occupied.

    Built as S_minus applied to the high-spin determinant, then normalized,
    which fixes the relative sign of the two open-shell determinants.
    """
    docc = list(range(core))
    hs = determinant(n_spatial, docc + [p, q], docc)
    splus, _ = spin_operators(n_spatial)
    v = splus.T @ hs
    return v / np.linalg.norm(v)


def hf_energy(ints: MolecularIntegrals, alpha_occ, beta_occ) -> float:
    """Determinant energy from the Slater-Condon expression."""
    h, g = ints.h, ints.g
    e = ints.e_core + sum(h[i, i] for i in alpha_occ) + sum(h[i, i] for i in beta_occ)
    for occ in (alpha_occ, beta_occ):
        for i in occ:
            for j in occ:
                e += 0.5 * (g[i, i, j, j] - g[i, j, j, i])
    for i in alpha_occ:
        for j in beta_occ:
            e += g[i, i, j, j]
    return float(e)

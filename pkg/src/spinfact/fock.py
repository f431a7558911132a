"""Jordan-Wigner matrices for ladder, number and two-electron rotation operators.

Operators are real ``scipy.sparse.csr_matrix`` objects. Every element built
here has real matrix elements under the Jordan-Wigner mapping, so complex
storage would only double the memory without changing any result.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

SPATIAL = ("i", "j", "a", "b")
SPINS = ("a", "b")  # alpha, beta
CANONICAL = tuple(f"{p}.{s}" for p in SPATIAL for s in SPINS)


@dataclass(frozen=True, order=True)
class SpinOrbital:
    """A spatial label with a spin projection, placed on a qubit.

    Attributes:
        spatial_label: one of ``i``, ``j``, ``a``, ``b``.
        spin: ``"a"`` for alpha or ``"b"`` for beta.
        qubit_index: position in the Jordan-Wigner ordering.
    """

    spatial_label: str
    spin: str
    qubit_index: int

    @property
    def label(self) -> str:
        return f"{self.spatial_label}.{self.spin}"


class OrbitalSet:
    """Bijection between orbital labels like ``"i.a"`` and qubit indices.

    The canonical order is (i_a, i_b, j_a, j_b, a_a, a_b, b_a, b_b) truncated
    to the spatial labels that are present.
    """

    def __init__(self, spatial: Iterable[str] = SPATIAL):
        spatial = tuple(spatial)
        bad = [p for p in spatial if p not in SPATIAL]
        if bad or len(set(spatial)) != len(spatial):
            raise ValueError(f"invalid spatial labels {spatial}")
        spatial = tuple(p for p in SPATIAL if p in spatial)
        self.labels = tuple(f"{p}.{s}" for p in spatial for s in SPINS)
        self.index = {lab: k for k, lab in enumerate(self.labels)}
        self.spatial = spatial

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def __getitem__(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise KeyError(f"orbital {label!r} not in {self.labels}") from None

    def orbital(self, label: str) -> SpinOrbital:
        p, s = label.split(".")
        return SpinOrbital(p, s, self[label])

    def __repr__(self) -> str:
        return f"OrbitalSet({''.join(self.spatial)})"


SENIORITY2 = OrbitalSet("iab")
SENIORITY2_IJAA = OrbitalSet("ija")
SENIORITY4 = OrbitalSet("ijab")


def _check(q: int, n: int) -> None:
    if not 0 <= q < n or n > 16:
        raise IndexError(f"qubit {q} out of range for n={n}")


@lru_cache(maxsize=256)
def _create(q: int, n: int) -> sp.csr_matrix:
    # a^dag_q maps |..0_q..> -> (-1)^{occupations below q} |..1_q..>; qubit 0 is
    # the most significant bit of the basis index.
    dim = 2 ** n
    shift = n - 1 - q
    states = np.arange(dim)
    src = states[((states >> shift) & 1) == 0]
    below = src >> (shift + 1)
    sign = 1.0 - 2.0 * (_popcount(below) & 1)
    m = sp.csr_matrix((sign, (src | (1 << shift), src)), shape=(dim, dim))
    m.sort_indices()
    return m


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x = x >> 1
    return c


def jw_ladder(q: int, kind: str, n: int) -> sp.csr_matrix:
    """Jordan-Wigner creation or annihilation operator on qubit ``q``.

    Args:
        q: qubit index.
        kind: ``"create"`` or ``"annihilate"``.
        n: total number of qubits.

    Returns:
        A ``2**n`` square sparse matrix with the Z string on qubits below q.
    """
    _check(q, n)
    c = _create(q, n)
    if kind == "create":
        return c.copy()
    if kind == "annihilate":
        return c.T.tocsr()
    raise ValueError(f"kind must be create or annihilate, got {kind!r}")


def number_op(q: int, n: int) -> sp.csr_matrix:
    """Occupation number projector on qubit ``q``."""
    _check(q, n)
    states = np.arange(2 ** n)
    return sp.diags(((states >> (n - 1 - q)) & 1).astype(float), format="csr")


def occupations(n: int) -> np.ndarray:
    """Occupation table of shape (2**n, n): entry [s, q] is bit q of state s."""
    states = np.arange(2 ** n)[:, None]
    return (states >> (n - 1 - np.arange(n))[None, :]) & 1


def build_g(lower: Sequence[int], upper: Sequence[int], n: int) -> sp.csr_matrix:
    """Two-electron rotation generator a+_u1 a+_u2 a_l2 a_l1 minus its adjoint.

    Raises:
        ValueError: if the four qubits are not distinct.
    """
    l1, l2 = lower
    u1, u2 = upper
    if len({l1, l2, u1, u2}) != 4:
        raise ValueError(f"rotation needs four distinct orbitals, got {lower}->{upper}")
    for q in (l1, l2, u1, u2):
        _check(q, n)
    cr = lambda q: _create(q, n)
    ex = cr(u1) @ cr(u2) @ cr(l2).T @ cr(l1).T
    g = (ex - ex.T).tocsr()
    g.eliminate_zeros()
    return g


def build_single(lower: int, upper: int, n: int) -> sp.csr_matrix:
    """One-electron rotation a+_upper a_lower minus its adjoint."""
    if lower == upper:
        raise ValueError("single rotation needs two distinct orbitals")
    ex = _create(upper, n) @ _create(lower, n).T
    return (ex - ex.T).tocsr()


def polynomial_diag(monomials: Sequence[tuple[int, Iterable[int]]], n: int) -> np.ndarray:
    """Diagonal of sum_k c_k prod_{q in S_k} n(q) over all basis states."""
    occ = occupations(n)
    d = np.zeros(2 ** n)
    for coef, qs in monomials:
        qs = list(qs)
        d += coef * (np.all(occ[:, qs] == 1, axis=1) if qs else 1.0)
    return d


def anticommutator(a: sp.spmatrix, b: sp.spmatrix) -> sp.spmatrix:
    return a @ b + b @ a


def commutator(a: sp.spmatrix, b: sp.spmatrix) -> sp.spmatrix:
    return a @ b - b @ a


def total_number(n: int) -> sp.csr_matrix:
    return sp.diags(occupations(n).sum(1).astype(float), format="csr")


def spin_ops(orbs: OrbitalSet) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Return (S_plus, S_z) for an orbital set with paired alpha/beta labels."""
    n = orbs.n
    splus = sp.csr_matrix((orbs.dim, orbs.dim))
    sz = sp.csr_matrix((orbs.dim, orbs.dim))
    for p in orbs.spatial:
        qa, qb = orbs[f"{p}.a"], orbs[f"{p}.b"]
        splus = splus + _create(qa, n) @ _create(qb, n).T
        sz = sz + 0.5 * (number_op(qa, n) - number_op(qb, n))
    return splus.tocsr(), sz.tocsr()


def s_squared(orbs: OrbitalSet) -> sp.csr_matrix:
    """Total spin S^2 = S- S+ + Sz (Sz + 1)."""
    splus, sz = spin_ops(orbs)
    eye = sp.identity(orbs.dim, format="csr")
    return (splus.T @ splus + sz @ (sz + eye)).tocsr()

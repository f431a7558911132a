"""Operator pools for adaptive VQE on interleaved spin orbitals."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from ..families import build_symmetrized
from ..fock import build_g, build_single
from .hamiltonian import alpha, beta

POOL_KINDS = ("SD", "SA", "PAIR")


@dataclass(frozen=True)
class PoolElement:
    label: str
    matrix: sp.csr_matrix = field(repr=False)


@dataclass
class OperatorPool:
    """Named anti-Hermitian generators plus the orbital split they were built for."""

    kind: str
    n_spatial: int
    occupied: tuple[int, ...]
    virtual: tuple[int, ...]
    elements: list[PoolElement]
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.elements]

    @property
    def matrices(self) -> list[sp.csr_matrix]:
        return [e.matrix for e in self.elements]


def _spin_orbital(label: str, mapping: dict[str, int]) -> int:
    p, s = label.split(".")
    return alpha(mapping[p]) if s == "a" else beta(mapping[p])


def family_generator(family: str, mapping: dict[str, int], n_spatial: int) -> sp.csr_matrix:
    """Symmetrized family generator with labels i, j, a, b placed on spatial orbitals."""
    specs, coefs = build_symmetrized(family)
    n = 2 * n_spatial
    out = None
    for spec, c in zip(specs, coefs):
        g = c * build_g([_spin_orbital(x, mapping) for x in spec.lower],
                        [_spin_orbital(x, mapping) for x in spec.upper], n)
        out = g if out is None else out + g
    return out.tocsr()


def sa_single(i: int, a: int, n_spatial: int) -> sp.csr_matrix:
    n = 2 * n_spatial
    return (build_single(alpha(i), alpha(a), n) + build_single(beta(i), beta(a), n)).tocsr()


def pair_double(i: int, a: int, n_spatial: int) -> sp.csr_matrix:
    return build_g([alpha(i), beta(i)], [alpha(a), beta(a)], 2 * n_spatial)


def _norm(m: sp.csr_matrix) -> sp.csr_matrix:
    m = m.tocsr()
    m.eliminate_zeros()
    return m


def build_pool(kind: str, n_spatial: int, occupied, virtual=None) -> OperatorPool:
    """Operator pool for excitations from ``occupied`` into ``virtual`` spatial orbitals.

    Args:
        kind: ``"SD"`` (spin-orbital singles and doubles conserving S_z),
            ``"SA"`` (spin-adapted singles and doubles) or ``"PAIR"``
            (spin-adapted singles and pair doubles).
        n_spatial: number of spatial orbitals.
        occupied: spatial orbitals occupied in the reference.
        virtual: target orbitals; defaults to all the others.
    """
    kind = kind.upper()
    if kind not in POOL_KINDS:
        raise ValueError(f"unknown pool kind {kind!r}; expected one of {POOL_KINDS}")
    if n_spatial < 2:
        raise ValueError("pools need at least two spatial orbitals")
    occ = tuple(sorted(occupied))
    vir = tuple(sorted(virtual)) if virtual is not None else tuple(p for p in range(n_spatial) if p not in occ)
    if set(occ) & set(vir):
        raise ValueError("occupied and virtual orbitals overlap")
    n = 2 * n_spatial
    els: list[PoolElement] = []
    meta: dict = {}
    if kind == "SD":
        so_occ = [q for p in occ for q in (alpha(p), beta(p))]
        so_vir = [q for p in vir for q in (alpha(p), beta(p))]
        for q in so_occ:
            for r in so_vir:
                if q % 2 == r % 2:
                    els.append(PoolElement(f"S({q}->{r})", _norm(build_single(q, r, n))))
        for q1, q2 in combinations(so_occ, 2):
            for r1, r2 in combinations(so_vir, 2):
                if (q1 % 2) + (q2 % 2) == (r1 % 2) + (r2 % 2):
                    els.append(PoolElement(f"D({q1},{q2}->{r1},{r2})", _norm(build_g([q1, q2], [r1, r2], n))))
        return OperatorPool(kind, n_spatial, occ, vir, els, meta)
    for i in occ:
        for a in vir:
            els.append(PoolElement(f"SA_single({i}->{a})", _norm(sa_single(i, a, n_spatial))))
    for i in occ:
        for a in vir:
            els.append(PoolElement(f"SA_pair({i}{i}->{a}{a})", _norm(pair_double(i, a, n_spatial))))
    if kind == "SA":
        for i in occ:
            for a, b in combinations(vir, 2):
                m = family_generator("s2_iiab", {"i": i, "a": a, "b": b}, n_spatial)
                els.append(PoolElement(f"SA_iiab({i}{i}->{a}{b})", _norm(m)))
        for i, j in combinations(occ, 2):
            for a in vir:
                m = family_generator("s2_ijaa", {"i": i, "j": j, "a": a}, n_spatial)
                els.append(PoolElement(f"SA_ijaa({i}{j}->{a}{a})", _norm(m)))
        for i, j in combinations(occ, 2):
            for a, b in combinations(vir, 2):
                mp = {"i": i, "j": j, "a": a, "b": b}
                els.append(PoolElement(f"SA_singlet({i}{j}->{a}{b})",
                                       _norm(family_generator("s4_singlet", mp, n_spatial))))
                els.append(PoolElement(f"SA_triplet({i}{j}->{a}{b})",
                                       _norm(family_generator("s4_triplet", mp, n_spatial))))
        meta["includes_coincident_index_doubles"] = True
    return OperatorPool(kind, n_spatial, occ, vir, els, meta)

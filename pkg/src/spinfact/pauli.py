"""Jordan-Wigner Pauli decompositions and Pauli-rotation schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _accel
from .factorize import FactorizationResult, central_matrices, factor_matrices

LETTER_ORDER = "IZXY"
_BITS_TO_LETTER = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


class ScheduleError(RuntimeError):
    """A factor does not split into commuting Pauli rotations."""


@dataclass(frozen=True)
class PauliString:
    """A Pauli product with a complex coefficient; letters are qubit-0 first."""

    letters: str
    coefficient: complex = 1.0

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(ch != "I" for ch in self.letters)

    def masks(self) -> tuple[int, int]:
        return letters_to_masks(self.letters)


def masks_to_letters(x: int, z: int, n: int) -> str:
    return "".join(_BITS_TO_LETTER[((x >> (n - 1 - q)) & 1, (z >> (n - 1 - q)) & 1)] for q in range(n))


def letters_to_masks(letters: str) -> tuple[int, int]:
    n = len(letters)
    x = z = 0
    for q, ch in enumerate(letters):
        bit = 1 << (n - 1 - q)
        if ch in "XY":
            x |= bit
        if ch in "ZY":
            z |= bit
        if ch not in "IXYZ":
            raise ValueError(f"bad Pauli letter {ch!r}")
    return x, z


def sort_key(letters: str) -> tuple[int, ...]:
    return tuple(LETTER_ORDER.index(ch) for ch in letters)


def pauli_decompose(m: sp.spmatrix | np.ndarray, tol: float = 1e-12, backend: str | None = None) -> list[PauliString]:
    """Coefficients tr(P^dag M) / 2**n of all Pauli strings above ``tol``.

    Uses a Walsh-Hadamard transform per X pattern, so only the nonzero
    strings are ever formed. Output is sorted in the deterministic order.
    """
    coo = sp.coo_matrix(m)
    n = int(round(np.log2(coo.shape[0])))
    real = np.isrealobj(coo.data)
    parts = [(coo.data.real, 1.0)] if real else [(coo.data.real, 1.0), (coo.data.imag, 1j)]
    acc: dict[tuple[int, int], complex] = {}
    for data, unit in parts:
        xs, zs, hs = _accel.decompose_masks(coo.row, coo.col, data, n, tol=0.0, backend=backend)
        for x, z, h in zip(xs, zs, hs):
            ny = bin(int(x) & int(z)).count("1")
            acc[(int(x), int(z))] = acc.get((int(x), int(z)), 0) + unit * h * (-1j) ** ny
    out = [PauliString(masks_to_letters(x, z, n), complex(c)) for (x, z), c in acc.items() if abs(c) > tol]
    return sorted(out, key=lambda p: sort_key(p.letters))


def pauli_matrix(letters: str) -> sp.csr_matrix:
    """Sparse matrix of a Pauli string by Kronecker products (qubit 0 leftmost)."""
    mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
            "Z": np.diag([1.0, -1.0])}
    out = sp.identity(1, format="csr", dtype=complex)
    for ch in letters:
        out = sp.kron(out, sp.csr_matrix(mats[ch]), format="csr")
    return out


def pauli_decompose_trace(m: np.ndarray, tol: float = 1e-12) -> list[PauliString]:
    """Reference decomposition by explicit traces over all 4**n strings."""
    m = np.asarray(m)
    n = int(round(np.log2(m.shape[0])))
    out = []
    for letters in product("IXYZ", repeat=n):
        s = "".join(letters)
        c = (pauli_matrix(s).conj().T @ m).trace() / 2 ** n
        if abs(c) > tol:
            out.append(PauliString(s, complex(c)))
    return sorted(out, key=lambda p: sort_key(p.letters))


def reconstruct(strings: Sequence[PauliString]) -> sp.csr_matrix:
    out = None
    for p in strings:
        term = p.coefficient * pauli_matrix(p.letters)
        out = term if out is None else out + term
    return out


def strings_commute(a: str, b: str) -> bool:
    xa, za = letters_to_masks(a)
    xb, zb = letters_to_masks(b)
    return bin((xa & zb) ^ (za & xb)).count("1") % 2 == 0


def check_commuting(strings: Iterable[PauliString | str]) -> bool:
    """True iff every pair of strings commutes."""
    ms = [letters_to_masks(s if isinstance(s, str) else s.letters) for s in strings]
    for i in range(len(ms)):
        xa, za = ms[i]
        for j in range(i + 1, len(ms)):
            xb, zb = ms[j]
            if bin((xa & zb) ^ (za & xb)).count("1") & 1:
                return False
    return True


def gate_estimate(letters: str) -> dict:
    """Per-rotation cost: CNOT ladder, one Rz and single-qubit basis changes."""
    w = sum(ch != "I" for ch in letters)
    return {"cnot": 2 * max(w - 1, 0), "rz": 1 if w else 0,
            "basis_change": 2 * sum(ch in "XY" for ch in letters)}


@dataclass
class FactorBlock:
    """Rotations from one factor exp(t A) with A = i sum_k r_k P_k."""

    label: str
    strings: list[str]
    angles: list[float]


@dataclass
class PauliSchedule:
    """Ordered Pauli rotations exp(i angle P), listed in application order.

    The factorized product F_1 F_2 ... F_N acts on a state starting from
    F_N, so ``blocks`` runs from the last factor to the first.
    """

    n_qubits: int
    blocks: list[FactorBlock]
    family: str = ""
    theta: float = 0.0

    @property
    def entries(self) -> list[tuple[str, float]]:
        return [(s, a) for b in self.blocks for s, a in zip(b.strings, b.angles)]

    @property
    def total_rotations(self) -> int:
        return sum(len(b.strings) for b in self.blocks)

    @property
    def total_strings(self) -> int:
        """Number of distinct Pauli strings over all factors."""
        return len({s for b in self.blocks for s in b.strings})

    def per_factor_counts(self) -> list[int]:
        """String counts in product order (first factor first)."""
        return [len(b.strings) for b in reversed(self.blocks)]

    def masks(self):
        e = self.entries
        xz = np.array([letters_to_masks(s) for s, _ in e], dtype=np.int64).reshape(-1, 2)
        return xz[:, 0], xz[:, 1], np.array([a for _, a in e], dtype=float)

    def gates(self) -> dict:
        tot = {"cnot": 0, "rz": 0, "basis_change": 0}
        for s, _ in self.entries:
            for k, v in gate_estimate(s).items():
                tot[k] += v
        return tot

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "theta": self.theta,
            "n_qubits": self.n_qubits,
            "order": "application",
            "entries": [{"pauli": s, "angle": float(a), "factor": b.label}
                        for b in self.blocks for s, a in zip(b.strings, b.angles)],
            "total_strings": self.total_strings,
            "total_rotations": self.total_rotations,
            "per_factor_counts": self.per_factor_counts(),
            "factor_labels": [b.label for b in reversed(self.blocks)],
            "gate_estimate": self.gates(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "PauliSchedule":
        blocks: list[FactorBlock] = []
        for e in d["entries"]:
            if not blocks or blocks[-1].label != e["factor"]:
                blocks.append(FactorBlock(e["factor"], [], []))
            blocks[-1].strings.append(e["pauli"])
            blocks[-1].angles.append(float(e["angle"]))
        return cls(int(d["n_qubits"]), blocks, d.get("family", ""), float(d.get("theta", 0.0)))


def rotation_terms(m: sp.spmatrix) -> tuple[list[str], list[float]]:
    """Strings and real weights r_k with m = i sum_k r_k P_k.

    Raises:
        ScheduleError: if a coefficient has a real part (m not anti-Hermitian)
            or the strings do not commute.
    """
    ps = pauli_decompose(m)
    for p in ps:
        if abs(p.coefficient.real) > 1e-12:
            raise ScheduleError(f"coefficient of {p.letters} is not imaginary")
    strings = [p.letters for p in ps]
    if not check_commuting(strings):
        raise ScheduleError("factor strings do not commute")
    return strings, [p.coefficient.imag for p in ps]


class TermCache:
    """Pauli terms of each factor matrix, computed once per problem."""

    def __init__(self):
        self._cache: dict = {}

    def terms(self, key, m: sp.spmatrix):
        if key not in self._cache:
            self._cache[key] = rotation_terms(m)
        return self._cache[key]


def schedule(result: FactorizationResult, cache: TermCache | None = None) -> PauliSchedule:
    """Pauli-rotation schedule of a factorization result.

    Every factor exp(t A) with commuting strings becomes prod_k exp(i t r_k P_k).
    """
    if result.problem is None:
        raise ScheduleError("result carries no problem data")
    cache = cache or TermCache()
    p = result.problem
    n = p.model.orbitals.n
    zs = central_matrices(p)
    fs = factor_matrices(p)
    product_order: list[FactorBlock] = []
    for i, a in result.central_factors:
        strings, r = cache.terms(("Z", p.family, i), zs[i])
        product_order.append(FactorBlock(f"Z{i + 1}", strings, [a * x for x in r]))
    for s, t, m in zip(result.factor_order, result.semisimple_params, fs):
        strings, r = cache.terms(("A", p.family, s), m)
        product_order.append(FactorBlock(f"A{s + 1}", strings, [float(t) * x for x in r]))
    return PauliSchedule(n, list(reversed(product_order)), result.family, result.theta)


def apply_schedule(state: np.ndarray, sched: PauliSchedule, backend: str | None = None) -> np.ndarray:
    """Apply the schedule to a state vector or a (dim, k) stack of states."""
    state = np.asarray(state)
    if state.shape[0] != 2 ** sched.n_qubits:
        raise ValueError(f"state dimension {state.shape[0]} does not match {sched.n_qubits} qubits")
    if not sched.blocks:
        return state.astype(complex)
    xs, zs, angles = sched.masks()
    return _accel.apply_rotations(state, xs, zs, angles, backend=backend)


def schedule_unitary(sched: PauliSchedule, backend: str | None = None) -> np.ndarray:
    return apply_schedule(np.eye(2 ** sched.n_qubits, dtype=complex), sched, backend)


def family_string_counts(model) -> dict:
    """Distinct-string totals and per-element string counts for listed elements."""
    per = []
    union = set()
    for k in range(model.n_listed):
        strings, _ = rotation_terms(model.listed_element(k))
        per.append(len(strings))
        union.update(strings)
    return {"per_element": per, "distinct": len(union)}

"""Spin-free molecular integrals: FCIDUMP input/output and synthetic generation."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

SYM_TOL = 1e-8


class FcidumpError(ValueError):
    """Malformed or inconsistent FCIDUMP content."""


@dataclass
class MolecularIntegrals:
    """One- and two-electron integrals over spatial orbitals.

    Attributes:
        n_spatial: number of spatial orbitals.
        e_core: core (nuclear repulsion) energy in Hartree.
        h: one-electron integrals h[p, q].
        g: two-electron integrals g[p, q, r, s] = (pq|rs), chemists' notation.
        n_electrons: electron count of the target state.
        ms2: twice the spin projection.
    """

    n_spatial: int
    e_core: float
    h: np.ndarray
    g: np.ndarray
    n_electrons: int
    ms2: int = 0

    def __post_init__(self):
        n = self.n_spatial
        self.h = np.asarray(self.h, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if self.h.shape != (n, n) or self.g.shape != (n, n, n, n):
            raise ValueError(f"integral shapes {self.h.shape}, {self.g.shape} do not match n={n}")

    def symmetry_residual(self) -> float:
        """Largest violation of h symmetry and the 8-fold symmetry of g."""
        g = self.g
        perms = [g.transpose(1, 0, 2, 3), g.transpose(0, 1, 3, 2), g.transpose(2, 3, 0, 1)]
        return float(max([np.abs(self.h - self.h.T).max()] + [np.abs(g - p).max() for p in perms]))

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_electrons - self.ms2) // 2


def _pair_orbits(p, q, r, s):
    """The eight index tuples equivalent to (pq|rs) under real-orbital symmetry."""
    out = set()
    for a, b in ((p, q), (q, p)):
        for c, d in ((r, s), (s, r)):
            out.add((a, b, c, d))
            out.add((c, d, a, b))
    return out


_HEADER_RE = re.compile(r"&FCI(.*?)(?:&END|/)", re.S | re.I)


def _parse_namelist(body: str) -> dict:
    parts = re.split(r"([A-Za-z_][A-Za-z_0-9]*)\s*=", body)
    return {k.upper(): v.strip().strip(",").strip() for k, v in zip(parts[1::2], parts[2::2])}


def parse_fcidump(text: str) -> MolecularIntegrals:
    """Parse FCIDUMP text into symmetry-completed integrals.

    Raises:
        FcidumpError: on a malformed header, an out-of-range index, or two
            symmetry-equivalent entries that disagree by more than 1e-8.
    """
    m = _HEADER_RE.search(text)
    if m is None:
        raise FcidumpError("missing &FCI ... &END namelist")
    fields = _parse_namelist(m.group(1))
    try:
        n = int(fields["NORB"])
        nelec = int(fields["NELEC"])
        ms2 = int(fields.get("MS2", "0"))
    except (KeyError, ValueError) as exc:
        raise FcidumpError(f"bad namelist: {exc}") from None
    if n < 1:
        raise FcidumpError(f"NORB must be positive, got {n}")
    start_line = text[: m.end()].count("\n") + 1
    h = np.zeros((n, n))
    g = np.zeros((n, n, n, n))
    seen_h: dict = {}
    seen_g: dict = {}
    e_core = 0.0
    for lineno, line in enumerate(text[m.end():].splitlines(), start=start_line):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value i j k l', got {line.strip()!r}")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError:
            raise FcidumpError(f"line {lineno}: cannot parse {line.strip()!r}") from None
        if any(not 0 <= x <= n for x in (i, j, k, l)):
            raise FcidumpError(f"line {lineno}: index out of range 1..{n}")
        if i == j == k == l == 0:
            e_core = val
        elif k == l == 0 and i and j:
            key = (min(i, j), max(i, j))
            if key in seen_h and abs(seen_h[key][0] - val) > SYM_TOL:
                raise FcidumpError(f"line {lineno}: h{key} disagrees with line {seen_h[key][1]}")
            seen_h[key] = (val, lineno)
            h[i - 1, j - 1] = h[j - 1, i - 1] = val
        elif i and j and k and l:
            orbit = _pair_orbits(i - 1, j - 1, k - 1, l - 1)
            key = min(orbit)
            if key in seen_g and abs(seen_g[key][0] - val) > SYM_TOL:
                raise FcidumpError(f"line {lineno}: ({i}{j}|{k}{l}) disagrees with line {seen_g[key][1]}")
            seen_g[key] = (val, lineno)
            for t in orbit:
                g[t] = val
        else:
            # orbital energies (i 0 0 0) and other partial-index records carry no
            # information for the Hamiltonian
            continue
    return MolecularIntegrals(n, e_core, h, g, nelec, ms2)


def read_fcidump(path) -> MolecularIntegrals:
    with open(path) as f:
        return parse_fcidump(f.read())


def write_fcidump(ints: MolecularIntegrals, tol: float = 0.0) -> str:
    """FCIDUMP text with unique index tuples; ``repr`` keeps values bit-exact."""
    n = ints.n_spatial
    lines = [f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},",
             "  ORBSYM=" + "1," * n, "  ISYM=1,", " &END"]
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if (i * (i + 1) // 2 + j) < (k * (k + 1) // 2 + l):
                        continue
                    v = ints.g[i, j, k, l]
                    if abs(v) > tol:
                        lines.append(f"{float(v)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            v = ints.h[i, j]
            if abs(v) > tol:
                lines.append(f"{float(v)!r} {i + 1} {j + 1} 0 0")
    lines.append(f"{float(ints.e_core)!r} 0 0 0 0")
    return "\n".join(lines) + "\n"


def synth_integrals(n_spatial: int, seed: int = 0, n_electrons: int | None = None,
                    ms2: int = 0, two_body: bool = True) -> MolecularIntegrals:
    """Seeded random spin-free integrals.

    Uses ``numpy.random.default_rng(seed)`` (PCG64), so integrals are
    reproducible for a given numpy release. h has increasing diagonal
    orbital energies plus symmetric couplings; g is built as a sum of
    symmetric outer products, which makes it 8-fold symmetric and positive
    semidefinite as a (pq|rs) supermatrix.
    """
    if not 2 <= n_spatial <= 5:
        raise ValueError("n_spatial must be between 2 and 5")
    rng = np.random.default_rng(seed)
    n = n_spatial
    off = rng.normal(scale=0.15, size=(n, n))
    h = np.diag(-1.5 + 0.6 * np.arange(n) + rng.normal(scale=0.1, size=n)) + (off + off.T) / 2
    g = np.zeros((n, n, n, n))
    for _ in range(n * (n + 1) // 2):
        l = rng.normal(scale=0.2, size=(n, n))
        l = (l + l.T) / 2
        g += np.einsum("pq,rs->pqrs", l, l)
    g += 0.3 * np.einsum("pq,rs->pqrs", np.eye(n), np.eye(n))
    if not two_body:
        g[:] = 0.0
    if n_electrons is None:
        n_electrons = n if n % 2 == 0 else n - 1
    return MolecularIntegrals(n, float(rng.normal(scale=0.5)), h, g, n_electrons, ms2)

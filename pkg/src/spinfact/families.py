"""Registry of the four spin-adapted double-excitation families and their data."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .dsl import GeneratorSpec, format_spec, parse_line, parse_text, relabel, swap_pairs
from .fock import SENIORITY2, SENIORITY2_IJAA, SENIORITY4, OrbitalSet

FAMILIES = ("s2_iiab", "s2_ijaa", "s4_singlet", "s4_triplet")
_ALIASES = {
    "s2": "s2_iiab", "s2-iiab": "s2_iiab", "s2_iiab": "s2_iiab", "iiab": "s2_iiab",
    "s2-ijaa": "s2_ijaa", "s2_ijaa": "s2_ijaa", "ijaa": "s2_ijaa",
    "s4s": "s4_singlet", "s4-singlet": "s4_singlet", "s4_singlet": "s4_singlet", "singlet": "s4_singlet",
    "s4t": "s4_triplet", "s4-triplet": "s4_triplet", "s4_triplet": "s4_triplet", "triplet": "s4_triplet",
}

# Relabeling that carries the iiab family onto the ijaa family; the image of
# each iiab element is negated so the seeds come out with unit sign.
IJAA_MAP = {"i": "a", "a": "i", "b": "j"}
# The printed seniority-2 center forms use the labels j and a for a and b.
PRINTED_S2_CENTER_MAP = {"j": "a", "a": "b"}


def canonical_family(name: str) -> str:
    key = name.strip().lower().replace(" ", "")
    if key not in _ALIASES:
        raise KeyError(f"unknown family {name!r}; expected one of {', '.join(FAMILIES)}")
    return _ALIASES[key]


def _g(name, lo, up):
    return GeneratorSpec(name, lo, up)


def _elementary(family: str) -> tuple[list[GeneratorSpec], np.ndarray]:
    if family == "s2_iiab":
        specs = [_g("A1", ("i.a", "i.b"), ("a.a", "b.b")), _g("A2", ("i.a", "i.b"), ("a.b", "b.a"))]
        c = np.array([1.0, -1.0]) / np.sqrt(2)
    elif family == "s2_ijaa":
        specs = [_g("A1", ("i.a", "j.b"), ("a.a", "a.b")), _g("A2", ("i.b", "j.a"), ("a.a", "a.b"))]
        c = np.array([1.0, -1.0]) / np.sqrt(2)
    elif family == "s4_singlet":
        specs = [_g("A1", ("i.a", "j.b"), ("a.a", "b.b")), _g("A2", ("i.b", "j.a"), ("a.b", "b.a")),
                 _g("A3", ("i.b", "j.a"), ("a.a", "b.b")), _g("A4", ("i.a", "j.b"), ("a.b", "b.a"))]
        c = np.array([1.0, 1.0, -1.0, -1.0]) / 2
    elif family == "s4_triplet":
        specs = [_g("A1", ("i.a", "j.b"), ("a.a", "b.b")), _g("A2", ("i.b", "j.a"), ("a.b", "b.a")),
                 _g("A3", ("i.b", "j.a"), ("a.a", "b.b")), _g("A4", ("i.a", "j.b"), ("a.b", "b.a")),
                 _g("A5", ("i.a", "j.a"), ("a.a", "b.a")), _g("A6", ("i.b", "j.b"), ("a.b", "b.b"))]
        c = np.array([1.0, 1.0, 1.0, 1.0, 2.0, 2.0]) / (2 * np.sqrt(3))
    else:
        raise KeyError(family)
    return specs, c


@dataclass(frozen=True)
class Family:
    """Static description of one generator family.

    Attributes:
        name: canonical family key.
        orbitals: orbital set fixing the qubit order.
        basis: listed algebra elements, elementary generators first.
        coefficients: weights of the elementary generators in the symmetrized sum.
        center_combos: integer combinations (over listed elements) that are central.
        center_forms: explicit polynomial forms of the central combinations.
    """

    name: str
    orbitals: OrbitalSet
    basis: tuple[GeneratorSpec, ...]
    coefficients: np.ndarray
    center_combos: tuple[dict[int, int], ...]
    center_forms: tuple[GeneratorSpec, ...]
    extra: dict

    @property
    def n_elementary(self) -> int:
        return len(self.coefficients)

    @property
    def elementary(self) -> tuple[GeneratorSpec, ...]:
        return self.basis[: self.n_elementary]


def build_symmetrized(family: str) -> tuple[list[GeneratorSpec], np.ndarray]:
    """Elementary rotation specs and their coefficients for one family."""
    return _elementary(canonical_family(family))


def _read(fname: str) -> str:
    return resources.files("spinfact.data").joinpath(fname).read_text()


def derive_ijaa(iiab_basis, iiab_center_forms):
    """Carry the iiab basis and center forms onto the ijaa family."""
    def carry(s):
        s = relabel(s, IJAA_MAP, flip=True)
        return swap_pairs(s) if s.lower[0][0] in "ab" else s

    return [carry(s) for s in iiab_basis], [carry(s) for s in iiab_center_forms]


def resolved_s2_center_forms() -> list[GeneratorSpec]:
    """Printed seniority-2 center forms with their labels substituted."""
    return [relabel(s, PRINTED_S2_CENTER_MAP) for s in parse_text(_read("s2_iiab_center_printed.gen"))]


@lru_cache(maxsize=None)
def load_family(name: str) -> Family:
    """Load a family's listed basis, center data and symmetrized coefficients."""
    name = canonical_family(name)
    meta = json.loads(_read("structure.json"))
    if name == "s2_ijaa":
        src = meta["s2_iiab"]
        basis = parse_text(_read("s2_ijaa.gen"))
        forms = parse_text(_read("s2_ijaa_center.gen"))
        orbs = SENIORITY2_IJAA
    else:
        src = meta[name]
        basis = parse_text(_read(f"{name}.gen"))
        if name == "s2_iiab":
            forms = resolved_s2_center_forms()
            orbs = SENIORITY2
        else:
            forms = parse_text(_read(f"{name}_center.gen"))
            orbs = SENIORITY4
    combos = tuple({int(k): int(v) for k, v in z} for z in src["center"])
    extra = {k: v for k, v in src.items() if k not in ("center", "n_elementary")}
    specs, c = _elementary(name)
    for a, b in zip(specs, basis):
        if (a.lower, a.upper, a.signed_polynomial()) != (b.lower, b.upper, b.signed_polynomial()):
            raise ValueError(f"{name}: listed {b.name} is not the elementary generator {format_spec(a)}")
    return Family(name, orbs, tuple(basis), c, combos, tuple(forms), extra)


def singlet_table() -> np.ndarray:
    """Signed integer commutation table of the 28-element singlet basis."""
    rows = [list(map(int, line.split())) for line in _read("s4_singlet_table.txt").splitlines() if line.strip()]
    return np.array(rows, dtype=int)


def write_ijaa_data(directory) -> None:
    """Regenerate the ijaa data files from the iiab ones."""
    from pathlib import Path

    d = Path(directory)
    basis, forms = derive_ijaa(parse_text(_read("s2_iiab.gen")), resolved_s2_center_forms())
    d.joinpath("s2_ijaa.gen").write_text("".join(format_spec(s, SENIORITY2_IJAA) + "\n" for s in basis))
    d.joinpath("s2_ijaa_center.gen").write_text("".join(format_spec(s, SENIORITY2_IJAA) + "\n" for s in forms))

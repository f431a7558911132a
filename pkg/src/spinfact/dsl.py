"""Text format for algebra elements: occupation polynomial times a rotation.

One element per line::

    A3 = (1 - n(i.a) - n(i.b)) * G(a.a,b.b -> a.b,b.a)
    A4 = -(1 - n(a.a) - n(b.b) + 2*n(a.a)*n(b.b)) * G(i.a,i.b -> a.b,b.a)

``G(l1,l2 -> u1,u2)`` is a+_u1 a+_u2 a_l2 a_l1 minus its adjoint.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .fock import OrbitalSet, build_g, occupations, polynomial_diag

Monomial = tuple[int, frozenset]

_LINE = re.compile(r"^\s*(?P<name>\w+)\s*=\s*(?P<rhs>.+?)\s*$")
_BASE = re.compile(r"G\(\s*([ijab]\.[ab])\s*,\s*([ijab]\.[ab])\s*->\s*([ijab]\.[ab])\s*,\s*([ijab]\.[ab])\s*\)$")
_TERM = re.compile(r"([+-])?\s*([^+-]+)")


class DslError(ValueError):
    """Malformed generator line."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Symbolic algebra element ``sign * poly * G(lower -> upper)``.

    Attributes:
        name: element label, e.g. ``"A3"``.
        lower: pair of orbital labels annihilated by the excitation part.
        upper: pair of orbital labels created by the excitation part.
        polynomial: tuple of (integer coefficient, frozenset of orbital labels).
            The empty tuple is not allowed; a bare rotation has ``((1, {}),)``.
        sign: +1 or -1.
    """

    name: str
    lower: tuple[str, str]
    upper: tuple[str, str]
    polynomial: tuple[Monomial, ...] = ((1, frozenset()),)
    sign: int = 1

    def __post_init__(self):
        base = set(self.lower) | set(self.upper)
        if len(base) != 4:
            raise DslError(f"{self.name}: rotation orbitals must be distinct")
        for _, fs in self.polynomial:
            if fs & base:
                raise DslError(f"{self.name}: polynomial shares orbitals {sorted(fs & base)} with the rotation")
        if self.sign not in (1, -1):
            raise DslError(f"{self.name}: sign must be +-1")

    @property
    def orbitals(self) -> set[str]:
        return set(self.lower) | set(self.upper) | set().union(*(fs for _, fs in self.polynomial))

    def signed_polynomial(self) -> dict[frozenset, int]:
        """Polynomial with the overall sign folded in, zero terms dropped."""
        out: dict[frozenset, int] = {}
        for c, fs in self.polynomial:
            out[fs] = out.get(fs, 0) + self.sign * c
        return {k: v for k, v in out.items() if v}

    def to_dsl(self, orbs: OrbitalSet | None = None) -> str:
        return format_spec(self, orbs)

    def matrix(self, orbs: OrbitalSet) -> sp.csr_matrix:
        return build_generator(self, orbs)


def _mono_key(fs: frozenset, orbs: OrbitalSet | None):
    order = orbs.index if orbs is not None else {}
    return (len(fs), sorted(order.get(x, 99) for x in fs), sorted(fs))


def format_spec(spec: GeneratorSpec, orbs: OrbitalSet | None = None) -> str:
    """Render a spec back to its one-line text form."""
    g = f"G({spec.lower[0]},{spec.lower[1]} -> {spec.upper[0]},{spec.upper[1]})"
    poly = [(c, fs) for c, fs in spec.polynomial if c]
    sign = "-" if spec.sign < 0 else ""
    if poly == [(1, frozenset())]:
        return f"{spec.name} = {sign}{g}"
    parts = []
    for k, (c, fs) in enumerate(poly):
        factors = [f"n({x})" for x in sorted(fs, key=lambda x: (orbs.index[x] if orbs else 0, x))]
        mag = abs(c)
        body = "*".join(([str(mag)] if mag != 1 or not factors else []) + factors)
        if k == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return f"{spec.name} = {sign}({' '.join(parts)}) * {g}"


def parse_line(line: str) -> GeneratorSpec:
    """Parse one element line into a :class:`GeneratorSpec`.

    Raises:
        DslError: on any syntax problem.
    """
    m = _LINE.match(line)
    if not m:
        raise DslError(f"cannot parse {line!r}")
    name, rhs = m.group("name"), m.group("rhs")
    sign = 1
    if rhs.startswith("-"):
        sign, rhs = -1, rhs[1:].lstrip()
    poly: tuple[Monomial, ...] = ((1, frozenset()),)
    if rhs.startswith("("):
        depth = 0
        for k, ch in enumerate(rhs):
            depth += ch == "("
            depth -= ch == ")"
            if depth == 0:
                break
        inner, rest = rhs[1:k], rhs[k + 1:].strip()
        if not rest.startswith("*"):
            raise DslError(f"{name}: expected '*' after polynomial")
        rhs = rest[1:].strip()
        poly = _parse_poly(inner, name)
    b = _BASE.match(rhs)
    if not b:
        raise DslError(f"{name}: bad rotation {rhs!r}")
    lo = (b.group(1), b.group(2))
    up = (b.group(3), b.group(4))
    return GeneratorSpec(name, lo, up, poly, sign)


def _parse_poly(text: str, name: str) -> tuple[Monomial, ...]:
    text = text.strip()
    out = []
    pos = 0
    for m in _TERM.finditer(text):
        if text[pos:m.start()].strip():
            raise DslError(f"{name}: stray text in polynomial")
        pos = m.end()
        s = -1 if m.group(1) == "-" else 1
        coef = 1
        fs = set()
        for f in m.group(2).split("*"):
            f = f.strip()
            if re.fullmatch(r"\d+", f):
                coef *= int(f)
            elif re.fullmatch(r"n\([ijab]\.[ab]\)", f):
                fs.add(f[2:-1])
            else:
                raise DslError(f"{name}: bad factor {f!r}")
        out.append((s * coef, frozenset(fs)))
    if not out:
        raise DslError(f"{name}: empty polynomial")
    return tuple(out)


def parse_text(text: str) -> list[GeneratorSpec]:
    specs = []
    for k, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            specs.append(parse_line(line))
        except DslError as e:
            raise DslError(f"line {k}: {e}") from None
    return specs


def build_generator(spec: GeneratorSpec, orbs: OrbitalSet) -> sp.csr_matrix:
    """Matrix of ``sign * poly * G`` on the Fock space of ``orbs``.

    The polynomial and the rotation act on disjoint orbitals, so the two
    factors commute and the product is anti-Hermitian.
    """
    n = orbs.n
    g = build_g([orbs[x] for x in spec.lower], [orbs[x] for x in spec.upper], n)
    mono = [(c, [orbs[x] for x in fs]) for c, fs in spec.polynomial]
    d = polynomial_diag(mono, n)
    m = (sp.diags(spec.sign * d) @ g).tocsr()
    m.eliminate_zeros()
    return m


def recover_polynomial(m: sp.spmatrix, lower, upper, orbs: OrbitalSet) -> dict[frozenset, int]:
    """Re-derive integer polynomial coefficients of ``m = p * G`` by projection.

    For every occupation pattern of the non-rotation orbitals the value of p
    is the projection of m onto the restricted rotation; a Moebius inversion
    over subsets then yields the monomial coefficients.

    Returns:
        Mapping from frozenset of orbital labels to integer coefficient.

    Raises:
        ValueError: if projections are not integers or m is not of that form.
    """
    n = orbs.n
    base = set(lower) | set(upper)
    rest = [x for x in orbs.labels if x not in base]
    g = build_g([orbs[x] for x in lower], [orbs[x] for x in upper], n).tocoo()
    occ = occupations(n)
    mm = sp.csr_matrix(m)
    vals = np.asarray(mm[g.row, g.col]).ravel()
    cols = [orbs[x] for x in rest]
    key = occ[g.row][:, cols] @ (1 << np.arange(len(cols)))
    value = {}
    for pat in range(1 << len(cols)):
        sel = key == pat
        num = float(vals[sel] @ g.data[sel])
        den = float(g.data[sel] @ g.data[sel])
        value[pat] = num / den
    resid = sp.csr_matrix(m) - sp.diags(np.array([value[k] for k in _pattern_of_all(occ, cols)])) @ g.tocsr()
    if abs(resid).sum() > 1e-9:
        raise ValueError("matrix is not a polynomial multiple of the rotation")
    coeffs = {}
    for pat in range(1 << len(cols)):
        # Moebius inversion: c_S = sum_{T subset S} (-1)^{|S|-|T|} p(T)
        members = [k for k in range(len(cols)) if pat >> k & 1]
        c = 0.0
        for r in range(len(members) + 1):
            for sub in combinations(members, r):
                c += (-1) ** (len(members) - r) * value[sum(1 << k for k in sub)]
        ci = int(round(c))
        if abs(c - ci) > 1e-9:
            raise ValueError(f"non-integer coefficient {c}")
        if ci:
            coeffs[frozenset(rest[k] for k in members)] = ci
    return coeffs


def _pattern_of_all(occ, cols):
    return occ[:, cols] @ (1 << np.arange(len(cols)))


def relabel(spec: GeneratorSpec, mapping: Mapping[str, str], name: str | None = None,
            flip: bool = False) -> GeneratorSpec:
    """Rename spatial labels (``{"i": "a", ...}``) in a spec.

    Args:
        spec: source element.
        mapping: spatial-label substitution; unmapped labels are kept.
        name: optional new element name.
        flip: negate the overall sign.
    """
    sub = lambda x: f"{mapping.get(x[0], x[0])}.{x[2]}"
    poly = tuple((c, frozenset(sub(x) for x in fs)) for c, fs in spec.polynomial)
    return replace(spec, name=name or spec.name, lower=tuple(map(sub, spec.lower)),
                   upper=tuple(map(sub, spec.upper)), polynomial=poly,
                   sign=-spec.sign if flip else spec.sign)


def swap_pairs(spec: GeneratorSpec) -> GeneratorSpec:
    """Same operator written with lower and upper pairs exchanged."""
    return replace(spec, lower=spec.upper, upper=spec.lower, sign=-spec.sign)

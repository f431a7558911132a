import numpy as np
import pytest

from spinfact.dsl import (DslError, GeneratorSpec, build_generator, format_spec, parse_line, parse_text,
                          recover_polynomial, relabel, swap_pairs)
from spinfact.families import FAMILIES, load_family
from spinfact.fock import SENIORITY2, SENIORITY4


def test_parse_and_format_round_trip():
    line = "A3 = (1 - n(i.a) - n(i.b)) * G(a.a,b.b -> a.b,b.a)"
    spec = parse_line(line)
    assert spec.name == "A3"
    assert spec.lower == ("a.a", "b.b")
    assert spec.signed_polynomial() == {frozenset(): 1, frozenset({"i.a"}): -1, frozenset({"i.b"}): -1}
    assert parse_line(format_spec(spec)) == spec


def test_leading_minus():
    spec = parse_line("A4 = -(1 - n(a.a)) * G(i.a,i.b -> a.b,b.b)")
    assert spec.signed_polynomial() == {frozenset(): -1, frozenset({"a.a"}): 1}


@pytest.mark.parametrize("bad", [
    "A1 = G(i.a,i.a -> a.a,b.b)",
    "A1 = n(i.a) * G(i.a,i.b -> a.a,b.b)",
    "A1 = G(i.a,i.b => a.a,b.b)",
    "nonsense",
])
def test_malformed_lines_rejected(bad):
    with pytest.raises(DslError):
        parse_line(bad)


@pytest.mark.parametrize("family", FAMILIES)
def test_listed_elements_round_trip_through_matrices(family):
    fam = load_family(family)
    for spec in fam.basis[:12]:
        m = build_generator(spec, fam.orbitals)
        assert recover_polynomial(m, spec.lower, spec.upper, fam.orbitals) == spec.signed_polynomial()


def test_text_round_trip_is_stable():
    fam = load_family("s4_singlet")
    text = "".join(format_spec(s, fam.orbitals) + "\n" for s in fam.basis)
    again = "".join(format_spec(s, fam.orbitals) + "\n" for s in parse_text(text))
    assert text == again


def test_swap_pairs_is_the_same_operator():
    spec = parse_line("A1 = (1 - n(b.a)) * G(i.a,i.b -> a.a,a.b)")
    a = build_generator(spec, SENIORITY2)
    b = build_generator(swap_pairs(spec), SENIORITY2)
    assert abs(a - b).max() == 0


def test_relabel_with_flip():
    spec = GeneratorSpec("A1", ("i.a", "i.b"), ("a.a", "b.b"))
    r = relabel(spec, {"a": "j"}, flip=True)
    assert r.upper == ("j.a", "b.b") and r.sign == -1
    assert abs(build_generator(r, SENIORITY4) + build_generator(relabel(spec, {"a": "j"}), SENIORITY4)).max() == 0

import random

import pytest
from hypothesis import given

from qlam import syntax as syn
from qlam.types import (
    BIT,
    QBIT,
    TOP,
    IArrow,
    IConst,
    IProd,
    ITop,
    IVar,
    QType,
    TypeSyntaxError,
    arrow,
    bang,
    collapse,
    constant_type,
    decorate,
    format_itype,
    format_type,
    lift,
    parse_itype,
    parse_type,
    skeleton,
    subtype,
    tensor,
    tvar,
    type_equiv,
)

from .strategies import qtypes, random_itype, random_supertype, random_type, related_types

A = tvar("A")
B = tvar("B")


def test_subtype_examples():
    assert subtype(bang(A), A)
    assert subtype(parse_type("!(bit -o qbit)"), parse_type("!(!bit -o qbit)"))
    assert not subtype(BIT, bang(BIT))


def test_type_equiv_examples():
    assert type_equiv(A, A)
    assert type_equiv(bang(BIT, 2), bang(BIT))
    assert not type_equiv(bang(BIT), BIT)


def test_subtype_requires_matching_heads():
    assert not subtype(BIT, QBIT)
    assert not subtype(arrow(BIT, BIT), tensor(BIT, BIT))
    assert not subtype(A, B)
    assert subtype(TOP, TOP)


def test_arrow_variance():
    # contravariant domain: a function accepting bit also accepts !bit
    assert subtype(arrow(BIT, QBIT), arrow(bang(BIT), QBIT))
    assert not subtype(arrow(bang(BIT), QBIT), arrow(BIT, QBIT))
    # covariant codomain
    assert subtype(arrow(BIT, bang(QBIT)), arrow(BIT, QBIT))


def test_skeleton_examples():
    assert skeleton(parse_type("!(bit -o qbit)")) == IArrow(IConst("bit"), IConst("qbit"))
    assert skeleton(bang(tvar("X"), 2)) == IVar("X")
    assert skeleton(tensor(bang(A), B)) == IProd(IVar("A"), IVar("B"))


def test_lift_examples():
    assert lift(IArrow(IConst("bit"), IConst("qbit"))) == arrow(BIT, QBIT)
    assert lift(ITop()) == TOP
    x, y = IVar("X"), IVar("Y")
    assert lift(IArrow(IProd(x, y), x)) == arrow(tensor(tvar("X"), tvar("Y")), tvar("X"))


def test_decorate_examples():
    u = IArrow(IConst("bit"), IConst("qbit"))
    assert decorate(u, parse_type("!(bit -o qbit)")) == parse_type("!(bit -o qbit)")
    assert decorate(IVar("X"), bang(arrow(A, B))) == bang(tvar("X"))


def test_constant_types_carry_a_bang():
    assert constant_type(syn.Bit(0)) == bang(BIT)
    assert constant_type(syn.New()) == parse_type("!(bit -o qbit)")
    assert constant_type(syn.Meas()) == parse_type("!(qbit -o !bit)")
    assert constant_type(syn.Gate("CNOT", 2)) == parse_type("!(qbit (*) qbit -o qbit (*) qbit)")
    for c in (syn.Bit(1), syn.New(), syn.Meas(), syn.Gate("H", 1)):
        assert constant_type(c).bangs == 1


def test_bang_normal_form():
    assert bang(bang(A)) == QType(2, A.head)
    assert parse_type("!!A") == parse_type("!(!A)")


@pytest.mark.parametrize(
    "text",
    [
        "bit",
        "!qbit",
        "T",
        "!!X",
        "bit -o qbit -o bit",
        "(bit -o qbit) -o bit",
        "bit (*) qbit (*) bit",
        "(bit (*) qbit) (*) bit",
        "!(bit -o !(qbit (*) T))",
        "(qbit -o bit (*) bit) (*) (bit (*) bit -o qbit)",
    ],
)
def test_type_syntax_roundtrip(text):
    t = parse_type(text)
    assert parse_type(format_type(t)) == t
    assert format_type(t) == text


def test_type_syntax_precedence():
    assert parse_type("!bit -o qbit") == arrow(bang(BIT), QBIT)
    assert parse_type("bit (*) bit -o qbit") == arrow(tensor(BIT, BIT), QBIT)
    assert parse_itype("X -> Y -> X") == IArrow(IVar("X"), IArrow(IVar("Y"), IVar("X")))
    assert format_itype(IArrow(IArrow(IVar("X"), IVar("Y")), IVar("X"))) == "(X -> Y) -> X"


@pytest.mark.parametrize("text", ["", "bit -o", "(bit", "bit qbit", "-o bit", "bit $"])
def test_type_syntax_errors(text):
    with pytest.raises(TypeSyntaxError):
        parse_type(text)


def test_collapse_is_equivalent():
    t = parse_type("!!(!!!bit -o !!(qbit (*) !!T))")
    assert collapse(t) == parse_type("!(!bit -o !(qbit (*) !T))")
    assert type_equiv(t, collapse(t))


@given(qtypes())
def test_subtype_reflexive(a):
    assert subtype(a, a)
    if a.bangs:
        assert subtype(a, QType(0, a.head))


@given(related_types())
def test_constructed_pairs_are_subtypes(pair):
    a, b = pair
    assert subtype(a, b)
    assert skeleton(a) == skeleton(b)


@given(qtypes(), qtypes())
def test_bang_lemma_and_monotonicity(a, b):
    if subtype(a, bang(b)):
        assert a.bangs >= 1
    if subtype(a, b):
        for n in range(3):
            for m in range(3):
                if m == 0 or n >= 1:
                    assert subtype(bang(a, n), bang(b, m))


def test_transitivity_on_chains():
    r = random.Random(7)
    for _ in range(500):
        a = random_type(4, r)
        b = random_supertype(a, r)
        c = random_supertype(b, r)
        assert subtype(a, c)


def test_decorate_preserves_skeleton():
    r = random.Random(11)
    for _ in range(500):
        u = random_itype(4, r)
        a = random_type(4, r)
        assert skeleton(decorate(u, a)) == u
        # decorating along a type with the same skeleton gives that type back
        assert decorate(skeleton(a), a) == a
        assert skeleton(lift(u)) == u

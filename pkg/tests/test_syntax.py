import pytest
from hypothesis import assume, given, settings

from qlam import syntax as syn
from qlam.syntax import App, Bit, Gate, If, Lam, LetPair, Meas, New, Pair, ParseError, Star, Var, parse, pretty

from .strategies import terms, values

PLUS = r"(\x y. if x then (if y then 0 else 1) else (if y then 1 else 0))"


def test_parse_identity():
    assert parse(r"\x.x") == Lam("x", Var("x"))
    assert parse("λx.x") == Lam("x", Var("x"))


def test_parse_cbv_example():
    m = parse(rf"(\x. {PLUS} x x) (meas (H (new 0)))")
    plus = Lam("x", Lam("y", If(Var("x"), If(Var("y"), Bit(0), Bit(1)), If(Var("y"), Bit(1), Bit(0)))))
    expected = App(Lam("x", App(App(plus, Var("x")), Var("x"))), App(Meas(), App(Gate("H", 1), App(New(), Bit(0)))))
    assert m == expected


def test_parse_let_pair_with_free_gate_name():
    m = parse("let <x,y> = EPR * in x", strict=False)
    assert m == LetPair("x", "y", App(Var("EPR"), Star()), Var("x"))


def test_let_sugar_and_tuples():
    assert parse("let f = new in f 0") == App(Lam("f", App(Var("f"), Bit(0))), New())
    assert parse("<0, 1, *>") == Pair(Bit(0), Pair(Bit(1), Star()))
    assert parse(r"\<a, b>. <b, a>") == Lam("z", LetPair("a", "b", Var("z"), Pair(Var("b"), Var("a"))))


def test_application_is_left_associative():
    assert parse("f a b", strict=False) == App(App(Var("f"), Var("a")), Var("b"))


def test_comments_are_ignored():
    assert parse("-- a comment\n0 -- another\n") == Bit(0)


@pytest.mark.parametrize(
    "source, fragment",
    [
        ("", "empty program"),
        (r"\x.", "expected"),
        ("FOO 0", "unknown gate"),
        (r"\p0. p0", "reserved"),
        ("let <p1, y> = <0, 0> in y", "reserved"),
        ("p3", "register"),
        ("(0", "expected"),
        ("let <x, x> = <0, 0> in x", "twice"),
    ],
)
def test_parse_errors(source, fragment):
    with pytest.raises(ParseError) as exc:
        parse(source)
    assert fragment in str(exc.value)


def test_parse_error_position():
    with pytest.raises(ParseError) as exc:
        parse("0\n  ) ")
    assert (exc.value.line, exc.value.column) == (2, 3)


def test_registers_allowed_in_fixtures():
    assert parse("CNOT <p0, p1>", registers=True) == App(Gate("CNOT", 2), Pair(Var("p0"), Var("p1")))


def test_free_vars():
    assert syn.free_vars(Lam("x", Var("x"))) == set()
    assert syn.free_vars(Lam("y", Var("x"))) == {"x"}
    body = parse(
        "let <x, y> = EPR * in let f = BellMeasure x in let g = U y in <f, g>",
        strict=False,
    )
    assert syn.free_vars(body) == {"EPR", "BellMeasure", "U"}


def test_substitute_examples():
    assert syn.substitute(Var("x"), "x", Bit(0)) == Bit(0)
    captured = syn.substitute(Lam("y", Var("x")), "x", Var("y"))
    assert isinstance(captured, Lam) and captured.var != "y" and captured.body == Var("y")
    assert syn.substitute(Pair(Var("x"), Var("z")), "x", Meas()) == Pair(Meas(), Var("z"))


def test_substitute_respects_shadowing():
    m = Lam("x", Var("x"))
    assert syn.substitute(m, "x", Bit(1)) == m
    m = LetPair("x", "y", Var("x"), Var("x"))
    assert syn.substitute(m, "x", Bit(1)) == LetPair("x", "y", Bit(1), Var("x"))


def test_is_value_examples():
    assert syn.is_value(Pair(Bit(0), Lam("x", Var("x"))))
    assert not syn.is_value(App(New(), Bit(0)))
    assert not syn.is_value(LetPair("x", "y", Pair(Bit(0), Bit(1)), Var("x")))
    assert all(syn.is_value(v) for v in (Var("x"), Bit(1), Meas(), New(), Gate("H", 1), Star()))
    assert not syn.is_value(If(Bit(0), Bit(0), Bit(1)))


def test_pretty_examples():
    assert pretty(Lam("x", Var("x"))) == r"\x.x"
    assert pretty(App(App(Var("f"), Var("a")), Var("b"))) == "f a b"
    assert pretty(If(Bit(1), Bit(0), Bit(1))) == "if 1 then 0 else 1"
    assert pretty(App(Var("f"), App(Var("a"), Var("b")))) == "f (a b)"
    assert pretty(Pair(Bit(0), Pair(Bit(1), Star()))) == "<0, 1, *>"


def test_alpha_equality():
    assert Lam("x", Var("x")) == Lam("y", Var("y"))
    assert Lam("x", Var("y")) != Lam("y", Var("y"))
    assert hash(Lam("x", Lam("y", Var("x")))) == hash(Lam("a", Lam("b", Var("a"))))
    assert LetPair("x", "y", Star(), Var("y")) != LetPair("x", "y", Star(), Var("x"))


@given(terms())
def test_roundtrip(m):
    source = pretty(m)
    back = parse(source, strict=False, registers=True)
    assert back == m


@given(terms(), values(), values())
@settings(max_examples=200)
def test_substitution_composition(m, v, w):
    x, y = "x", "y"
    assume(x not in syn.free_vars(w))
    lhs = syn.substitute(syn.substitute(m, x, v), y, w)
    rhs = syn.substitute(syn.substitute(m, y, w), x, syn.substitute(v, y, w))
    assert lhs == rhs


@given(terms(), values())
def test_substitution_free_vars(m, v):
    out = syn.substitute(m, "x", v)
    if "x" in syn.free_vars(m):
        assert syn.free_vars(out) <= (syn.free_vars(m) - {"x"}) | syn.free_vars(v)
    else:
        assert out == m


@given(terms(), terms(), terms())
def test_alpha_is_an_equivalence_and_congruence(a, b, c):
    renamed = syn.rename_apart(a, {"x", "y", "z", "f"})
    assert renamed == a and a == renamed
    if a == b and b == c:
        assert a == c
    assert App(renamed, b) == App(a, b)
    assert Pair(b, renamed) == Pair(b, a)
    assert Lam("x", renamed) == Lam("x", a)
    assert If(c, renamed, b) == If(c, a, b)
    assert LetPair("x", "y", renamed, b) == LetPair("x", "y", a, b)

"""Terms of the quantum lambda calculus: AST, parser, printer, substitution.

Terms compare by alpha-equivalence: ``Lam("x", Var("x")) == Lam("y", Var("y"))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

REGISTER_NAME = re.compile(r"p\d+\Z")


def is_register_name(name: str) -> bool:
    return REGISTER_NAME.match(name) is not None


class Term:
    """Base class; equality and hashing go through a nameless key."""

    __slots__ = ()

    @cached_property
    def _key(self) -> tuple:
        return _nameless(self, ())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Term):
            return NotImplemented
        return self is other or self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True, eq=False)
class Var(Term):
    name: str


@dataclass(frozen=True, eq=False)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True, eq=False)
class Lam(Term):
    var: str
    body: Term


@dataclass(frozen=True, eq=False)
class If(Term):
    cond: Term
    then: Term
    else_: Term


@dataclass(frozen=True, eq=False)
class Bit(Term):
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError(f"bit constant must be 0 or 1, got {self.value!r}")


@dataclass(frozen=True, eq=False)
class Meas(Term):
    pass


@dataclass(frozen=True, eq=False)
class New(Term):
    pass


@dataclass(frozen=True, eq=False)
class Gate(Term):
    name: str
    arity: int


@dataclass(frozen=True, eq=False)
class Star(Term):
    pass


@dataclass(frozen=True, eq=False)
class Pair(Term):
    left: Term
    right: Term


@dataclass(frozen=True, eq=False)
class LetPair(Term):
    x: str
    y: str
    bound: Term
    body: Term

    def __post_init__(self):
        if self.x == self.y:
            raise ValueError(f"let-pair binders must differ, got {self.x!r} twice")


def _nameless(m: Term, scope: tuple[str, ...]) -> tuple:
    # de Bruijn style: bound variables become their distance to the binder
    match m:
        case Var(name):
            for depth, bound in enumerate(reversed(scope)):
                if bound == name:
                    return ("bv", depth)
            return ("fv", name)
        case App(f, a):
            return ("app", _nameless(f, scope), _nameless(a, scope))
        case Lam(x, body):
            return ("lam", _nameless(body, scope + (x,)))
        case If(c, t, e):
            return ("if", _nameless(c, scope), _nameless(t, scope), _nameless(e, scope))
        case Bit(v):
            return ("bit", v)
        case Meas():
            return ("meas",)
        case New():
            return ("new",)
        case Gate(name, arity):
            return ("gate", name, arity)
        case Star():
            return ("star",)
        case Pair(left, right):
            return ("pair", _nameless(left, scope), _nameless(right, scope))
        case LetPair(x, y, bound, body):
            return ("let", _nameless(bound, scope), _nameless(body, scope + (x, y)))
    raise TypeError(f"not a term: {m!r}")


def alpha_equivalent(a: Term, b: Term) -> bool:
    return a == b


def tuple_term(items: Iterable[Term]) -> Term:
    """Right-nested pair ``<M1, <M2, ...>>``; a single item is returned as is."""
    items = list(items)
    if not items:
        raise ValueError("tuple needs at least one component")
    result = items[-1]
    for item in reversed(items[:-1]):
        result = Pair(item, result)
    return result


# ---------------------------------------------------------------------------
# Free variables, values, substitution


def free_vars(m: Term) -> frozenset[str]:
    match m:
        case Var(name):
            return frozenset((name,))
        case App(f, a):
            return free_vars(f) | free_vars(a)
        case Lam(x, body):
            return free_vars(body) - {x}
        case If(c, t, e):
            return free_vars(c) | free_vars(t) | free_vars(e)
        case Pair(left, right):
            return free_vars(left) | free_vars(right)
        case LetPair(x, y, bound, body):
            return free_vars(bound) | (free_vars(body) - {x, y})
        case _:
            return frozenset()


def bound_vars(m: Term) -> frozenset[str]:
    match m:
        case App(f, a):
            return bound_vars(f) | bound_vars(a)
        case Lam(x, body):
            return bound_vars(body) | {x}
        case If(c, t, e):
            return bound_vars(c) | bound_vars(t) | bound_vars(e)
        case Pair(left, right):
            return bound_vars(left) | bound_vars(right)
        case LetPair(x, y, bound, body):
            return bound_vars(bound) | bound_vars(body) | {x, y}
        case _:
            return frozenset()


def is_value(m: Term) -> bool:
    match m:
        case Var() | Lam() | Bit() | Meas() | New() | Gate() | Star():
            return True
        case Pair(left, right):
            return is_value(left) and is_value(right)
    return False


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """A variant of ``base`` not in ``avoid``; never a register name."""
    avoid = set(avoid)
    candidate = base + "'"
    while candidate in avoid:
        candidate += "'"
    return candidate


def substitute(m: Term, x: str, v: Term) -> Term:
    """Capture-avoiding ``m[v/x]``."""
    return substitute_many(m, {x: v})


def substitute_many(m: Term, sub: Mapping[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    sub = {k: t for k, t in sub.items() if k in free_vars(m)}
    if not sub:
        return m
    return _subst(m, sub)


def _subst(m: Term, sub: Mapping[str, Term]) -> Term:
    match m:
        case Var(name):
            return sub.get(name, m)
        case App(f, a):
            return App(_subst(f, sub), _subst(a, sub))
        case If(c, t, e):
            return If(_subst(c, sub), _subst(t, sub), _subst(e, sub))
        case Pair(left, right):
            return Pair(_subst(left, sub), _subst(right, sub))
        case Lam(x, body):
            (x,), body, inner = _enter_binders((x,), body, sub)
            return Lam(x, _subst(body, inner)) if inner else Lam(x, body)
        case LetPair(x, y, bound, body):
            bound = _subst(bound, sub)
            (x, y), body, inner = _enter_binders((x, y), body, sub)
            return LetPair(x, y, bound, _subst(body, inner) if inner else body)
    return m


def _enter_binders(binders, body, sub):
    inner = {k: t for k, t in sub.items() if k not in binders and k in free_vars(body)}
    if not inner:
        return binders, body, inner
    incoming = set().union(*(free_vars(t) for t in inner.values()))
    renamed = list(binders)
    for i, b in enumerate(binders):
        if b in incoming:
            avoid = incoming | free_vars(body) | set(renamed) | set(inner)
            new = fresh_name(b, avoid)
            body = _subst(body, {b: Var(new)})
            renamed[i] = new
    return tuple(renamed), body, inner


def rename_apart(m: Term, avoid: Iterable[str] = ()) -> Term:
    """Alpha-variant of ``m`` whose binders are pairwise distinct and
    distinct from its free variables and from ``avoid``."""
    used = set(avoid) | set(free_vars(m))

    def pick(name: str) -> str:
        new = name if name not in used else fresh_name(name, used)
        used.add(new)
        return new

    def go(t: Term) -> Term:
        match t:
            case App(f, a):
                return App(go(f), go(a))
            case If(c, th, el):
                return If(go(c), go(th), go(el))
            case Pair(left, right):
                return Pair(go(left), go(right))
            case Lam(x, body):
                new = pick(x)
                return Lam(new, go(_rename(body, x, new)))
            case LetPair(x, y, bound, body):
                bound = go(bound)
                nx, ny = pick(x), pick(y)
                body = _rename(_rename(body, x, "\0"), y, ny)
                return LetPair(nx, ny, bound, go(_rename(body, "\0", nx)))
        return t

    return go(m)


def _rename(m: Term, old: str, new: str) -> Term:
    if old == new:
        return m
    return _subst(m, {old: Var(new)}) if old in free_vars(m) else m


# ---------------------------------------------------------------------------
# Concrete syntax


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


KEYWORDS = {"if", "then", "else", "let", "in", "meas", "new"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|--[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>[0-9]+)
  | (?P<sym>[\\λ.()<>,=*])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        match = _TOKEN.match(source, pos)
        if match is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        text = match.group()
        if kind != "ws":
            if kind == "ident" and text in KEYWORDS:
                kind = text
            elif kind == "sym":
                kind = "\\" if text == "λ" else text
            tokens.append(_Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = match.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


_ATOM_START = {"ident", "num", "(", "<", "*", "meas", "new"}


class _Parser:
    def __init__(self, source: str, gates: Mapping[str, int], registers: bool, strict: bool):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.gates = gates
        self.registers = registers
        self.strict = strict

    @property
    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek
        if tok.kind != kind:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(f"expected {kind!r}, found {found}", tok.line, tok.column)
        return self.advance()

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek
        return ParseError(message, tok.line, tok.column)

    def binder(self) -> str:
        tok = self.expect("ident")
        if is_register_name(tok.text):
            raise self.error(f"reserved register name {tok.text!r} cannot be bound", tok)
        return tok.text

    def program(self, scope: frozenset[str]) -> Term:
        if self.peek.kind == "eof":
            raise self.error("empty program")
        term = self.term(scope)
        if self.peek.kind != "eof":
            raise self.error(f"unexpected {self.peek.text!r}")
        return term

    def term(self, scope: frozenset[str]) -> Term:
        tok = self.peek
        if tok.kind == "\\":
            return self.lam(scope)
        if tok.kind == "if":
            self.advance()
            cond = self.term(scope)
            self.expect("then")
            then = self.term(scope)
            self.expect("else")
            return If(cond, then, self.term(scope))
        if tok.kind == "let":
            return self.let(scope)
        return self.application(scope)

    def lam(self, scope: frozenset[str]) -> Term:
        self.expect("\\")
        binders = []
        while self.peek.kind in ("ident", "<"):
            if self.peek.kind == "<":
                self.advance()
                x = self.binder()
                self.expect(",")
                y = self.binder()
                self.expect(">")
                if x == y:
                    raise self.error(f"pattern binds {x!r} twice")
                binders.append((x, y))
            else:
                binders.append(self.binder())
        if not binders:
            raise self.error("lambda needs a binder")
        self.expect(".")
        inner = set(scope)
        for b in binders:
            inner.update(b if isinstance(b, tuple) else (b,))
        body = self.term(frozenset(inner))
        for b in reversed(binders):
            if isinstance(b, tuple):
                # \<x,y>.M  ==>  \z. let <x,y> = z in M
                z = fresh_name("z", free_vars(body) | set(b))
                body = Lam(z, LetPair(b[0], b[1], Var(z), body))
            else:
                body = Lam(b, body)
        return body

    def let(self, scope: frozenset[str]) -> Term:
        self.expect("let")
        if self.peek.kind == "<":
            self.advance()
            x = self.binder()
            self.expect(",")
            y = self.binder()
            self.expect(">")
            if x == y:
                raise self.error(f"let-pair binds {x!r} twice")
            self.expect("=")
            bound = self.term(scope)
            self.expect("in")
            body = self.term(scope | {x, y})
            return LetPair(x, y, bound, body)
        name = self.binder()
        self.expect("=")
        bound = self.term(scope)
        self.expect("in")
        body = self.term(scope | {name})
        return App(Lam(name, body), bound)

    def application(self, scope: frozenset[str]) -> Term:
        term = self.atom(scope)
        while self.peek.kind in _ATOM_START:
            term = App(term, self.atom(scope))
        return term

    def atom(self, scope: frozenset[str]) -> Term:
        tok = self.peek
        match tok.kind:
            case "ident":
                self.advance()
                return self.identifier(tok, scope)
            case "num":
                self.advance()
                if tok.text not in ("0", "1"):
                    raise self.error(f"bit constant must be 0 or 1, got {tok.text}", tok)
                return Bit(int(tok.text))
            case "*":
                self.advance()
                return Star()
            case "meas":
                self.advance()
                return Meas()
            case "new":
                self.advance()
                return New()
            case "(":
                self.advance()
                inner = self.term(scope)
                self.expect(")")
                return inner
            case "<":
                self.advance()
                items = [self.term(scope)]
                while self.peek.kind == ",":
                    self.advance()
                    items.append(self.term(scope))
                self.expect(">")
                if len(items) < 2:
                    raise self.error("a tuple needs at least two components", tok)
                return tuple_term(items)
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"expected a term, found {found}")

    def identifier(self, tok: _Token, scope: frozenset[str]) -> Term:
        name = tok.text
        if name in scope:
            return Var(name)
        if name[0].isupper():
            if name in self.gates:
                return Gate(name, self.gates[name])
            if self.strict:
                raise self.error(f"unknown gate name {name!r}", tok)
        if is_register_name(name) and not self.registers:
            raise self.error(f"register reference {name!r} is not allowed in source programs", tok)
        return Var(name)


def default_gate_arities() -> dict[str, int]:
    from .quantum import default_gate_table

    return {name: gate.arity for name, gate in default_gate_table().items()}


def parse(
    source: str,
    gates: Mapping[str, int] | None = None,
    *,
    registers: bool = False,
    strict: bool = True,
) -> Term:
    """Parse a program.

    ``gates`` maps gate names to arities (defaults to the built-in table).
    ``registers`` admits free ``p0, p1, ...`` references (fixtures, traces).
    With ``strict`` off, unknown capitalized names become free variables.
    """
    if gates is None:
        gates = default_gate_arities()
    else:
        gates = {name: getattr(g, "arity", g) for name, g in gates.items()}
    return _Parser(source, gates, registers, strict).program(frozenset())


# ---------------------------------------------------------------------------
# Printing

# precedence levels: 0 = anything, 1 = application operand on the left, 2 = atom
_ANY, _FN, _ATOM = 0, 1, 2


def pretty(m: Term) -> str:
    return _pp(m, _ANY)


def _pp(m: Term, ctx: int) -> str:
    match m:
        case Var(name):
            return name
        case Bit(v):
            return str(v)
        case Meas():
            return "meas"
        case New():
            return "new"
        case Gate(name, _):
            return name
        case Star():
            return "*"
        case Pair():
            items = []
            while isinstance(m, Pair):
                items.append(m.left)
                m = m.right
            items.append(m)
            return "<" + ", ".join(_pp(t, _ANY) for t in items) + ">"
        case App(f, a):
            text = f"{_pp(f, _FN)} {_pp(a, _ATOM)}"
            return text if ctx <= _FN else f"({text})"
        case Lam(x, body):
            text = f"\\{x}.{_pp(body, _ANY)}"
        case If(c, t, e):
            text = f"if {_pp(c, _ANY)} then {_pp(t, _ANY)} else {_pp(e, _ANY)}"
        case LetPair(x, y, bound, body):
            text = f"let <{x}, {y}> = {_pp(bound, _ANY)} in {_pp(body, _ANY)}"
        case _:
            raise TypeError(f"not a term: {m!r}")
    return text if ctx == _ANY else f"({text})"

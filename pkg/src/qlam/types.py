"""Linear types with exponentials, their intuitionistic skeletons, subtyping.

A ``QType`` is stored bang-normalized: a count of outer ``!`` and a head
that is never itself banged, so ``!!A`` and ``!(!A)`` are the same value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from . import syntax as syn


# ---------------------------------------------------------------------------
# Linear types


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class Arrow:
    dom: "QType"
    cod: "QType"


@dataclass(frozen=True)
class Tensor:
    left: "QType"
    right: "QType"


@dataclass(frozen=True)
class Top:
    pass


Head = Union[Const, TVar, Arrow, Tensor, Top]


@dataclass(frozen=True)
class QType:
    bangs: int
    head: Head

    def __post_init__(self):
        if self.bangs < 0:
            raise ValueError("negative bang count")

    def __str__(self) -> str:
        return format_type(self)


def bang(a: QType, n: int = 1) -> QType:
    return QType(a.bangs + n, a.head)


def unbang(a: QType) -> QType:
    return QType(0, a.head)


def arrow(a: QType, b: QType, bangs: int = 0) -> QType:
    return QType(bangs, Arrow(a, b))


def tensor(a: QType, b: QType, bangs: int = 0) -> QType:
    return QType(bangs, Tensor(a, b))


def const(name: str, bangs: int = 0) -> QType:
    return QType(bangs, Const(name))


def tvar(name: str, bangs: int = 0) -> QType:
    return QType(bangs, TVar(name))


BIT = const("bit")
QBIT = const("qbit")
TOP = QType(0, Top())


def tensor_power(a: QType, n: int) -> QType:
    """``a ⊗ (a ⊗ (... ⊗ a))``, matching right-nested tuples."""
    result = a
    for _ in range(n - 1):
        result = tensor(a, result)
    return result


def collapse(a: QType) -> QType:
    """Replace every repeated exponential by a single one (an equivalent type)."""
    head = a.head
    match head:
        case Arrow(d, c):
            head = Arrow(collapse(d), collapse(c))
        case Tensor(l, r):
            head = Tensor(collapse(l), collapse(r))
    return QType(min(a.bangs, 1), head)


# ---------------------------------------------------------------------------
# Subtyping


def subtype(a: QType, b: QType) -> bool:
    """Decide ``a <: b`` with the reversible rule set."""
    if not (b.bangs == 0 or a.bangs >= 1):
        return False
    match a.head, b.head:
        case Const(x), Const(y):
            return x == y
        case TVar(x), TVar(y):
            return x == y
        case Top(), Top():
            return True
        case Arrow(a1, b1), Arrow(a2, b2):
            return subtype(a2, a1) and subtype(b1, b2)
        case Tensor(a1, a2), Tensor(b1, b2):
            return subtype(a1, b1) and subtype(a2, b2)
    return False


def type_equiv(a: QType, b: QType) -> bool:
    return subtype(a, b) and subtype(b, a)


# ---------------------------------------------------------------------------
# Intuitionistic types


@dataclass(frozen=True)
class IConst:
    name: str

    def __str__(self) -> str:
        return format_itype(self)


@dataclass(frozen=True)
class IVar:
    name: str

    def __str__(self) -> str:
        return format_itype(self)


@dataclass(frozen=True)
class IArrow:
    dom: "IType"
    cod: "IType"

    def __str__(self) -> str:
        return format_itype(self)


@dataclass(frozen=True)
class IProd:
    left: "IType"
    right: "IType"

    def __str__(self) -> str:
        return format_itype(self)


@dataclass(frozen=True)
class ITop:
    def __str__(self) -> str:
        return format_itype(self)


IType = Union[IConst, IVar, IArrow, IProd, ITop]


def skeleton(a: QType) -> IType:
    match a.head:
        case Const(name):
            return IConst(name)
        case TVar(name):
            return IVar(name)
        case Arrow(d, c):
            return IArrow(skeleton(d), skeleton(c))
        case Tensor(l, r):
            return IProd(skeleton(l), skeleton(r))
        case Top():
            return ITop()
    raise TypeError(f"not a type: {a!r}")


def lift(u: IType) -> QType:
    match u:
        case IConst(name):
            return const(name)
        case IVar(name):
            return tvar(name)
        case IArrow(d, c):
            return arrow(lift(d), lift(c))
        case IProd(l, r):
            return tensor(lift(l), lift(r))
        case ITop():
            return TOP
    raise TypeError(f"not an intuitionistic type: {u!r}")


def decorate(u: IType, a: QType) -> QType:
    """Decoration of ``u`` along ``a``: copy ``a``'s exponentials where shapes agree."""
    match u, a.head:
        case IArrow(ud, uc), Arrow(ad, ac):
            head = Arrow(decorate(ud, ad), decorate(uc, ac))
        case IProd(ul, ur), Tensor(al, ar):
            head = Tensor(decorate(ul, al), decorate(ur, ar))
        case _:
            head = lift(u).head
    return QType(a.bangs, head)


# ---------------------------------------------------------------------------
# Constants


def constant_type(m: syn.Term) -> QType:
    """The fixed type of a constant term."""
    match m:
        case syn.Bit():
            return bang(BIT)
        case syn.New():
            return arrow(BIT, QBIT, bangs=1)
        case syn.Meas():
            return arrow(QBIT, bang(BIT), bangs=1)
        case syn.Gate(_, k):
            q = tensor_power(QBIT, k)
            return arrow(q, q, bangs=1)
    raise TypeError(f"{m!r} is not a constant")


# ---------------------------------------------------------------------------
# Concrete syntax:  bit  qbit  T  X  !A  A -o B  A (*) B
#
# ``!`` binds tightest, then ``(*)``, then ``-o``; both binary operators
# associate to the right. Lowercase names are type constants, capitalized
# names (other than T) are type variables.


class TypeSyntaxError(ValueError):
    pass


_TYPE_TOKEN = re.compile(r"\s*(?:(-o|\(\*\)|->|[!()*])|([A-Za-z_][A-Za-z0-9_']*))")


def _type_tokens(text: str) -> list[str]:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if m is None:
            raise TypeSyntaxError(f"unexpected {text[pos:].strip()[:10]!r} in type {text!r}")
        tokens.append(m.group(1) or m.group(2))
        pos = m.end()
    return tokens


class _TypeParser:
    def __init__(self, text: str, intuitionistic: bool):
        self.text = text
        self.tokens = _type_tokens(text)
        self.pos = 0
        self.arrow = "->" if intuitionistic else "-o"
        self.product = "*" if intuitionistic else "(*)"
        self.intuitionistic = intuitionistic

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, tok=None):
        got = self.peek()
        if got is None or (tok is not None and got != tok):
            raise TypeSyntaxError(f"expected {tok or 'a type'} in {self.text!r}, found {got or 'end'}")
        self.pos += 1
        return got

    def parse(self):
        if not self.tokens:
            raise TypeSyntaxError("empty type")
        t = self.arrow_type()
        if self.peek() is not None:
            raise TypeSyntaxError(f"trailing {self.peek()!r} in type {self.text!r}")
        return t

    def arrow_type(self):
        left = self.product_type()
        if self.peek() == self.arrow:
            self.take()
            right = self.arrow_type()
            return IArrow(left, right) if self.intuitionistic else arrow(left, right)
        return left

    def product_type(self):
        left = self.prefix_type()
        if self.peek() == self.product:
            self.take()
            right = self.product_type()
            return IProd(left, right) if self.intuitionistic else tensor(left, right)
        return left

    def prefix_type(self):
        tok = self.peek()
        if tok == "!" and not self.intuitionistic:
            self.take()
            return bang(self.prefix_type())
        if tok == "(":
            self.take()
            inner = self.arrow_type()
            self.take(")")
            return inner
        name = self.take()
        if not re.match(r"[A-Za-z_]", name):
            raise TypeSyntaxError(f"unexpected {name!r} in type {self.text!r}")
        if name == "T":
            return ITop() if self.intuitionistic else TOP
        if name[0].isupper():
            return IVar(name) if self.intuitionistic else tvar(name)
        return IConst(name) if self.intuitionistic else const(name)


def parse_type(text: str) -> QType:
    return _TypeParser(text, intuitionistic=False).parse()


def parse_itype(text: str) -> IType:
    return _TypeParser(text, intuitionistic=True).parse()


# precedence: 0 = arrow, 1 = tensor operand, 2 = atom
def format_type(a: QType, prec: int = 0) -> str:
    prefix = "!" * a.bangs
    match a.head:
        case Const(name) | TVar(name):
            return prefix + name
        case Top():
            return prefix + "T"
        case Arrow(d, c):
            text, level = f"{format_type(d, 1)} -o {format_type(c, 0)}", 0
        case Tensor(l, r):
            text, level = f"{format_type(l, 2)} (*) {format_type(r, 1)}", 1
        case _:
            raise TypeError(f"not a type: {a!r}")
    if a.bangs:
        return f"{prefix}({text})"
    return text if prec <= level else f"({text})"


def format_itype(u: IType, prec: int = 0) -> str:
    match u:
        case IConst(name) | IVar(name):
            return name
        case ITop():
            return "T"
        case IArrow(d, c):
            text, level = f"{format_itype(d, 1)} -> {format_itype(c, 0)}", 0
        case IProd(l, r):
            text, level = f"{format_itype(l, 2)} * {format_itype(r, 1)}", 1
        case _:
            raise TypeError(f"not an intuitionistic type: {u!r}")
    return text if prec <= level else f"({text})"


def type_size(a: QType) -> int:
    """Number of type-constructor positions (each can carry a bang)."""
    match a.head:
        case Arrow(d, c):
            return 1 + type_size(d) + type_size(c)
        case Tensor(l, r):
            return 1 + type_size(l) + type_size(r)
    return 1

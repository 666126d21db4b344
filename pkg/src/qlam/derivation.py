"""Quantum typing derivations and an independent rule-instance verifier.

The verifier knows nothing about how derivations are found; it only checks
that every node is an instance of its typing rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import syntax as syn
from .types import (
    BIT,
    Arrow,
    QType,
    Tensor,
    Top,
    bang,
    constant_type,
    format_type,
    subtype,
)

AX1, AX2, IF, APP, LAM1, LAM2 = "ax1", "ax2", "if", "app", "λ1", "λ2"
PAIR_I, UNIT, PAIR_E = "⊗.I", "⊤", "⊗.E"
PAIR_I1, PAIR_E1 = "⊗.I'", "⊗.E'"
SUB = "sub"

RULES = (AX1, AX2, IF, APP, LAM1, LAM2, PAIR_I, UNIT, PAIR_E, PAIR_I1, PAIR_E1, SUB)

TypingContext = Mapping[str, QType]


class TypingError(Exception):
    """A typing judgment has no derivation.

    ``kind`` is one of ``"unbound variable"``, ``"linearity violation"``,
    ``"subtype mismatch"``, ``"side condition"``.
    """

    def __init__(self, kind: str, message: str, variable: str | None = None, types: tuple | None = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.variable = variable
        self.types = types


@dataclass(frozen=True, eq=False)
class Derivation:
    rule: str
    context: Mapping[str, QType]
    term: syn.Term
    type: QType
    premises: tuple["Derivation", ...] = ()
    note: str = field(default="", compare=False)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def explain(self, indent: str = "  ") -> str:
        """Indented rule tree, conclusion first."""
        lines: list[str] = []
        self._explain(lines, 0, indent)
        return "\n".join(lines)

    def _explain(self, lines, depth, indent):
        ctx = ", ".join(f"{x}:{format_type(a)}" for x, a in sorted(self.context.items()))
        note = f"   [{self.note}]" if self.note else ""
        lines.append(f"{indent * depth}({self.rule}) {ctx} |- {syn.pretty(self.term)} : {format_type(self.type)}{note}")
        for p in self.premises:
            p._explain(lines, depth + 1, indent)


class InvalidDerivation(Exception):
    pass


def verify(d: Derivation) -> None:
    """Raise ``InvalidDerivation`` unless every node instantiates its rule."""
    _verify(d)
    for p in d.premises:
        verify(p)


def is_valid(d: Derivation) -> bool:
    try:
        verify(d)
    except InvalidDerivation:
        return False
    return True


def _fail(d: Derivation, why: str):
    raise InvalidDerivation(f"({d.rule}) at {syn.pretty(d.term)}: {why}")


def _premises(d: Derivation, n: int):
    if len(d.premises) != n:
        _fail(d, f"expected {n} premises, got {len(d.premises)}")
    return d.premises


def _check_split(d: Derivation, parts: list[Mapping[str, QType]]):
    """Node context must be the union of the parts; shared bindings are banged."""
    ctx = d.context
    seen: dict[str, int] = {}
    for part in parts:
        for x, a in part.items():
            if x not in ctx or ctx[x] != a:
                _fail(d, f"premise binding {x}:{format_type(a)} not in conclusion context")
            seen[x] = seen.get(x, 0) + 1
    for x in ctx:
        if x not in seen:
            _fail(d, f"binding {x} dropped by context split")
    for x, count in seen.items():
        if count > 1 and ctx[x].bangs < 1:
            _fail(d, f"non-exponential binding {x}:{format_type(ctx[x])} shared between premises")


def _verify(d: Derivation) -> None:
    m, a, ctx = d.term, d.type, d.context
    if d.rule == SUB:
        (p,) = _premises(d, 1)
        if p.term != m:
            _fail(d, "premise term differs")
        if set(p.context) != set(ctx) or not all(subtype(ctx[x], p.context[x]) for x in ctx):
            _fail(d, "context is not a pointwise subtype of the premise context")
        if not subtype(p.type, a):
            _fail(d, f"{format_type(p.type)} is not a subtype of {format_type(a)}")
        return
    match m:
        case syn.Var(x):
            if d.rule != AX1:
                _fail(d, "variables are typed by (ax1)")
            _premises(d, 0)
            if x not in ctx:
                _fail(d, f"{x} not in context")
            if not subtype(ctx[x], a):
                _fail(d, f"{format_type(ctx[x])} is not a subtype of {format_type(a)}")
        case syn.Bit() | syn.New() | syn.Meas() | syn.Gate():
            if d.rule != AX2:
                _fail(d, "constants are typed by (ax2)")
            _premises(d, 0)
            if not subtype(constant_type(m), a):
                _fail(d, f"{format_type(constant_type(m))} is not a subtype of {format_type(a)}")
        case syn.Star():
            if d.rule != UNIT:
                _fail(d, "unit is typed by (⊤)")
            _premises(d, 0)
            if not isinstance(a.head, Top):
                _fail(d, "unit must have type !^n T")
        case syn.App(f, arg):
            if d.rule != APP:
                _fail(d, "applications are typed by (app)")
            pf, pa = _premises(d, 2)
            if pf.term != f or pa.term != arg:
                _fail(d, "premise terms do not match")
            if pf.type != QType(0, Arrow(pa.type, a)):
                _fail(d, f"function premise has type {format_type(pf.type)}")
            _check_split(d, [pf.context, pa.context])
        case syn.If(c, t, e):
            if d.rule != IF:
                _fail(d, "conditionals are typed by (if)")
            pc, pt, pe = _premises(d, 3)
            if (pc.term, pt.term, pe.term) != (c, t, e):
                _fail(d, "premise terms do not match")
            if pc.type != BIT:
                _fail(d, f"condition has type {format_type(pc.type)}, expected bit")
            if pt.type != a or pe.type != a:
                _fail(d, "branch types differ from the conclusion")
            if dict(pt.context) != dict(pe.context):
                _fail(d, "branches must share one context")
            _check_split(d, [pc.context, pt.context])
        case syn.Lam(x, body):
            (p,) = _premises(d, 1)
            if p.term != body:
                _fail(d, "premise term does not match")
            if x in ctx:
                _fail(d, f"binder {x} already in context")
            if not isinstance(a.head, Arrow):
                _fail(d, f"lambda typed at non-arrow {format_type(a)}")
            dom, cod = a.head.dom, a.head.cod
            expected = dict(ctx)
            expected[x] = dom
            if dict(p.context) != expected or p.type != cod:
                _fail(d, "premise judgment does not match")
            if d.rule == LAM1:
                if a.bangs != 0:
                    _fail(d, "(λ1) concludes an unbanged arrow")
            elif d.rule == LAM2:
                if a.bangs < 1:
                    _fail(d, "(λ2) concludes a banged arrow")
                for y in syn.free_vars(body) - {x}:
                    if ctx[y].bangs < 1:
                        _fail(d, f"side condition: free variable {y}:{format_type(ctx[y])} is not exponential")
            else:
                _fail(d, "lambdas are typed by (λ1) or (λ2)")
        case syn.Pair(left, right):
            pl, pr = _premises(d, 2)
            if (pl.term, pr.term) != (left, right):
                _fail(d, "premise terms do not match")
            if not isinstance(a.head, Tensor):
                _fail(d, f"pair typed at non-tensor {format_type(a)}")
            c1, c2 = a.head.left, a.head.right
            if d.rule == PAIR_I:
                n = a.bangs
                if pl.type != bang(c1, n) or pr.type != bang(c2, n):
                    _fail(d, "component types do not match")
            elif d.rule == PAIR_I1:
                if a.bangs != 1:
                    _fail(d, "(⊗.I') concludes exactly one exponential")
                for comp, prem in ((c1, pl.type), (c2, pr.type)):
                    if prem.bangs < 1 or prem.head != comp.head or comp.bangs not in (prem.bangs - 1, prem.bangs):
                        _fail(d, "component types do not match")
            else:
                _fail(d, "pairs are typed by (⊗.I) or (⊗.I')")
            _check_split(d, [pl.context, pr.context])
        case syn.LetPair(x1, x2, bound, body):
            pm, pn = _premises(d, 2)
            if (pm.term, pn.term) != (bound, body):
                _fail(d, "premise terms do not match")
            if x1 in ctx or x2 in ctx:
                _fail(d, "let binders already in context")
            mt = pm.type
            if not isinstance(mt.head, Tensor):
                _fail(d, f"let-pair scrutinee has non-tensor type {format_type(mt)}")
            c1, c2 = mt.head.left, mt.head.right
            if d.rule == PAIR_E:
                b1, b2 = bang(c1, mt.bangs), bang(c2, mt.bangs)
            elif d.rule == PAIR_E1:
                if mt.bangs != 1 or c1.bangs > 1 or c2.bangs > 1:
                    _fail(d, "(⊗.E') eliminates !(!^τ A ⊗ !^σ B)")
                b1, b2 = QType(1, c1.head), QType(1, c2.head)
            else:
                _fail(d, "let-pairs are typed by (⊗.E) or (⊗.E')")
            body_ctx = dict(pn.context)
            if body_ctx.pop(x1, None) != b1 or body_ctx.pop(x2, None) != b2:
                _fail(d, "binder types do not match the scrutinee")
            if pn.type != a:
                _fail(d, "body type differs from the conclusion")
            _check_split(d, [pm.context, body_ctx])
        case _:
            _fail(d, f"unknown term {m!r}")

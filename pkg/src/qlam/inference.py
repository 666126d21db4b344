"""Type inference in two phases.

1. Simple-type inference by unification gives an intuitionistic derivation.
2. A decoration of that derivation with single exponentials is searched for:
   every type position carries a boolean bang flag, each typing rule turns
   into clauses over the flags, and the clauses are solved by unit
   propagation with chronological backtracking.

The same machinery backs checking against a given context and type, where
the context's and target's flags are fixed instead of searched.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from . import syntax as syn
from .derivation import (
    AX1,
    AX2,
    APP,
    IF,
    LAM1,
    LAM2,
    PAIR_E,
    PAIR_E1,
    PAIR_I,
    PAIR_I1,
    SUB,
    UNIT,
    Derivation,
    TypingError,
)
from .types import (
    Arrow,
    Const,
    IArrow,
    IConst,
    IProd,
    ITop,
    IType,
    IVar,
    QType,
    Tensor,
    Top,
    TVar,
    collapse,
    constant_type,
    format_itype,
    format_type,
    lift,
    skeleton,
)

# ---------------------------------------------------------------------------
# Phase 1: simple types


@dataclass(frozen=True)
class Meta:
    """Unification variable."""

    id: int

    def __str__(self) -> str:
        return f"?{self.id}"


@dataclass(frozen=True, eq=False)
class IDerivation:
    rule: str  # var | const | unit | app | lam | if | pair | let
    context: Mapping[str, IType]
    term: syn.Term
    type: IType
    premises: tuple["IDerivation", ...] = ()

    def explain(self, indent: str = "  ", depth: int = 0) -> str:
        ctx = ", ".join(f"{x}:{format_itype(u)}" for x, u in sorted(self.context.items()))
        head = f"{indent * depth}({self.rule}) {ctx} |> {syn.pretty(self.term)} : {format_itype(self.type)}"
        return "\n".join([head] + [p.explain(indent, depth + 1) for p in self.premises])


def _const_skeleton(m: syn.Term) -> IType:
    return skeleton(constant_type(m))


class _Unifier:
    def __init__(self):
        self.binding: dict[int, IType] = {}
        self.counter = itertools.count()

    def fresh(self) -> Meta:
        return Meta(next(self.counter))

    def resolve(self, t):
        while isinstance(t, Meta) and t.id in self.binding:
            t = self.binding[t.id]
        return t

    def zonk(self, t):
        t = self.resolve(t)
        match t:
            case IArrow(d, c):
                return IArrow(self.zonk(d), self.zonk(c))
            case IProd(l, r):
                return IProd(self.zonk(l), self.zonk(r))
        return t

    def occurs(self, meta: Meta, t) -> bool:
        t = self.resolve(t)
        match t:
            case Meta():
                return t == meta
            case IArrow(d, c):
                return self.occurs(meta, d) or self.occurs(meta, c)
            case IProd(l, r):
                return self.occurs(meta, l) or self.occurs(meta, r)
        return False

    def unify(self, expected, actual, term: syn.Term) -> None:
        a, b = self.resolve(expected), self.resolve(actual)
        if a == b:
            return
        if isinstance(a, Meta) or isinstance(b, Meta):
            meta, other = (a, b) if isinstance(a, Meta) else (b, a)
            if self.occurs(meta, other):
                raise TypingError(
                    "subtype mismatch",
                    f"occurs check: {meta} occurs in {lift_open(self.zonk(other))} in {syn.pretty(term)}",
                )
            self.binding[meta.id] = other
            return
        match a, b:
            case IArrow(d1, c1), IArrow(d2, c2):
                self.unify(d1, d2, term)
                self.unify(c1, c2, term)
                return
            case IProd(l1, r1), IProd(l2, r2):
                self.unify(l1, l2, term)
                self.unify(r1, r2, term)
                return
        ea, eb = lift_open(self.zonk(a)), lift_open(self.zonk(b))
        raise TypingError(
            "subtype mismatch",
            f"expected {ea}, got {eb} in {syn.pretty(term)}",
            types=(ea, eb),
        )


def lift_open(u) -> str:
    """Print a possibly-unresolved intuitionistic type in linear syntax."""
    match u:
        case Meta():
            return str(u)
        case IArrow(d, c):
            return f"({lift_open(d)} -o {lift_open(c)})"
        case IProd(l, r):
            return f"({lift_open(l)} (*) {lift_open(r)})"
    return format_type(lift(u))


def _simple(m: syn.Term, env: dict[str, object], u: _Unifier) -> IDerivation:
    match m:
        case syn.Var(x):
            if x not in env:
                raise TypingError("unbound variable", f"{x} is not bound", variable=x)
            return IDerivation("var", dict(env), m, env[x])
        case syn.Bit() | syn.New() | syn.Meas() | syn.Gate():
            return IDerivation("const", dict(env), m, _const_skeleton(m))
        case syn.Star():
            return IDerivation("unit", dict(env), m, ITop())
        case syn.App(f, a):
            df = _simple(f, env, u)
            da = _simple(a, env, u)
            tf = u.resolve(df.type)
            if isinstance(tf, IArrow):
                u.unify(tf.dom, da.type, m)
                result = tf.cod
            else:
                result = u.fresh()
                u.unify(tf, IArrow(da.type, result), m)
            return IDerivation("app", dict(env), m, result, (df, da))
        case syn.Lam(x, body):
            tx = u.fresh()
            db = _simple(body, {**env, x: tx}, u)
            return IDerivation("lam", dict(env), m, IArrow(tx, db.type), (db,))
        case syn.If(c, t, e):
            dc = _simple(c, env, u)
            u.unify(IConst("bit"), dc.type, m)
            dt = _simple(t, env, u)
            de = _simple(e, env, u)
            u.unify(dt.type, de.type, m)
            return IDerivation("if", dict(env), m, dt.type, (dc, dt, de))
        case syn.Pair(left, right):
            dl = _simple(left, env, u)
            dr = _simple(right, env, u)
            return IDerivation("pair", dict(env), m, IProd(dl.type, dr.type), (dl, dr))
        case syn.LetPair(x1, x2, bound, body):
            dm = _simple(bound, env, u)
            t1, t2 = u.fresh(), u.fresh()
            u.unify(IProd(t1, t2), dm.type, m)
            dn = _simple(body, {**env, x1: t1, x2: t2}, u)
            return IDerivation("let", dict(env), m, dn.type, (dm, dn))
    raise TypeError(f"not a term: {m!r}")


def _type_var_names(t) -> Iterator[str]:
    match t:
        case IVar(name):
            yield name
        case IArrow(a, b) | IProd(a, b):
            yield from _type_var_names(a)
            yield from _type_var_names(b)


def _finalize(d: IDerivation, u: _Unifier, names: dict[int, IVar], taken: set[str]) -> IDerivation:
    def name_for(meta: Meta) -> IVar:
        if meta.id not in names:
            for candidate in _rigid_names():
                if candidate not in taken:
                    taken.add(candidate)
                    names[meta.id] = IVar(candidate)
                    break
        return names[meta.id]

    def close(t):
        t = u.zonk(t)
        match t:
            case Meta():
                return name_for(t)
            case IArrow(a, b):
                return IArrow(close(a), close(b))
            case IProd(a, b):
                return IProd(close(a), close(b))
        return t

    def go(node: IDerivation) -> IDerivation:
        # conclusion types are named first so root variables read X, Y, ...
        typ = close(node.type)
        ctx = {x: close(t) for x, t in node.context.items()}
        return IDerivation(node.rule, ctx, node.term, typ, tuple(go(p) for p in node.premises))

    return go(d)


def _rigid_names() -> Iterator[str]:
    letters = "XYZWVS"
    yield from letters
    for i in itertools.count(1):
        for c in letters:
            yield f"{c}{i}"


def infer_simple(
    m: syn.Term,
    context: Mapping[str, IType] | None = None,
    expected: IType | None = None,
) -> tuple[IDerivation, IType]:
    """Most general simply-typed derivation of ``context |> m : U``.

    Type variables in ``context`` and ``expected`` are rigid; unresolved
    unification variables become fresh rigid variables. Binders are renamed
    apart first, so the derivation's term is an alpha-variant of ``m``.
    """
    context = dict(context or {})
    m = syn.rename_apart(m, context)
    u = _Unifier()
    d = _simple(m, dict(context), u)
    if expected is not None:
        u.unify(expected, d.type, m)
    taken = set()
    for t in list(context.values()) + ([expected] if expected is not None else []):
        taken.update(_type_var_names(t))
    d = _finalize(d, u, {}, taken)
    return d, d.type


# ---------------------------------------------------------------------------
# Phase 2: decorations


@dataclass(eq=False)
class _DT:
    """Type template: a skeleton whose every position carries a flag.

    A flag is either an int (solver variable) or a fixed bool.
    """

    flag: int | bool
    head: object  # IConst | IVar | ITop | "arrow" | "tensor"
    kids: tuple["_DT", ...] = ()


@dataclass(frozen=True)
class _Origin:
    kind: str  # ax1 ax2 root app if linearity lambda2 pair let
    term: syn.Term
    variable: str | None = None
    detail: str = ""

    def error(self) -> TypingError:
        where = syn.pretty(self.term)
        if self.kind == "linearity":
            return TypingError(
                "linearity violation",
                f"non-exponential {self.variable} is used in more than one subterm of {where}",
                variable=self.variable,
            )
        if self.kind == "lambda2":
            return TypingError(
                "side condition",
                f"(λ2) side condition fails: {where} captures non-exponential {self.variable}",
                variable=self.variable,
            )
        return TypingError("subtype mismatch", f"{self.detail or 'no exponential decoration fits'} at {where}")


class _Store:
    def __init__(self):
        self.parent: list[int] = []
        self.clauses: list[tuple[tuple[tuple[int, bool], ...], _Origin]] = []
        self.conflicts: list[_Origin] = []

    def new(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def clause(self, lits, origin: _Origin) -> None:
        kept = []
        for flag, pol in lits:
            if isinstance(flag, bool):
                if flag == pol:
                    return
                continue
            kept.append((flag, pol))
        if not kept:
            self.conflicts.append(origin)
            return
        self.clauses.append((tuple(kept), origin))

    def equal(self, a, b, origin: _Origin) -> None:
        if isinstance(a, bool) and isinstance(b, bool):
            if a != b:
                self.conflicts.append(origin)
        elif isinstance(a, bool):
            self.clause([(b, a)], origin)
        elif isinstance(b, bool):
            self.clause([(a, b)], origin)
        else:
            ra, rb = self.find(a), self.find(b)
            if ra != rb:
                self.parent[ra] = rb


def _template(store: _Store, u: IType) -> _DT:
    match u:
        case IArrow(d, c):
            return _DT(store.new(), "arrow", (_template(store, d), _template(store, c)))
        case IProd(l, r):
            return _DT(store.new(), "tensor", (_template(store, l), _template(store, r)))
    return _DT(store.new(), u)


def _fixed(a: QType) -> _DT:
    match a.head:
        case Arrow(d, c):
            return _DT(a.bangs >= 1, "arrow", (_fixed(d), _fixed(c)))
        case Tensor(l, r):
            return _DT(a.bangs >= 1, "tensor", (_fixed(l), _fixed(r)))
        case Const(name):
            return _DT(a.bangs >= 1, IConst(name))
        case TVar(name):
            return _DT(a.bangs >= 1, IVar(name))
        case Top():
            return _DT(a.bangs >= 1, ITop())
    raise TypeError(f"not a type: {a!r}")


def _eq(store: _Store, s: _DT, t: _DT, origin: _Origin) -> None:
    store.equal(s.flag, t.flag, origin)
    _inner_eq(store, s, t, origin)


def _inner_eq(store: _Store, s: _DT, t: _DT, origin: _Origin) -> None:
    for a, b in zip(s.kids, t.kids):
        _eq(store, a, b, origin)


def _sub(store: _Store, s: _DT, t: _DT, origin: _Origin) -> None:
    """Clauses for ``s <: t`` between two decorations of one skeleton."""
    # at every position: t banged implies s banged
    store.clause([(t.flag, False), (s.flag, True)], origin)
    if s.head == "arrow":
        _sub(store, t.kids[0], s.kids[0], origin)
        _sub(store, s.kids[1], t.kids[1], origin)
    elif s.head == "tensor":
        _sub(store, s.kids[0], t.kids[0], origin)
        _sub(store, s.kids[1], t.kids[1], origin)


def _share(store: _Store, env, names, term: syn.Term) -> None:
    for v in sorted(names):
        store.clause([(env[v].flag, True)], _Origin("linearity", term, v))


def _component_rule(store: _Store, f, comp: _DT, other: _DT, origin: _Origin) -> None:
    """``comp``'s outer flag equals ``other``'s when ``f`` is off; ``other`` is banged when ``f`` is on."""
    _inner_eq(store, comp, other, origin)
    store.clause([(f, True), (comp.flag, False), (other.flag, True)], origin)
    store.clause([(f, True), (comp.flag, True), (other.flag, False)], origin)
    store.clause([(f, False), (other.flag, True)], origin)


@dataclass(eq=False)
class _DNode:
    idnode: IDerivation
    type: _DT
    kids: list["_DNode"] = field(default_factory=list)
    binders: tuple[_DT, ...] = ()


def _gen(store: _Store, d: IDerivation, env: dict[str, _DT]) -> _DNode:
    m = d.term
    match d.rule:
        case "var":
            t = _template(store, d.type)
            _sub(store, env[m.name], t, _Origin("ax1", m, m.name, f"context type of {m.name} is too weak"))
            return _DNode(d, t)
        case "const":
            t = _template(store, d.type)
            ac = constant_type(m)
            _sub(store, _fixed(ac), t, _Origin("ax2", m, None, f"constant of type {format_type(ac)}"))
            return _DNode(d, t)
        case "unit":
            return _DNode(d, _template(store, d.type))
        case "app":
            df = _gen(store, d.premises[0], env)
            da = _gen(store, d.premises[1], env)
            origin = _Origin("app", m, None, "argument type does not fit the function")
            store.clause([(df.type.flag, False)], _Origin("app", m, None, "function position needs an unbanged arrow"))
            _eq(store, df.type.kids[0], da.type, origin)
            _share(store, env, syn.free_vars(m.fn) & syn.free_vars(m.arg), m)
            return _DNode(d, df.type.kids[1], [df, da])
        case "lam":
            tx = _template(store, d.type.dom)
            db = _gen(store, d.premises[0], {**env, m.var: tx})
            t = _DT(store.new(), "arrow", (tx, db.type))
            for v in sorted(syn.free_vars(m)):
                store.clause([(t.flag, False), (env[v].flag, True)], _Origin("lambda2", m, v))
            return _DNode(d, t, [db], (tx,))
        case "if":
            dc = _gen(store, d.premises[0], env)
            store.clause([(dc.type.flag, False)], _Origin("if", m, None, "condition must have type bit"))
            dt = _gen(store, d.premises[1], env)
            de = _gen(store, d.premises[2], env)
            _eq(store, dt.type, de.type, _Origin("if", m, None, "branch types differ"))
            branches = syn.free_vars(m.then) | syn.free_vars(m.else_)
            _share(store, env, syn.free_vars(m.cond) & branches, m)
            return _DNode(d, dt.type, [dc, dt, de])
        case "pair":
            dl = _gen(store, d.premises[0], env)
            dr = _gen(store, d.premises[1], env)
            t = _template(store, d.type)
            origin = _Origin("pair", m, None, "component types do not fit the pair")
            _component_rule(store, t.flag, t.kids[0], dl.type, origin)
            _component_rule(store, t.flag, t.kids[1], dr.type, origin)
            _share(store, env, syn.free_vars(m.left) & syn.free_vars(m.right), m)
            return _DNode(d, t, [dl, dr])
        case "let":
            dm = _gen(store, d.premises[0], env)
            mt = dm.type
            origin = _Origin("let", m, None, "binder types do not fit the scrutinee")
            b1 = _template(store, d.premises[1].context[m.x])
            b2 = _template(store, d.premises[1].context[m.y])
            _component_rule(store, mt.flag, mt.kids[0], b1, origin)
            _component_rule(store, mt.flag, mt.kids[1], b2, origin)
            dn = _gen(store, d.premises[1], {**env, m.x: b1, m.y: b2})
            _share(store, env, syn.free_vars(m.bound) & (syn.free_vars(m.body) - {m.x, m.y}), m)
            return _DNode(d, dn.type, [dm, dn], (b1, b2))
    raise ValueError(f"unknown rule {d.rule!r}")


# ---------------------------------------------------------------------------
# Solver


class _Unsat(Exception):
    def __init__(self, origin: _Origin | None):
        self.origin = origin


def _solve(
    store: _Store,
    assume: Mapping[int, bool] | None = None,
    prefer: bool = True,
) -> dict[int, bool]:
    """DPLL over the flag classes; returns a total assignment of class representatives."""
    if store.conflicts:
        raise _Unsat(store.conflicts[0])
    clauses = []
    origins = []
    for lits, origin in store.clauses:
        reps = {}
        taut = False
        for v, pol in lits:
            r = store.find(v)
            if reps.get(r, pol) != pol:
                taut = True
                break
            reps[r] = pol
        if not taut:
            clauses.append(tuple(reps.items()))
            origins.append(origin)
    variables = sorted({store.find(v) for v in range(len(store.parent))})
    occurs: dict[int, list[int]] = {v: [] for v in variables}
    for ci, lits in enumerate(clauses):
        for v, _ in lits:
            occurs[v].append(ci)

    value: dict[int, bool] = {}
    trail: list[int] = []
    last_conflict: list[_Origin | None] = [None]

    def assign(v: int, b: bool) -> None:
        value[v] = b
        trail.append(v)

    def propagate(head: int) -> bool:
        while head < len(trail):
            v = trail[head]
            head += 1
            for ci in occurs[v]:
                unassigned = None
                satisfied = False
                count = 0
                for w, pol in clauses[ci]:
                    got = value.get(w)
                    if got is None:
                        unassigned = (w, pol)
                        count += 1
                    elif got == pol:
                        satisfied = True
                        break
                if satisfied:
                    continue
                if count == 0:
                    last_conflict[0] = origins[ci]
                    return False
                if count == 1:
                    assign(*unassigned)
        return True

    def undo(length: int) -> None:
        while len(trail) > length:
            del value[trail.pop()]

    # initial unit clauses and assumptions
    for ci, lits in enumerate(clauses):
        if len(lits) == 1:
            v, pol = lits[0]
            if value.get(v, pol) != pol:
                raise _Unsat(origins[ci])
            if v not in value:
                assign(v, pol)
    for v, b in (assume or {}).items():
        r = store.find(v)
        if value.get(r, b) != b:
            raise _Unsat(None)
        if r not in value:
            assign(r, b)
    if not propagate(0):
        raise _Unsat(last_conflict[0])

    decisions: list[tuple[int, int, bool, bool]] = []
    while True:
        v = next((w for w in variables if w not in value), None)
        if v is None:
            return dict(value)
        decisions.append((len(trail), v, prefer, False))
        assign(v, prefer)
        ok = propagate(len(trail) - 1)
        while not ok:
            while decisions:
                length, dv, tried, flipped = decisions.pop()
                undo(length)
                if not flipped:
                    decisions.append((length, dv, not tried, True))
                    assign(dv, not tried)
                    break
            else:
                raise _Unsat(last_conflict[0])
            ok = propagate(len(trail) - 1)


# ---------------------------------------------------------------------------
# Building quantum derivations from flag assignments


def _qtype(t: _DT, value) -> QType:
    bangs = 1 if value(t.flag) else 0
    match t.head:
        case "arrow":
            return QType(bangs, Arrow(_qtype(t.kids[0], value), _qtype(t.kids[1], value)))
        case "tensor":
            return QType(bangs, Tensor(_qtype(t.kids[0], value), _qtype(t.kids[1], value)))
        case IConst(name):
            return QType(bangs, Const(name))
        case IVar(name):
            return QType(bangs, TVar(name))
        case ITop():
            return QType(bangs, Top())
    raise TypeError(f"bad template head {t.head!r}")


def _split(ctx: dict[str, QType], second: frozenset[str], first: frozenset[str]):
    """Route bindings to two premises: banged ones to both, others by use."""
    c1, c2 = {}, {}
    for x, a in ctx.items():
        if a.bangs >= 1:
            c1[x] = c2[x] = a
            continue
        if x in second:
            c2[x] = a
            if x in first:
                c1[x] = a  # invalid on purpose; the verifier rejects it
        else:
            c1[x] = a
    return c1, c2


def _build(n: _DNode, ctx: dict[str, QType], value) -> Derivation:
    d = n.idnode
    m = d.term
    typ = _qtype(n.type, value)
    match d.rule:
        case "var":
            return Derivation(AX1, ctx, m, typ)
        case "const":
            return Derivation(AX2, ctx, m, typ)
        case "unit":
            return Derivation(UNIT, ctx, m, typ)
        case "app":
            c1, c2 = _split(ctx, syn.free_vars(m.arg), syn.free_vars(m.fn))
            return Derivation(APP, ctx, m, typ, (_build(n.kids[0], c1, value), _build(n.kids[1], c2, value)))
        case "lam":
            inner = {**ctx, m.var: _qtype(n.binders[0], value)}
            rule = LAM2 if typ.bangs else LAM1
            return Derivation(rule, ctx, m, typ, (_build(n.kids[0], inner, value),))
        case "if":
            branches = syn.free_vars(m.then) | syn.free_vars(m.else_)
            c1, c2 = _split(ctx, branches, syn.free_vars(m.cond))
            kids = (_build(n.kids[0], c1, value), _build(n.kids[1], c2, value), _build(n.kids[2], c2, value))
            return Derivation(IF, ctx, m, typ, kids)
        case "pair":
            c1, c2 = _split(ctx, syn.free_vars(m.right), syn.free_vars(m.left))
            plain = typ.bangs == 0 or (typ.head.left.bangs == 0 and typ.head.right.bangs == 0)
            kids = (_build(n.kids[0], c1, value), _build(n.kids[1], c2, value))
            return Derivation(PAIR_I if plain else PAIR_I1, ctx, m, typ, kids)
        case "let":
            c1, c2 = _split(ctx, syn.free_vars(m.body) - {m.x, m.y}, syn.free_vars(m.bound))
            dm = _build(n.kids[0], c1, value)
            inner = {**c2, m.x: _qtype(n.binders[0], value), m.y: _qtype(n.binders[1], value)}
            dn = _build(n.kids[1], inner, value)
            mt = dm.type
            plain = mt.bangs == 0 or (mt.head.left.bangs == 0 and mt.head.right.bangs == 0)
            return Derivation(PAIR_E if plain else PAIR_E1, ctx, m, typ, (dm, dn))
    raise ValueError(f"unknown rule {d.rule!r}")


# ---------------------------------------------------------------------------
# Public entry points


@dataclass(eq=False)
class Decoration:
    """Constraint system for decorating one intuitionistic derivation."""

    pi: IDerivation
    store: _Store
    root: _DNode
    context: dict[str, QType]  # fixed (collapsed) context types
    fixed_context: bool
    target: QType | None  # requested type in checking mode

    def flag_classes(self) -> list[int]:
        """Representatives of all flag classes occurring in the decorated derivation."""
        seen: dict[int, None] = {}

        def walk_t(t: _DT):
            if not isinstance(t.flag, bool):
                seen.setdefault(self.store.find(t.flag))
            for k in t.kids:
                walk_t(k)

        def walk(n: _DNode):
            walk_t(n.type)
            for b in n.binders:
                walk_t(b)
            for k in n.kids:
                walk(k)

        walk(self.root)
        for t in self._context_templates.values():
            walk_t(t)
        return list(seen)

    _context_templates: dict[str, _DT] = field(default_factory=dict)

    def root_classes(self) -> list[int]:
        seen: dict[int, None] = {}

        def walk_t(t: _DT):
            if not isinstance(t.flag, bool):
                seen.setdefault(self.store.find(t.flag))
            for k in t.kids:
                walk_t(k)

        walk_t(self.root.type)
        return list(seen)

    def build(self, assignment: Mapping[int, bool]) -> Derivation:
        store = self.store

        def value(flag) -> bool:
            if isinstance(flag, bool):
                return flag
            return assignment[store.find(flag)]

        ctx = {x: _qtype(t, value) for x, t in self._context_templates.items()}
        d = _build(self.root, ctx, value)
        if self.target is not None and (d.type != self.target or ctx != self.context):
            d = Derivation(SUB, dict(self.context), d.term, self.target, (d,), note="subsumption")
        return d


def prepare(
    pi: IDerivation,
    context: Mapping[str, QType] | None = None,
    target: QType | None = None,
    *,
    fixed_context: bool = True,
) -> Decoration:
    """Generate the flag constraints for decorating ``pi``.

    ``context`` gives the quantum types of ``pi``'s free variables; with
    ``fixed_context`` off they become searchable decorations of their
    skeletons instead. ``target`` adds a root subsumption to that type.
    """
    store = _Store()
    context = dict(context or {})
    env: dict[str, _DT] = {}
    for x, u in pi.context.items():
        if x in context and fixed_context:
            env[x] = _fixed(collapse(context[x]))
        else:
            env[x] = _template(store, u)
    root = _gen(store, pi, env)
    if target is not None:
        _sub(store, root.type, _fixed(collapse(target)), _Origin("root", pi.term, None, f"cannot reach requested type {format_type(target)}"))
    dec = Decoration(pi, store, root, {x: a for x, a in context.items()}, fixed_context, target)
    dec._context_templates = env
    return dec


def decorate_search(
    pi: IDerivation,
    context: Mapping[str, QType] | None = None,
    target: QType | None = None,
) -> tuple[Derivation, QType]:
    """Find a quantum derivation whose skeleton is ``pi``.

    Raises ``TypingError`` when no decoration satisfies the rule constraints.
    """
    dec = prepare(pi, context, target)
    try:
        assignment = None
        if target is not None:
            # checking: first look for a derivation concluding exactly the target
            exact: dict[int, bool] = {}
            _align(dec.store, dec.root.type, _fixed(collapse(target)), exact)
            try:
                assignment = _solve(dec.store, assume=exact, prefer=False)
            except _Unsat:
                pass
        if assignment is None:
            assignment = _solve(dec.store, prefer=target is None)
    except _Unsat as exc:
        origin = _diagnose(dec.store) or exc.origin
        if origin is None:
            raise TypingError("subtype mismatch", "no exponential decoration fits") from None
        raise origin.error() from None
    d = dec.build(assignment)
    return d, d.type


def _diagnose(store: _Store) -> _Origin | None:
    """Blame an unsatisfiable problem on one sharing or (λ2) constraint if possible.

    Constraints of the blamed kind are dropped; if the rest is satisfiable
    they are added back one at a time and the first one that breaks it is
    reported. Anything else is a plain mismatch of exponentials.
    """
    for kind in ("linearity", "lambda2"):
        base = _Store()
        base.parent = store.parent
        base.clauses = [c for c in store.clauses if c[1].kind != kind]
        base.conflicts = [o for o in store.conflicts if o.kind != kind]
        try:
            _solve(base)
        except _Unsat:
            continue
        for o in store.conflicts:
            if o.kind == kind:
                return o
        for c in store.clauses:
            if c[1].kind != kind:
                continue
            base.clauses.append(c)
            try:
                _solve(base)
            except _Unsat:
                return c[1]
    return None


def _align(store: _Store, t: _DT, fixed: _DT, out: dict[int, bool]) -> None:
    if not isinstance(t.flag, bool):
        out[store.find(t.flag)] = fixed.flag
    for a, b in zip(t.kids, fixed.kids):
        _align(store, a, b, out)


def all_root_types(dec: Decoration, limit: int = 4096) -> list[QType]:
    """Every distinct root type reachable by some valid decoration."""
    classes = dec.root_classes()
    results: list[QType] = []
    seen = set()
    for bits in itertools.product((True, False), repeat=len(classes)):
        if len(results) >= limit:
            break
        try:
            assignment = _solve(dec.store, assume=dict(zip(classes, bits)))
        except _Unsat:
            continue
        t = dec.build(assignment).type
        if t not in seen:
            seen.add(t)
            results.append(t)
    return results


def brute_force(dec: Decoration, stop_at_first: bool = True) -> list[Derivation]:
    """Enumerate all single-bang decorations and keep the ones the verifier accepts.

    Exponential in the number of flag classes; only for small terms.
    """
    from .derivation import is_valid

    classes = dec.flag_classes()
    found = []
    for bits in itertools.product((False, True), repeat=len(classes)):
        d = dec.build(dict(zip(classes, bits)))
        if is_valid(d):
            found.append(d)
            if stop_at_first:
                break
    return found


@dataclass(frozen=True)
class InferenceResult:
    type: QType | None
    phase: int | None = None  # 1 or 2 when untypable
    error: TypingError | None = None
    derivation: Derivation | None = None
    simple: IDerivation | None = None

    @property
    def ok(self) -> bool:
        return self.type is not None


def infer(m: syn.Term, context: Mapping[str, QType] | None = None) -> InferenceResult:
    """One valid type for ``m`` (no principal type exists), or the failing phase.

    ``context`` fixes the types of free variables, e.g. ``p0: qbit`` for
    program states.
    """
    context = dict(context or {})
    missing = syn.free_vars(m) - set(context)
    if missing:
        x = sorted(missing)[0]
        return InferenceResult(None, 1, TypingError("unbound variable", f"{x} is not bound", variable=x))
    try:
        pi, _ = infer_simple(m, {x: skeleton(a) for x, a in context.items()})
    except TypingError as exc:
        return InferenceResult(None, 1, exc)
    try:
        d, t = decorate_search(pi, context)
    except TypingError as exc:
        return InferenceResult(None, 2, exc, simple=pi)
    return InferenceResult(t, None, None, d, pi)


def program_context(m: syn.Term) -> dict[str, QType]:
    from .types import QBIT

    return {x: QBIT for x in syn.free_vars(m)}

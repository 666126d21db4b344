"""Checking typing judgments ``ctx |> m : a`` and well-typedness of program states."""

from __future__ import annotations

from typing import Mapping

from . import syntax as syn
from .derivation import Derivation, InvalidDerivation, TypingContext, TypingError, verify
from .inference import decorate_search, infer_simple
from .types import QBIT, QType, skeleton


def check(ctx: TypingContext, m: syn.Term, a: QType) -> Derivation:
    """A derivation of ``ctx |> m : a``; raises ``TypingError`` if there is none.

    Context splits are forced by free-variable occurrence: non-exponential
    bindings go to the one subterm that uses them and exponential ones are
    shared. Every returned derivation has passed the rule-instance verifier.
    """
    ctx = dict(ctx)
    for x in sorted(syn.free_vars(m)):
        if x not in ctx:
            raise TypingError("unbound variable", f"{x} is not in the context", variable=x)
    _check_shared_linear(ctx, m)
    pi, _ = infer_simple(m, {x: skeleton(t) for x, t in ctx.items()}, skeleton(a))
    d, _ = decorate_search(pi, ctx, a)
    try:
        verify(d)
    except InvalidDerivation as exc:  # pragma: no cover - would be a checker bug
        raise AssertionError(f"checker produced an invalid derivation: {exc}") from exc
    return d


def _check_shared_linear(ctx: Mapping[str, QType], m: syn.Term) -> None:
    """Report a non-exponential context binding used by two subterms before any search."""
    linear = {x for x, t in ctx.items() if t.bangs == 0}

    def walk(t: syn.Term, live: frozenset[str]) -> None:
        parts: list[syn.Term] = []
        match t:
            case syn.App(f, arg):
                parts = [f, arg]
            case syn.Pair(left, right):
                parts = [left, right]
            case syn.If(c, th, el):
                _clash(t, live, [syn.free_vars(c), syn.free_vars(th) | syn.free_vars(el)])
                for sub in (c, th, el):
                    walk(sub, live)
                return
            case syn.LetPair(x, y, bound, body):
                _clash(t, live, [syn.free_vars(bound), syn.free_vars(body) - {x, y}])
                walk(bound, live)
                walk(body, live - {x, y})
                return
            case syn.Lam(x, body):
                walk(body, live - {x})
                return
        if parts:
            _clash(t, live, [syn.free_vars(p) for p in parts])
            for p in parts:
                walk(p, live)

    walk(m, frozenset(linear))


def _clash(t: syn.Term, live: frozenset[str], uses: list[frozenset[str]]) -> None:
    both = (uses[0] & uses[1]) & live
    if both:
        x = sorted(both)[0]
        raise TypingError(
            "linearity violation",
            f"non-exponential {x} is used in more than one subterm of {syn.pretty(t)}",
            variable=x,
        )


def typechecks(ctx: TypingContext, m: syn.Term, a: QType) -> bool:
    try:
        check(ctx, m, a)
    except TypingError:
        return False
    return True


def program_context(m: syn.Term) -> dict[str, QType]:
    """Typing context of a program state: every free variable is a qubit."""
    return {x: QBIT for x in syn.free_vars(m)}


def well_typed_program(state, b: QType) -> bool:
    """Whether the program state (or bare term) is well-typed of type ``b``."""
    m = state if isinstance(state, syn.Term) else state.term
    return typechecks(program_context(m), m, b)


def substitution_check(
    ctx1: TypingContext,
    bang_delta: TypingContext,
    x: str,
    a: QType,
    m: syn.Term,
    b: QType,
    ctx2: TypingContext,
    v: syn.Term,
) -> bool:
    """Check one instance of the substitution property.

    Given ``ctx1, !Δ, x:a |> m : b`` and ``ctx2, !Δ |> v : a`` (both must hold),
    return whether ``ctx1, ctx2, !Δ |> m[v/x] : b`` holds.
    """
    if not syn.is_value(v):
        raise ValueError("substitution_check expects a value")
    if any(t.bangs == 0 for t in bang_delta.values()):
        raise ValueError("the shared context must be exponential")
    check({**ctx1, **bang_delta, x: a}, m, b)
    check({**ctx2, **bang_delta}, v, a)
    return typechecks({**ctx1, **ctx2, **bang_delta}, syn.substitute(m, x, v), b)

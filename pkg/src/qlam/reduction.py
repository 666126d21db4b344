"""Probabilistic call-by-value reduction of program states ``[Q, L, M]``.

Redex choice is deterministic: in an application the argument is reduced
before the function, pairs left to right, and the scrutinee of ``if`` and
``let`` first. Only measurement branches.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from . import syntax as syn
from .quantum import (
    EPS_NORM,
    GateTable,
    QuantumState,
    apply_gate,
    default_gate_table,
    fix_phase,
    format_amplitudes,
    measure,
    new_qubit,
)

EPS_PRUNE = 1e-12

VALUE, REDUCIBLE, ERROR = "value", "reducible", "error"


@dataclass(frozen=True, eq=False)
class ProgramState:
    q: QuantumState
    link: Mapping[str, int]
    term: syn.Term

    def __post_init__(self):
        object.__setattr__(self, "link", dict(self.link))
        for x in syn.free_vars(self.term):
            if x not in self.link:
                raise ValueError(f"free variable {x} is not linked to a qubit")
        for x, i in self.link.items():
            if not 0 <= i < self.q.n:
                raise ValueError(f"{x} links to qubit {i}, but the state has {self.q.n} qubits")

    @classmethod
    def initial(cls, term: syn.Term) -> "ProgramState":
        """``[|>, {}, term]`` for a closed program."""
        return cls(QuantumState.empty(), {}, term)

    def normalized(self) -> "ProgramState":
        """Rename free variables to the register names ``p_i`` with ``i = L(x)``."""
        fv = syn.free_vars(self.term)
        targets = {x: f"p{self.link[x]}" for x in fv}
        if len(set(targets.values())) != len(targets):
            # two variables share a qubit: keep names, the term is not uniquely referencing
            return self
        if all(x == p for x, p in targets.items()) and set(self.link) == set(targets):
            return self
        term = syn.rename_apart(self.term, set(targets.values()))
        term = syn.substitute_many(term, {x: syn.Var(p) for x, p in targets.items()})
        return ProgramState(self.q, {p: self.link[x] for x, p in targets.items()}, term)

    def pretty(self) -> str:
        """Term with qubit references written ``p_i`` (the state's own naming if ambiguous)."""
        return syn.pretty(self.normalized().term)

    def is_value(self) -> bool:
        return syn.is_value(self.term)

    def key(self) -> tuple:
        """Hashable key: exact term-up-to-alpha plus the phase-fixed state rounded to 12 places."""
        s = self.normalized()
        amps = np.round(fix_phase(s.q.amplitudes), 12) + 0.0
        return (s.term, s.q.n, amps.tobytes())

    def __repr__(self) -> str:
        return f"[{format_amplitudes(self.q.amplitudes, 6)}, {self.pretty()}]"


@dataclass(frozen=True)
class StepResult:
    classification: str
    successors: tuple[tuple[ProgramState, float], ...] = ()

    def total_probability(self) -> float:
        return sum(p for _, p in self.successors)


# ---------------------------------------------------------------------------
# One step


class _Stuck(Exception):
    pass


def _registers(v: syn.Term, arity: int, link: Mapping[str, int]) -> list[int] | None:
    """Qubit indices of a right-nested tuple of ``arity`` linked variables."""
    items = []
    for _ in range(arity - 1):
        if not isinstance(v, syn.Pair):
            return None
        items.append(v.left)
        v = v.right
    items.append(v)
    idx = []
    for item in items:
        if not isinstance(item, syn.Var) or item.name not in link:
            return None
        idx.append(link[item.name])
    return idx


def _fresh_register(q: QuantumState, link: Mapping[str, int], term: syn.Term) -> str:
    name = f"p{q.n}"
    taken = set(link) | syn.free_vars(term) | syn.bound_vars(term)
    while name in taken:
        name += "'"
    return name


def _reduce(q: QuantumState, link: dict[str, int], m: syn.Term, gates: GateTable):
    """All successors ``(q', link', m', p)`` of a non-value term; raises ``_Stuck``."""
    match m:
        case syn.App(f, a):
            if not syn.is_value(a):
                return [(q2, l2, syn.App(f, a2), p) for q2, l2, a2, p in _reduce(q, link, a, gates)]
            if not syn.is_value(f):
                return [(q2, l2, syn.App(f2, a), p) for q2, l2, f2, p in _reduce(q, link, f, gates)]
            match f:
                case syn.Lam(x, body):
                    return [(q, link, syn.substitute(body, x, a), 1.0)]
                case syn.New():
                    if not isinstance(a, syn.Bit):
                        raise _Stuck
                    q2, index = new_qubit(q, a.value)
                    name = _fresh_register(q, link, m)
                    return [(q2, {**link, name: index}, syn.Var(name), 1.0)]
                case syn.Meas():
                    if not isinstance(a, syn.Var) or a.name not in link:
                        raise _Stuck
                    return [(q2, link, syn.Bit(b), p) for b, p, q2 in measure(q, link[a.name])]
                case syn.Gate(name, arity):
                    idx = _registers(a, arity, link)
                    if idx is None or len(set(idx)) != len(idx) or name not in gates:
                        raise _Stuck
                    return [(apply_gate(q, gates[name], idx), link, a, 1.0)]
            raise _Stuck
        case syn.If(c, t, e):
            if not syn.is_value(c):
                return [(q2, l2, syn.If(c2, t, e), p) for q2, l2, c2, p in _reduce(q, link, c, gates)]
            if isinstance(c, syn.Bit):
                return [(q, link, t if c.value == 1 else e, 1.0)]
            raise _Stuck
        case syn.Pair(left, right):
            if not syn.is_value(left):
                return [(q2, l2, syn.Pair(l3, right), p) for q2, l2, l3, p in _reduce(q, link, left, gates)]
            return [(q2, l2, syn.Pair(left, r2), p) for q2, l2, r2, p in _reduce(q, link, right, gates)]
        case syn.LetPair(x, y, bound, body):
            if not syn.is_value(bound):
                return [(q2, l2, syn.LetPair(x, y, b2, body), p) for q2, l2, b2, p in _reduce(q, link, bound, gates)]
            if isinstance(bound, syn.Pair):
                return [(q, link, syn.substitute_many(body, {x: bound.left, y: bound.right}), 1.0)]
            raise _Stuck
    raise _Stuck


def step(s: ProgramState, gates: GateTable | None = None) -> StepResult:
    if s.is_value():
        return StepResult(VALUE)
    gates = default_gate_table() if gates is None else gates
    try:
        succ = _reduce(s.q, dict(s.link), s.term, gates)
    except _Stuck:
        return StepResult(ERROR)
    return StepResult(REDUCIBLE, tuple((ProgramState(q, link, m), p) for q, link, m, p in succ))


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class TraceEntry:
    index: int
    probability: float
    state: ProgramState

    def line(self) -> str:
        return f"{self.index}\t{self.probability:.9f}\t{self.state.pretty()}\t{format_amplitudes(self.state.q.amplitudes)}"


@dataclass(frozen=True)
class RunOutcome:
    kind: str  # value | error | exhausted
    state: ProgramState
    trace: tuple[TraceEntry, ...]
    probability: float  # of the sampled path


def run(
    s: ProgramState,
    seed: int = 0,
    max_steps: int = 10_000,
    gates: GateTable | None = None,
) -> RunOutcome:
    """Reduce ``s`` along one path sampled with a seeded generator."""
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    rng = random.Random(seed)
    gates = default_gate_table() if gates is None else gates
    trace = [TraceEntry(0, 1.0, s)]
    path_p = 1.0
    for i in range(1, max_steps + 1):
        result = step(s, gates)
        if result.classification == VALUE:
            return RunOutcome(VALUE, s, tuple(trace), path_p)
        if result.classification == ERROR:
            return RunOutcome(ERROR, s, tuple(trace), path_p)
        s, p = _sample(result.successors, rng)
        path_p *= p
        trace.append(TraceEntry(i, p, s))
    final = step(s, gates).classification
    kind = final if final in (VALUE, ERROR) else "exhausted"
    return RunOutcome(kind, s, tuple(trace), path_p)


def _sample(successors, rng: random.Random):
    live = [(s, p) for s, p in successors if p > 0.0]
    r = rng.random() * sum(p for _, p in live)
    acc = 0.0
    for s, p in live:
        acc += p
        if r < acc:
            return s, p
    return live[-1]


# ---------------------------------------------------------------------------
# Exhaustive exploration


@dataclass
class Outcome:
    state: ProgramState
    mass: float
    flagged: bool = False  # reached through a branch of probability below EPS_PRUNE


@dataclass
class Distribution:
    """Terminal value states with their mass, plus the mass still pending at
    the depth horizon (an upper bound on divergence) and the error mass."""

    outcomes: list[Outcome] = field(default_factory=list)
    pending: float = 0.0
    error: float = 0.0
    low_probability_branches: int = 0

    def add(self, state: ProgramState, mass: float, flagged: bool = False) -> None:
        norm = state.normalized()
        for o in self.outcomes:
            if o.state.term == norm.term and o.state.q.close_to(norm.q, EPS_NORM, up_to_phase=True):
                o.mass += mass
                o.flagged = o.flagged and flagged
                return
        self.outcomes.append(Outcome(norm, mass, flagged))

    @property
    def terminal(self) -> float:
        return sum(o.mass for o in self.outcomes)

    @property
    def total(self) -> float:
        return self.terminal + self.pending + self.error

    def by_term(self) -> dict[syn.Term, float]:
        """Marginal over terminal terms (quantum states summed out)."""
        out: dict[syn.Term, float] = {}
        for o in self.outcomes:
            out[o.state.term] = out.get(o.state.term, 0.0) + o.mass
        return out

    def mass_of(self, term: syn.Term) -> float:
        return self.by_term().get(term, 0.0)


def explore(s: ProgramState, depth: int, gates: GateTable | None = None) -> Distribution:
    """Expand the reduction tree ``depth`` levels deep.

    Successors of equal states (up to alpha and global phase) are merged.
    Zero-probability branches are followed and flagged, never pruned.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    gates = default_gate_table() if gates is None else gates
    dist = Distribution()
    frontier: dict[tuple, list] = {s.key(): [s, 1.0, False]}
    for level in range(depth + 1):
        nxt: dict[tuple, list] = {}
        for state, mass, flagged in frontier.values():
            result = step(state, gates)
            if result.classification == VALUE:
                dist.add(state, mass, flagged)
            elif result.classification == ERROR:
                dist.error += mass
            elif level == depth:
                dist.pending += mass
            else:
                for succ, p in result.successors:
                    low = p < EPS_PRUNE
                    if low:
                        dist.low_probability_branches += 1
                    key = succ.key()
                    if key in nxt:
                        nxt[key][1] += mass * p
                        nxt[key][2] = nxt[key][2] and (flagged or low)
                    else:
                        nxt[key] = [succ, mass * p, flagged or low]
        frontier = nxt
        if not frontier:
            break
    return dist


@dataclass(frozen=True)
class ConsistencyResult:
    consistent: bool
    path: tuple[ProgramState, ...] = ()  # successors leading to the error state; empty if the start errs
    error_state: ProgramState | None = None

    def __bool__(self) -> bool:
        return self.consistent


def check_consistency(s: ProgramState, depth: int, gates: GateTable | None = None) -> ConsistencyResult:
    """Search the rule-generated reachability relation (zero-probability
    branches included) for an error state within ``depth`` steps.

    Replacing the quantum state by an arbitrary one of the same dimension is
    not explored.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    gates = default_gate_table() if gates is None else gates
    stack: list[tuple[ProgramState, tuple[ProgramState, ...]]] = [(s, ())]
    seen = set()
    while stack:
        state, path = stack.pop()
        key = state.key()
        if (key, len(path)) in seen:
            continue
        seen.add((key, len(path)))
        result = step(state, gates)
        if result.classification == ERROR:
            return ConsistencyResult(False, path, state)
        if result.classification == REDUCIBLE and len(path) < depth:
            for succ, _ in reversed(result.successors):
                stack.append((succ, path + (succ,)))
    return ConsistencyResult(True)


def reachable_states(s: ProgramState, depth: int, gates: GateTable | None = None) -> Iterator[ProgramState]:
    """Every state on every path of at most ``depth`` steps (zero-probability branches included)."""
    gates = default_gate_table() if gates is None else gates
    frontier = {s.key(): s}
    for level in range(depth + 1):
        yield from frontier.values()
        if level == depth:
            return
        nxt = {}
        for state in frontier.values():
            result = step(state, gates)
            for succ, _ in result.successors:
                nxt.setdefault(succ.key(), succ)
        if not nxt:
            return
        frontier = nxt

"""The nine acceptance criteria, each at its stated tolerance and time budget."""

import random
import time

import numpy as np

from qlam import programs
from qlam import syntax as syn
from qlam.derivation import TypingError
from qlam.inference import brute_force, decorate_search, infer, infer_simple, prepare
from qlam.quantum import GateDef, default_gate_table, fix_phase, qubit_state
from qlam.reduction import REDUCIBLE, ProgramState, check_consistency, explore, reachable_states, run, step
from qlam.typechecker import check, program_context, well_typed_program
from qlam.types import QBIT, bang, lift, skeleton, subtype

from .strategies import enumerate_terms, random_itype, random_supertype, random_type

CORPUS = programs.corpus()


def test_criterion_1_cbv_determinism(criterion):
    start = time.perf_counter()
    d = explore(programs.bundled("plus_cbv").initial_state(), 30)
    elapsed = time.perf_counter() - start
    criterion["summary"] = f"mass(0)={d.mass_of(syn.Bit(0)):.12f} error={d.error} in {elapsed:.3f}s"
    assert abs(d.mass_of(syn.Bit(0)) - 1.0) <= 1e-9
    assert d.error == 0
    assert elapsed < 1.0


def test_criterion_2_duplication_distribution(criterion):
    start = time.perf_counter()
    d = explore(programs.bundled("plus_dup").initial_state(), 1000)
    elapsed = time.perf_counter() - start
    marginal = d.by_term()
    criterion["summary"] = (
        f"{len(d.outcomes)} state branches -> {len(marginal)} terminal keys, "
        f"mass(0)={marginal.get(syn.Bit(0), 0):.12f} mass(1)={marginal.get(syn.Bit(1), 0):.12f} in {elapsed:.3f}s"
    )
    assert set(marginal) == {syn.Bit(0), syn.Bit(1)}
    assert abs(marginal[syn.Bit(0)] - 0.5) <= 1e-9 and abs(marginal[syn.Bit(1)] - 0.5) <= 1e-9
    assert len(d.outcomes) == 4
    assert d.pending == 0 and d.error == 0
    assert elapsed < 1.0


def _random_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def test_criterion_3_teleportation(criterion):
    rng = np.random.default_rng(2024)
    teleport = programs.bundled("teleport").term
    # g (f x) with x prepared by a gate whose first column is the input state
    body = syn.App(syn.Var("g"), syn.App(syn.Var("f"), syn.App(syn.Gate("PREP", 1), syn.App(syn.New(), syn.Bit(0)))))
    program = syn.LetPair("f", "g", teleport, body)
    worst_fidelity, worst_prob = 1.0, 0.0
    start = time.perf_counter()
    for _ in range(100):
        v = _random_qubit(rng)
        prep = np.array([[v[0], -np.conj(v[1])], [v[1], np.conj(v[0])]])
        gates = {**default_gate_table(), "PREP": GateDef("PREP", 1, prep)}
        d = explore(ProgramState.initial(program), 200, gates)
        assert d.error == 0 and d.pending == 0
        assert len(d.outcomes) == 4
        for o in d.outcomes:
            worst_prob = max(worst_prob, abs(o.mass - 0.25))
            out = fix_phase(qubit_state(o.state.q, o.state.link[o.state.term.name]))
            worst_fidelity = min(worst_fidelity, abs(np.vdot(fix_phase(v), out)) ** 2)
    elapsed = time.perf_counter() - start
    criterion["summary"] = f"min fidelity={worst_fidelity:.15f} max |p-0.25|={worst_prob:.2e} in {elapsed:.2f}s"
    assert worst_fidelity >= 1 - 1e-9
    assert worst_prob <= 1e-9
    assert elapsed < 5.0


def test_criterion_4_progress(criterion):
    assert len(CORPUS) >= 20
    states = 0
    for prog in CORPUS:
        s = prog.initial_state()
        result = check_consistency(s, 200)
        assert result.consistent, prog.name
        for t in reachable_states(s, 200):
            states += 1
            r = step(t)
            assert r.classification != "error", prog.name
            if r.classification == REDUCIBLE:
                assert abs(r.total_probability() - 1) <= 1e-9, prog.name
    criterion["summary"] = f"{len(CORPUS)} programs, {states} reachable states, no error state"


def test_criterion_5_subject_reduction(criterion):
    start = time.perf_counter()
    states = 0
    for prog in CORPUS:
        assert prog.declared is not None, prog.name
        for s in reachable_states(prog.initial_state(), 200):
            states += 1
            assert well_typed_program(s, prog.declared), (prog.name, s.pretty())
    elapsed = time.perf_counter() - start
    criterion["summary"] = f"{states} states well-typed at their program's type in {elapsed:.2f}s"
    assert elapsed < 30.0


def test_criterion_6_rejection_suite(criterion):
    kinds = {}
    for name in ("badgate", "badpair"):
        prog = programs.bundled(name)
        ctx = program_context(prog.term)
        result = infer(prog.term, ctx)
        assert not result.ok
        kinds[name] = result.error.kind
        for target in (QBIT, bang(QBIT)):
            try:
                check(ctx, prog.term, target)
            except TypingError as exc:
                assert exc.kind == kinds[name]
            else:
                raise AssertionError(f"{name} checked at {target}")
    criterion["summary"] = f"badgate: {kinds['badgate']}, badpair: {kinds['badpair']}"
    assert kinds == {"badgate": "subtype mismatch", "badpair": "linearity violation"}


def test_criterion_7_inference(criterion):
    for prog in CORPUS:
        r = infer(prog.term)
        assert r.ok, prog.name
        check({}, prog.term, r.type)

    compared = mismatches = untypable = 0
    for scope, max_size in (((), 6), (("p0",), 5)):
        ctx = {x: QBIT for x in scope}
        for size in range(1, max_size + 1):
            for m in enumerate_terms(size, scope):
                try:
                    pi, _ = infer_simple(m, {x: skeleton(a) for x, a in ctx.items()})
                except TypingError:
                    continue
                dec = prepare(pi, ctx, None)
                if len(dec.flag_classes()) > 12:
                    continue
                try:
                    decorate_search(pi, ctx)
                    found = True
                except TypingError:
                    found = False
                    untypable += 1
                compared += 1
                if found != bool(brute_force(dec)):
                    mismatches += 1
    criterion["summary"] = (
        f"{len(CORPUS)} corpus types validated; {compared} terms with <=12 flags, "
        f"{untypable} undecoratable, {mismatches} mismatches"
    )
    assert mismatches == 0
    assert compared > 1000 and untypable > 0


def test_criterion_8_type_algebra(criterion):
    r = random.Random(8)
    start = time.perf_counter()
    failures = {"reflexivity": 0, "transitivity": 0, "skeleton": 0, "bang lemma": 0, "skel.lift": 0}
    for _ in range(10_000):
        a = random_type(4, r)
        b = random_supertype(a, r)
        c = random_supertype(b, r)
        other = random_type(4, r)
        if not subtype(a, a):
            failures["reflexivity"] += 1
        if subtype(a, b) and subtype(b, c) and not subtype(a, c):
            failures["transitivity"] += 1
        if not (subtype(a, b) and subtype(b, c)):
            failures["transitivity"] += 1  # the constructed chain itself must hold
        for x, y in ((a, b), (a, other), (other, a)):
            if subtype(x, y) and skeleton(x) != skeleton(y):
                failures["skeleton"] += 1
            if subtype(x, bang(y)) and x.bangs == 0:
                failures["bang lemma"] += 1
            if subtype(x, y):
                for n, m in ((0, 0), (1, 0), (1, 1), (2, 1), (1, 2)):
                    if not subtype(bang(x, n), bang(y, m)):
                        failures["bang lemma"] += 1
        u = random_itype(4, r)
        if skeleton(lift(u)) != u:
            failures["skel.lift"] += 1
    elapsed = time.perf_counter() - start
    criterion["summary"] = f"{failures} in {elapsed:.2f}s"
    assert all(v == 0 for v in failures.values()), failures
    assert elapsed < 10.0


def test_criterion_9_sampler(criterion):
    s = ProgramState.initial(syn.parse("meas (H (new 0))"))
    ones = sum(run(s, seed=seed).state.term == syn.Bit(1) for seed in range(10_000))
    freq = ones / 10_000
    criterion["summary"] = f"frequency of 1 = {freq:.4f}"
    assert abs(freq - 0.5) <= 0.02

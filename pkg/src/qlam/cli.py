"""Command-line front end: ``qlam check|infer|run|explore|consistency FILE``.

Exit codes: 0 success, 1 check or inference failure, 2 unreadable input
(parse errors, bad types, bad gate tables), 3 an error state was reached,
4 the step budget ran out.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from . import syntax as syn
from .derivation import TypingError
from .inference import all_root_types, infer, infer_simple, prepare
from .programs import Program, load
from .quantum import GateTable, QuantumError, default_gate_table, format_amplitudes, load_gate_table
from .reduction import ERROR, VALUE, check_consistency, explore, run
from .typechecker import check, program_context
from .types import QType, TypeSyntaxError, format_type, parse_type, skeleton

EXIT_OK, EXIT_TYPE, EXIT_INPUT, EXIT_ERROR_STATE, EXIT_BUDGET = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    max_steps: int = 10_000
    depth: int = 1000
    gates: str | None = None
    machine: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.max_steps <= 0 or self.depth <= 0:
            raise ValueError("max-steps and depth must be positive")

    def gate_table(self) -> GateTable:
        return default_gate_table() if self.gates is None else load_gate_table(self.gates)


class _InputError(Exception):
    pass


def _load(path: str, gates: GateTable) -> Program:
    try:
        return load(path, gates)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc.strerror}") from None
    except syn.ParseError as exc:
        raise _InputError(f"{path}:{exc}") from None
    except TypeSyntaxError as exc:
        raise _InputError(f"{path}: type header: {exc}") from None


def _target_type(args, prog: Program) -> QType | None:
    if getattr(args, "type", None):
        try:
            return parse_type(args.type)
        except TypeSyntaxError as exc:
            raise _InputError(f"--type: {exc}") from None
    return prog.declared


def _typecheck(prog: Program, target: QType | None):
    """Derivation at ``target`` (or at an inferred type); raises ``TypingError``."""
    ctx = program_context(prog.term)
    if target is None:
        result = infer(prog.term, ctx)
        if not result.ok:
            raise result.error
        target = result.type
    return check(ctx, prog.term, target)


def cmd_check(args, cfg: RunConfig, out: TextIO) -> int:
    prog = _load(args.file, cfg.gate_table())
    target = _target_type(args, prog)
    try:
        d = _typecheck(prog, target)
    except TypingError as exc:
        print(f"ill-typed: {exc}", file=out)
        return EXIT_TYPE
    print(f"well-typed: {format_type(d.type)}", file=out)
    if args.explain:
        print(d.explain(), file=out)
    return EXIT_OK


def cmd_infer(args, cfg: RunConfig, out: TextIO) -> int:
    prog = _load(args.file, cfg.gate_table())
    ctx = program_context(prog.term)
    result = infer(prog.term, ctx)
    if not result.ok:
        print(f"untypable: {result.error}", file=out)
        if args.explain and result.simple is not None:
            print(result.simple.explain(), file=out)
        return EXIT_TYPE
    if args.all:
        pi, _ = infer_simple(prog.term, {x: skeleton(a) for x, a in ctx.items()})
        for t in all_root_types(prepare(pi, ctx)):
            print(format_type(t), file=out)
    else:
        print(format_type(result.type), file=out)
    if args.explain:
        print(result.derivation.explain(), file=out)
    return EXIT_OK


def _guard(args, prog: Program, out: TextIO) -> int | None:
    if args.unsafe:
        return None
    try:
        _typecheck(prog, _target_type(args, prog))
    except TypingError as exc:
        print(f"refusing to run an ill-typed program (use --unsafe): {exc}", file=out)
        return EXIT_TYPE
    return None


def cmd_run(args, cfg: RunConfig, out: TextIO) -> int:
    gates = cfg.gate_table()
    prog = _load(args.file, gates)
    refused = _guard(args, prog, out)
    if refused is not None:
        return refused
    outcome = run(prog.initial_state(), cfg.seed, cfg.max_steps, gates)
    for entry in outcome.trace:
        if cfg.machine:
            print(entry.line(), file=out)
        else:
            print(f"{entry.index:>4}  p={entry.probability:.6f}  {entry.state.pretty()}", file=out)
    final = outcome.state
    if cfg.machine:
        print(f"{outcome.kind}\t{final.pretty()}\t{outcome.probability!r}\t{format_amplitudes(final.q.amplitudes)}", file=out)
    else:
        print(f"{outcome.kind}: {final.pretty()}", file=out)
        print(f"state: {format_amplitudes(final.q.amplitudes, 9)}", file=out)
    if outcome.kind == ERROR:
        return EXIT_ERROR_STATE
    return EXIT_OK if outcome.kind == VALUE else EXIT_BUDGET


def cmd_explore(args, cfg: RunConfig, out: TextIO) -> int:
    gates = cfg.gate_table()
    prog = _load(args.file, gates)
    refused = _guard(args, prog, out)
    if refused is not None:
        return refused
    dist = explore(prog.initial_state(), cfg.depth, gates)
    if cfg.machine:
        rows = sorted(
            (o.state.pretty(), repr(o.mass), format_amplitudes(o.state.q.amplitudes)) for o in dist.outcomes
        )
        for row in rows:
            print("\t".join(row), file=out)
        print(f"pending\t{dist.pending!r}", file=out)
        print(f"error\t{dist.error!r}", file=out)
    else:
        for text, mass in sorted((syn.pretty(t), p) for t, p in dist.by_term().items()):
            print(f"{text} : {mass:.9f}", file=out)
        if dist.pending > 0:
            print(f"pending : {dist.pending:.9f}", file=out)
        if dist.error > 0:
            print(f"error : {dist.error:.9f}", file=out)
    return EXIT_ERROR_STATE if dist.error > 0 else EXIT_OK


def cmd_consistency(args, cfg: RunConfig, out: TextIO) -> int:
    gates = cfg.gate_table()
    prog = _load(args.file, gates)
    result = check_consistency(prog.initial_state(), cfg.depth, gates)
    if result.consistent:
        print(f"consistent (no error state within {cfg.depth} steps)", file=out)
        return EXIT_OK
    print(f"inconsistent: error state {result.error_state.pretty()}", file=out)
    for i, s in enumerate(result.path, 1):
        print(f"{i:>4}  {s.pretty()}", file=out)
    return EXIT_ERROR_STATE


COMMANDS = {
    "check": cmd_check,
    "infer": cmd_infer,
    "run": cmd_run,
    "explore": cmd_explore,
    "consistency": cmd_consistency,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="program source (.qlam)")
    common.add_argument("--seed", type=int, default=0, help="sampler seed for run (default 0)")
    common.add_argument("--max-steps", type=int, default=10_000, help="step budget for run")
    common.add_argument("--depth", type=int, default=1000, help="horizon for explore and consistency")
    common.add_argument("--type", help="type to check against, e.g. 'qbit -o !bit'")
    common.add_argument("--gates", help="gate table file extending the built-in gates")
    common.add_argument("--machine", action="store_true", help="tab-separated output")
    common.add_argument("--explain", action="store_true", help="print the typing derivation")
    common.add_argument("--unsafe", action="store_true", help="run without typechecking first")
    common.add_argument("--all", action="store_true", help="infer: list every decorated root type")

    parser = argparse.ArgumentParser(prog="qlam", description="Quantum lambda calculus toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "check": "check a program against its declared or inferred type",
        "infer": "infer a type",
        "run": "reduce along one sampled path",
        "explore": "exhaustive outcome distribution",
        "consistency": "search for reachable error states",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: list[str] | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.seed, args.max_steps, args.depth, args.gates, args.machine)
        if cfg.gates is not None and not Path(cfg.gates).exists():
            raise _InputError(f"cannot read gate table {cfg.gates}")
        return COMMANDS[args.command](args, cfg, out)
    except (_InputError, QuantumError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

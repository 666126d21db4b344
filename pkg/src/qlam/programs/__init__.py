"""Bundled example programs and the well-typed corpus.

A program file may start with ``-- type: A`` comment lines declaring the
type it is meant to have. Free register names ``p0, p1, ...`` denote qubits
that are allocated in state ``|0>`` before the program starts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .. import syntax as syn
from ..quantum import GateTable, QuantumState
from ..reduction import ProgramState
from ..types import QType, parse_type

_TYPE_HEADER = re.compile(r"^\s*--\s*type:\s*(.+?)\s*$", re.MULTILINE)

BUNDLED = ("plus_cbv", "plus_dup", "teleport", "badgate", "badpair")


@dataclass(frozen=True)
class Program:
    name: str
    source: str
    term: syn.Term
    declared: QType | None

    def initial_state(self) -> ProgramState:
        regs = sorted(int(x[1:]) for x in syn.free_vars(self.term))
        n = regs[-1] + 1 if regs else 0
        return ProgramState(QuantumState.basis("0" * n), {f"p{i}": i for i in regs}, self.term)


def declared_type(source: str) -> QType | None:
    m = _TYPE_HEADER.search(source)
    return parse_type(m.group(1)) if m else None


def load_source(source: str, name: str = "<string>", gates: GateTable | None = None) -> Program:
    """Parse a program; raises ``ParseError`` (or ``TypeSyntaxError`` for a bad header)."""
    term = syn.parse(source, gates, registers=True)
    return Program(name, source, term, declared_type(source))


def load(path: str | Path, gates: GateTable | None = None) -> Program:
    path = Path(path)
    return load_source(path.read_text(encoding="utf-8"), path.stem, gates)


def _root():
    return resources.files(__name__)


def bundled(name: str, gates: GateTable | None = None) -> Program:
    res = _root() / f"{name}.qlam"
    return load_source(res.read_text(encoding="utf-8"), name, gates)


def bundled_path(name: str) -> Path:
    return Path(str(_root() / f"{name}.qlam"))


def corpus(gates: GateTable | None = None) -> list[Program]:
    """The well-typed corpus, each program with its declared type."""
    entries = sorted((e for e in (_root() / "corpus").iterdir() if e.name.endswith(".qlam")), key=lambda e: e.name)
    return [load_source(e.read_text(encoding="utf-8"), e.name[: -len(".qlam")], gates) for e in entries]

"""State-vector simulation of the quantum device.

Qubit ``i`` is the ``i``-th tensor factor from the left, so in the amplitude
index it is the ``i``-th most significant bit. New qubits are appended on
the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

EPS_NORM = 1e-9


class QuantumError(ValueError):
    """Ill-formed quantum operation (bad index, arity mismatch, ...)."""


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(math.log2(len(amps)))) if len(amps) else -1
        if n < 0 or 2**n != len(amps):
            raise QuantumError(f"amplitude vector length {len(amps)} is not a power of two")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > EPS_NORM:
            raise QuantumError(f"state is not normalized (squared norm {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return len(self.amplitudes).bit_length() - 1

    @classmethod
    def empty(cls) -> "QuantumState":
        return cls(np.ones(1, dtype=complex))

    @classmethod
    def basis(cls, bits: str) -> "QuantumState":
        """``basis("10")`` is |10>."""
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(amps)

    def close_to(self, other: "QuantumState", tol: float = EPS_NORM, up_to_phase: bool = False) -> bool:
        if self.n != other.n:
            return False
        a, b = self.amplitudes, other.amplitudes
        if up_to_phase:
            a, b = fix_phase(a), fix_phase(b)
        return bool(np.allclose(a, b, rtol=0.0, atol=tol))

    def __repr__(self) -> str:
        return f"QuantumState({format_amplitudes(self.amplitudes)})"


def fix_phase(amps: np.ndarray, tol: float = EPS_NORM) -> np.ndarray:
    """Multiply by a global phase so the first non-negligible amplitude is real and positive."""
    for a in amps:
        if abs(a) > tol:
            return amps * (abs(a) / a)
    return amps


def format_amplitudes(amps: np.ndarray, digits: int = 12) -> str:
    parts = []
    for a in amps:
        re_, im = _clean(a.real, digits), _clean(a.imag, digits)
        parts.append(f"{re_:.{digits}g}{im:+.{digits}g}j")
    return "[" + ", ".join(parts) + "]"


def _clean(x: float, digits: int) -> float:
    x = round(float(x), digits)
    return 0.0 if x == 0 else x


# ---------------------------------------------------------------------------
# Gates


@dataclass(frozen=True, eq=False)
class GateDef:
    name: str
    arity: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        dim = 2**self.arity
        if self.arity < 1 or m.shape != (dim, dim):
            raise QuantumError(f"gate {self.name}: matrix shape {m.shape} does not match arity {self.arity}")
        if not np.allclose(m @ m.conj().T, np.eye(dim), rtol=0.0, atol=EPS_NORM):
            raise QuantumError(f"gate {self.name} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


GateTable = Mapping[str, GateDef]

_S = 1 / math.sqrt(2)
_DEFAULT_GATES = {
    "H": [[_S, _S], [_S, -_S]],
    "X": [[0, 1], [1, 0]],
    "Y": [[0, -1j], [1j, 0]],
    "Z": [[1, 0], [0, -1]],
    "CNOT": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    # teleportation corrections
    "U00": [[1, 0], [0, 1]],
    "U01": [[0, 1], [1, 0]],
    "U10": [[1, 0], [0, -1]],
    "U11": [[0, 1], [-1, 0]],
}


def default_gate_table() -> dict[str, GateDef]:
    table = {}
    for name, rows in _DEFAULT_GATES.items():
        m = np.array(rows, dtype=complex)
        table[name] = GateDef(name, int(math.log2(len(m))), m)
    return table


def parse_gate_table(text: str, base: GateTable | None = None) -> dict[str, GateDef]:
    """Read lines ``NAME arity re,im re,im ...`` (row-major) on top of ``base``.

    Blank lines and ``--``/``#`` comments are ignored.
    """
    table = dict(default_gate_table() if base is None else base)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) < 2:
            raise QuantumError(f"line {lineno}: expected 'NAME arity entries...'")
        name, arity_text, *entries = fields
        if not name[0].isupper():
            raise QuantumError(f"line {lineno}: gate name {name!r} must be capitalized")
        try:
            arity = int(arity_text)
            values = [complex(float(e.split(",")[0]), float(e.split(",")[1])) for e in entries]
        except (ValueError, IndexError) as exc:
            raise QuantumError(f"line {lineno}: malformed entry ({exc})") from None
        dim = 2**arity
        if len(values) != dim * dim:
            raise QuantumError(f"line {lineno}: gate {name} needs {dim * dim} entries, got {len(values)}")
        try:
            table[name] = GateDef(name, arity, np.array(values).reshape(dim, dim))
        except QuantumError as exc:
            raise QuantumError(f"line {lineno}: {exc}") from None
    return table


def load_gate_table(path: str | Path) -> dict[str, GateDef]:
    return parse_gate_table(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Operations


def new_qubit(q: QuantumState, b: int) -> tuple[QuantumState, int]:
    if b not in (0, 1):
        raise QuantumError(f"new expects a bit, got {b!r}")
    ket = np.zeros(2, dtype=complex)
    ket[b] = 1.0
    return QuantumState(np.kron(q.amplitudes, ket)), q.n


def apply_gate(q: QuantumState, gate: GateDef, idx: Sequence[int]) -> QuantumState:
    """Apply ``gate`` to qubits ``idx``; ``idx[0]`` is the most significant gate input."""
    idx = list(idx)
    if len(idx) != gate.arity:
        raise QuantumError(f"gate {gate.name} has arity {gate.arity}, applied to {len(idx)} qubits")
    if len(set(idx)) != len(idx):
        raise QuantumError(f"gate {gate.name} applied to duplicate qubits {idx}")
    for i in idx:
        if not 0 <= i < q.n:
            raise QuantumError(f"qubit index {i} out of range for {q.n} qubits")
    k = gate.arity
    psi = q.amplitudes.reshape((2,) * q.n)
    u = gate.matrix.reshape((2,) * (2 * k))
    # contract gate inputs with the target axes; outputs land in front
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), idx))
    out = np.moveaxis(out, list(range(k)), idx)
    return QuantumState(out.reshape(-1))


def measure(q: QuantumState, i: int) -> list[tuple[int, float, QuantumState]]:
    """Both outcomes of measuring qubit ``i``; the qubit stays allocated.

    A zero-probability outcome gets the other branch's collapsed state with
    qubit ``i`` flipped, which is a valid state with qubit ``i`` = |b>.
    """
    if not 0 <= i < q.n:
        raise QuantumError(f"qubit index {i} out of range for {q.n} qubits")
    psi = q.amplitudes.reshape((2,) * q.n)
    branches = []
    for b in (0, 1):
        proj = np.zeros_like(psi)
        sel = [slice(None)] * q.n
        sel[i] = b
        proj[tuple(sel)] = psi[tuple(sel)]
        branches.append((b, float(np.vdot(proj, proj).real), proj))
    total = branches[0][1] + branches[1][1]
    results: list[tuple[int, float, QuantumState | None]] = []
    for b, p, proj in branches:
        p = p / total
        if p > EPS_NORM**2:
            results.append((b, p, QuantumState(proj.reshape(-1) / math.sqrt(p * total))))
        else:
            results.append((b, 0.0, None))
    for pos, (b, p, state) in enumerate(results):
        if state is None:
            other = results[1 - pos][2]
            x = default_gate_table()["X"]
            results[pos] = (b, p, apply_gate(other, x, [i]))
    return results


def qubit_state(q: QuantumState, i: int, tol: float = 1e-7) -> np.ndarray:
    """Single-qubit state vector of qubit ``i`` when it is unentangled with the rest."""
    psi = np.moveaxis(q.amplitudes.reshape((2,) * q.n), i, 0).reshape(2, -1)
    # rank-one check via the reduced density matrix
    rho = psi @ psi.conj().T
    w, v = np.linalg.eigh(rho)
    if w[0] > tol:
        raise QuantumError(f"qubit {i} is entangled with the rest of the register")
    return v[:, 1]

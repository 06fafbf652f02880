"""The n x n Bacon-Shor code in the Z gauge.

Qubits are addressed by 1-based lattice coordinates ``(row, col)`` and
linearized row-major: ``q = (row - 1) * n + (col - 1)``.  Dense state vectors
use big-endian ordering, so qubit 0 is the most significant bit of a basis
index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, InvalidCodeError

DENSE_SIZE_CAP = 3

_SYMBOLS: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "E": np.array([[0, 1], [0, 0]], dtype=complex),
    "E†": np.array([[0, 0], [1, 0]], dtype=complex),
    "P0": np.array([[1, 0], [0, 0]], dtype=complex),
    "P1": np.array([[0, 0], [0, 1]], dtype=complex),
}
_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


@dataclass(frozen=True, order=True)
class LatticeCoord:
    row: int
    col: int

    def index(self, n: int) -> int:
        return (self.row - 1) * n + (self.col - 1)

    def __str__(self) -> str:
        return f"{self.row},{self.col}"


def _match_symbol(m: np.ndarray) -> tuple[str, complex] | None:
    """Write a 2x2 matrix as ``scalar * symbol``; ``None`` for the zero matrix."""
    if np.allclose(m, 0):
        return None
    for name, s in _SYMBOLS.items():
        k = np.flatnonzero(np.abs(s.ravel()) > 0)[0]
        scalar = m.ravel()[k] / s.ravel()[k]
        if np.allclose(m, scalar * s):
            return name, complex(scalar)
    raise ValueError("matrix outside the operator alphabet")


@dataclass(frozen=True)
class OperatorString:
    """Tensor product of single-qubit symbols with a global scalar.

    A scalar of zero represents the zero operator (e.g. ``E * E``).
    """

    ops: Mapping[LatticeCoord, str] = field(default_factory=dict)
    phase: complex = 1.0

    def __post_init__(self) -> None:
        clean = {c: s for c, s in self.ops.items() if s != "I"}
        for s in clean.values():
            if s not in _SYMBOLS:
                raise ValueError(f"unknown operator symbol {s!r}")
        object.__setattr__(self, "ops", dict(sorted(clean.items())))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[tuple[int, int], str]], phase: complex = 1.0) -> OperatorString:
        return cls({LatticeCoord(*rc): s for rc, s in pairs}, phase)

    @classmethod
    def parse(cls, text: str) -> OperatorString:
        """Parse ``"Z@1,1 Z@1,2"``; an optional leading ``-`` negates."""
        phase: complex = 1.0
        text = text.strip()
        if text.startswith("-"):
            phase, text = -1.0, text[1:]
        ops = {}
        for tok in text.split():
            sym, at = tok.split("@")
            r, c = at.split(",")
            ops[LatticeCoord(int(r), int(c))] = sym
        return cls(ops, phase)

    @property
    def is_zero(self) -> bool:
        return abs(self.phase) == 0

    def __mul__(self, other: OperatorString) -> OperatorString:
        phase = complex(self.phase) * complex(other.phase)
        ops: dict[LatticeCoord, str] = {}
        for c in set(self.ops) | set(other.ops):
            m = _SYMBOLS[self.ops.get(c, "I")] @ _SYMBOLS[other.ops.get(c, "I")]
            hit = _match_symbol(m)
            if hit is None:
                return OperatorString({}, 0.0)
            ops[c], s = hit
            phase *= s
        return OperatorString(ops, phase)

    def __neg__(self) -> OperatorString:
        return OperatorString(self.ops, -self.phase)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OperatorString):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        return dict(self.ops) == dict(other.ops) and np.isclose(self.phase, other.phase)

    def __hash__(self) -> int:
        return hash(tuple(self.ops.items()))

    def is_pauli(self) -> bool:
        return all(s in _PAULI_BITS for s in self.ops.values())

    def commutes_with(self, other: OperatorString) -> bool:
        """Symplectic commutation test; both operands must be Pauli strings."""
        if not (self.is_pauli() and other.is_pauli()):
            raise ValueError("commutation test needs Pauli strings")
        count = 0
        for c in set(self.ops) & set(other.ops):
            x1, z1 = _PAULI_BITS[self.ops[c]]
            x2, z2 = _PAULI_BITS[other.ops[c]]
            count += x1 * z2 + z1 * x2
        return count % 2 == 0

    def matrix(self, n: int) -> np.ndarray:
        """Dense 2^(n^2) matrix; only sensible for small n."""
        if n > DENSE_SIZE_CAP:
            raise CapacityError(f"dense operator for n={n} exceeds cap n<={DENSE_SIZE_CAP}")
        out = np.array([[1.0 + 0j]])
        for r in range(1, n + 1):
            for c in range(1, n + 1):
                out = np.kron(out, _SYMBOLS[self.ops.get(LatticeCoord(r, c), "I")])
        return self.phase * out

    def __str__(self) -> str:
        body = " ".join(f"{s}@{c}" for c, s in self.ops.items()) or "I"
        if np.isclose(self.phase, 1):
            return body
        if np.isclose(self.phase, -1):
            return "-" + body
        return f"({self.phase})*{body}"


@dataclass(frozen=True)
class BaconShorCode:
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise InvalidCodeError(f"lattice side must be an integer >= 2, got {self.n!r}")

    @property
    def t(self) -> int:
        return self.n - 1

    @property
    def num_qubits(self) -> int:
        return self.n * self.n

    def coords(self) -> list[LatticeCoord]:
        return [LatticeCoord(r, c) for r in range(1, self.n + 1) for c in range(1, self.n + 1)]

    def row(self, i: int) -> list[LatticeCoord]:
        return [LatticeCoord(i, c) for c in range(1, self.n + 1)]


def stabilizer_generators(code: BaconShorCode) -> list[OperatorString]:
    n = code.n
    zz = [
        OperatorString.from_pairs([((i, j), "Z"), ((i, j + 1), "Z")])
        for i in range(1, n + 1)
        for j in range(1, n)
    ]
    xx = [
        OperatorString({c: "X" for c in code.row(i) + code.row(i + 1)})
        for i in range(1, n)
    ]
    return zz + xx


def logical_operators(code: BaconShorCode) -> tuple[OperatorString, OperatorString]:
    xbar = OperatorString({c: "X" for c in code.row(1)})
    zbar = OperatorString({LatticeCoord(r, 1): "Z" for r in range(1, code.n + 1)})
    return xbar, zbar


def row_pattern_terms(n: int, which: str) -> dict[tuple[int, ...], complex]:
    """Codeword as a map from row-bit patterns (one bit per row) to amplitudes."""
    terms: dict[tuple[int, ...], complex] = {}
    for x in itertools.product((0, 1), repeat=n):
        even = sum(x) % 2 == 0
        if which == "plus":
            a = 1.0
        elif which == "minus":
            a = (-1.0) ** sum(x)
        elif which == "zero":
            a = 2.0 if even else 0.0
        elif which == "one":
            a = 0.0 if even else 2.0
        else:
            raise ValueError(f"unknown codeword {which!r}")
        if a:
            norm = np.sqrt(2.0) ** (n + 1 if which in ("zero", "one") else n)
            terms[x] = a / norm
    return terms


def codeword_terms(code: BaconShorCode, which: str) -> dict[tuple[int, ...], complex]:
    """Codeword as a map from full n^2-bit strings (row-major) to amplitudes."""
    n = code.n
    out = {}
    for x, a in row_pattern_terms(n, which).items():
        out[tuple(b for b in x for _ in range(n))] = a
    return out


def codeword_state(code: BaconShorCode, which: str, cap: int = DENSE_SIZE_CAP) -> np.ndarray:
    if code.n > cap:
        raise CapacityError(f"dense codeword for n={code.n} exceeds cap n<={cap}")
    nq = code.num_qubits
    psi = np.zeros(2**nq, dtype=complex)
    for bits, a in codeword_terms(code, which).items():
        psi[int("".join(map(str, bits)), 2)] = a
    return psi


def code_description(code: BaconShorCode) -> dict:
    xbar, zbar = logical_operators(code)
    return {
        "n": code.n,
        "t": code.t,
        "stabilizers": [str(g) for g in stabilizer_generators(code)],
        "logicals": {"X": str(xbar), "Z": str(zbar)},
    }

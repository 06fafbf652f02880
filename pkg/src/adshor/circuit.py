"""Time-stepped circuit representation.

A circuit is a list of timesteps, each a list of instructions acting on
disjoint qubits.  Besides the physical operations there are two bookkeeping
kinds:

* ``Wait`` marks an explicit idle timestep (a memory step).
* ``Calc`` runs a named classical function over the outcome records.  It is
  evaluated at the start of its timestep, before any quantum instruction of
  that step, and never carries noise.

Any instruction may carry ``cond``, a tuple of record keys that must all hold
the value 1 (a leading ``!`` requires the value to differ from 1).  A timestep
in which no quantum instruction executes is skipped entirely, so it carries no
noise in that branch.

Qubits are live from their preparation (or from the start, for circuit
inputs) through their measurement.  Every (qubit, timestep) pair with the
qubit live is a location.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

from .errors import (
    CircuitParseError,
    CircuitStateError,
    SchedulingError,
    UnsupportedOperationError,
)

SCHEMA_VERSION = 1

PREPARATIONS = frozenset({"PrepPlus", "PrepZero"})
MEASUREMENTS = frozenset({"MX", "MZ"})
ONE_QUBIT = frozenset({"X", "Z", "S", "T"})
ARITY = {"CNOT": 2, "CZ": 2, "CCZ": 3}
WAIT = "Wait"
CALC = "Calc"
QUANTUM_KINDS = PREPARATIONS | MEASUREMENTS | ONE_QUBIT | frozenset(ARITY) | {WAIT}
ALL_KINDS = QUANTUM_KINDS | {CALC}

ROLES = ("data", "coupling", "parity", "xx", "flag", "resource", "reference")


@dataclass(frozen=True)
class Qubit:
    id: int
    role: str
    label: str = ""


@dataclass(frozen=True, eq=True)
class Instruction:
    kind: str
    operands: tuple[int, ...] = ()
    record: str | None = None
    cond: tuple[str, ...] = ()
    fn: str | None = None
    args: Any = None

    @property
    def is_quantum(self) -> bool:
        return self.kind != CALC

    def with_cond(self, keys: Sequence[str]) -> Instruction:
        if not keys:
            return self
        return replace(self, cond=tuple(keys) + self.cond)

    def to_json(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind, "operands": list(self.operands)}
        if self.record is not None:
            d["record"] = self.record
        if self.cond:
            d["cond"] = list(self.cond)
        if self.fn is not None:
            d["fn"] = self.fn
            d["args"] = self.args
        return d


def cond_holds(cond: Sequence[str], records: dict) -> bool:
    for key in cond:
        if key.startswith("!"):
            if records.get(key[1:], 0) == 1:
                return False
        elif records.get(key, 0) != 1:
            return False
    return True


@dataclass(frozen=True)
class Location:
    qubit: int
    step: int
    operation: str | None


@dataclass(frozen=True)
class LocationIndex:
    locations: tuple[Location, ...]
    # positions into ``locations`` of the first entry of each step
    step_offsets: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.locations)

    def __iter__(self):
        return iter(self.locations)

    def __getitem__(self, i: int) -> Location:
        return self.locations[i]

    def at_step(self, step: int) -> tuple[Location, ...]:
        lo = self.step_offsets[step]
        hi = self.step_offsets[step + 1] if step + 1 < len(self.step_offsets) else len(self.locations)
        return self.locations[lo:hi]


@dataclass
class Circuit:
    qubits: list[Qubit]
    steps: list[list[Instruction]]
    records: list[str] = field(default_factory=list)
    inputs: list[int] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    index: LocationIndex | None = None

    @property
    def scheduled(self) -> bool:
        return self.index is not None

    def locations(self) -> LocationIndex:
        if self.index is None:
            raise CircuitStateError("circuit must be scheduled before its locations are known")
        return self.index

    def qubit(self, qid: int) -> Qubit:
        return self.qubits[qid]

    def instructions(self) -> Iterable[Instruction]:
        for step in self.steps:
            yield from step

    def count(self, kind: str) -> int:
        return sum(1 for ins in self.instructions() if ins.kind == kind)

    def outputs(self) -> list[int]:
        """Qubits still live after the last step."""
        live = set(self.inputs)
        for step in self.steps:
            for ins in step:
                if ins.kind in PREPARATIONS:
                    live.add(ins.operands[0])
                elif ins.kind in MEASUREMENTS:
                    live.discard(ins.operands[0])
        return sorted(live)


def check_gate_set(circuit: Circuit) -> None:
    for s, step in enumerate(circuit.steps):
        for ins in step:
            if ins.kind not in ALL_KINDS:
                raise UnsupportedOperationError(f"unsupported operation {ins.kind!r} at step {s}")


def _validate_instruction(ins: Instruction, where: str) -> None:
    if ins.kind not in ALL_KINDS:
        raise UnsupportedOperationError(f"{where}: unknown gate kind {ins.kind!r}")
    if ins.kind == CALC:
        if not ins.fn:
            raise CircuitParseError(f"{where}: Calc instruction needs a function name")
        return
    want = ARITY.get(ins.kind, None if ins.kind == WAIT else 1)
    if want is not None and len(ins.operands) != want:
        raise CircuitParseError(f"{where}: {ins.kind} takes {want} operand(s), got {len(ins.operands)}")
    if ins.kind == WAIT and not ins.operands:
        raise CircuitParseError(f"{where}: Wait needs at least one operand")
    if len(set(ins.operands)) != len(ins.operands):
        raise CircuitParseError(f"{where}: repeated operand in {ins.kind}")
    if (ins.kind in MEASUREMENTS) != (ins.record is not None):
        raise CircuitParseError(f"{where}: measurements (and only measurements) carry a record key")


def schedule(circuit: Circuit) -> Circuit:
    """Validate the layering and enumerate every location, idles included."""
    nq = len(circuit.qubits)
    live = [False] * nq
    for q in circuit.inputs:
        live[q] = True
    locs: list[Location] = []
    offsets: list[int] = []
    seen_records: set[str] = set()
    for s, step in enumerate(circuit.steps):
        offsets.append(len(locs))
        used: dict[int, str] = {}
        quantum = False
        for ins in step:
            _validate_instruction(ins, f"step {s}")
            if not ins.is_quantum:
                continue
            quantum = True
            for q in ins.operands:
                if not 0 <= q < nq:
                    raise SchedulingError(f"step {s}: unknown qubit {q}")
                if q in used:
                    raise SchedulingError(f"step {s}: qubit {q} used by both {used[q]} and {ins.kind}")
                used[q] = ins.kind
                if ins.kind in PREPARATIONS:
                    if live[q]:
                        raise SchedulingError(f"step {s}: qubit {q} prepared while live")
                elif not live[q]:
                    raise SchedulingError(f"step {s}: qubit {q} used by {ins.kind} before preparation")
            if ins.record is not None:
                if ins.record in seen_records:
                    raise SchedulingError(f"step {s}: record {ins.record!r} written twice")
                seen_records.add(ins.record)
        if not quantum:
            continue
        for q in range(nq):
            if live[q] or (q in used and used[q] in PREPARATIONS):
                op = used.get(q)
                locs.append(Location(q, s, None if op == WAIT else op))
        for q, kind in used.items():
            if kind in PREPARATIONS:
                live[q] = True
            elif kind in MEASUREMENTS:
                live[q] = False
    return replace(circuit, index=LocationIndex(tuple(locs), tuple(offsets)))


def count_locations(circuit: Circuit, mode: str = "physical") -> int:
    index = circuit.locations()
    if mode == "physical":
        return len(index)
    if mode == "paper-accounting":
        return accounted_count(circuit.meta.get("segments", []))
    raise ValueError(f"unknown counting mode {mode!r}")


def segment_location_count(seg: dict) -> int:
    """Location count of one tagged component under the accounting conventions
    used for the threshold estimate (one timestep per coupling layer, three per
    parity layer, a square count for the flagged XX measurement)."""
    kind = seg["kind"]
    if kind == "coupling":
        return seg["extended"]
    if kind == "damping_round":
        return 3 * (seg["extended"] + seg["checks"])
    if kind == "xx":
        q = seg["extended"] + 2
        return q * q + 4
    if kind == "parity_round":
        return 3 * (seg["extended"] + seg["checks"])
    if kind == "decouple":
        return 3 * seg["extended"]
    return 0


def accounted_count(segments: Iterable[dict]) -> int:
    return sum(segment_location_count(s) for s in segments)


# --- serialization -------------------------------------------------------


def serialize(circuit: Circuit) -> str:
    doc = {
        "version": SCHEMA_VERSION,
        "qubits": [{"id": q.id, "role": q.role, "label": q.label} for q in circuit.qubits],
        "inputs": list(circuit.inputs),
        "steps": [[ins.to_json() for ins in step] for step in circuit.steps],
        "records": list(circuit.records),
        "meta": circuit.meta,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def deserialize(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise CircuitParseError("top-level JSON value must be an object")
    if doc.get("version") != SCHEMA_VERSION:
        raise CircuitParseError(f"unsupported schema version {doc.get('version')!r}")
    try:
        qubits = [Qubit(int(q["id"]), str(q["role"]), str(q.get("label", ""))) for q in doc["qubits"]]
        for i, q in enumerate(qubits):
            if q.id != i:
                raise CircuitParseError(f"qubits[{i}]: ids must be consecutive from 0")
            if q.role not in ROLES:
                raise CircuitParseError(f"qubits[{i}]: unknown role {q.role!r}")
        steps = []
        for s, raw_step in enumerate(doc["steps"]):
            step = []
            for k, raw in enumerate(raw_step):
                where = f"steps[{s}][{k}]"
                kind = raw.get("kind")
                if kind not in ALL_KINDS:
                    raise CircuitParseError(f"{where}: unknown gate kind {kind!r}")
                ins = Instruction(
                    kind=kind,
                    operands=tuple(int(q) for q in raw.get("operands", [])),
                    record=raw.get("record"),
                    cond=tuple(raw.get("cond", [])),
                    fn=raw.get("fn"),
                    args=raw.get("args"),
                )
                _validate_instruction(ins, where)
                step.append(ins)
            steps.append(step)
        circuit = Circuit(
            qubits=qubits,
            steps=steps,
            records=[str(r) for r in doc["records"]],
            inputs=[int(q) for q in doc.get("inputs", [])],
            meta=doc.get("meta", {}),
        )
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        if isinstance(exc, CircuitParseError):
            raise
        raise CircuitParseError(f"malformed circuit document: {exc!r}") from exc
    return schedule(circuit)


# --- construction helpers ------------------------------------------------

Block = list  # list of timesteps, each a list of Instruction


def seq(*blocks: Block) -> Block:
    out: Block = []
    for b in blocks:
        out.extend(list(step) for step in b)
    return out


def par(*blocks: Block) -> Block:
    """Run blocks side by side, aligned at their first timestep."""
    depth = max((len(b) for b in blocks), default=0)
    out: Block = [[] for _ in range(depth)]
    for b in blocks:
        for i, step in enumerate(b):
            out[i].extend(step)
    return out


def conditioned(block: Block, *keys: str) -> Block:
    return [[ins.with_cond(keys) for ins in step] for step in block]


class Builder:
    """Allocates qubits and record names while blocks are assembled."""

    def __init__(self) -> None:
        self.qubits: list[Qubit] = []
        self.records: list[str] = []
        self.meta: dict = {"segments": []}

    def alloc(self, role: str, label: str = "") -> int:
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        q = len(self.qubits)
        self.qubits.append(Qubit(q, role, label))
        return q

    def record(self, name: str) -> str:
        self.records.append(name)
        return name

    def segment(self, kind: str, **info: Any) -> None:
        self.meta["segments"].append({"kind": kind, **info})

    def build(self, steps: Block, inputs: Sequence[int], **meta: Any) -> Circuit:
        steps = [step for step in steps if step]
        m = dict(self.meta)
        m.update(meta)
        return schedule(Circuit(list(self.qubits), steps, list(self.records), list(inputs), m))


def op(kind: str, *operands: int, record: str | None = None) -> Instruction:
    return Instruction(kind, tuple(operands), record)


def calc(fn: str, **args: Any) -> Instruction:
    return Instruction(CALC, (), None, (), fn, args)

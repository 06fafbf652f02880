"""Executable checks built on the engine: logical amplitudes of simulated
outputs, ideal decoding, the fault-tolerance properties P1-P4, the XX
measurement error-sequence check, and logical infidelity estimates.

Logical states are tracked with reference qubits: a block starts maximally
entangled with a key such as ``"ref0"``, so one run covers every input.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .. import decoder as dec
from ..circuit import Circuit, calc, op, par, seq
from ..codes import BaconShorCode, codeword_terms
from ..errors import DecodingFailure, DomainError
from ..gadgets.core import Context, chain, ideal_ec, parity_block, xx_measurement
from . import state as st
from .engine import (
    FAULT_UNITS,
    Engine,
    FaultSweep,
    InitialState,
    KrausNoise,
    NoNoise,
    NoiseStrategy,
    Result,
    SampledNoise,
)

SQRT2 = math.sqrt(2.0)
TOL = 1e-10

# --- logical gates -------------------------------------------------------

_H = np.array([[1, 1], [1, -1]]) / SQRT2
GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
    "H": _H.astype(complex),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CCZ": np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex),
}

AXIAL_STATES: dict[str, np.ndarray] = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / SQRT2,
    "-": np.array([1, -1], dtype=complex) / SQRT2,
    "+i": np.array([1, 1j], dtype=complex) / SQRT2,
    "-i": np.array([1, -1j], dtype=complex) / SQRT2,
}


# --- initial states ------------------------------------------------------


def codeword_initial(code: BaconShorCode, qubits: Sequence[int], which: str) -> InitialState:
    return InitialState(tuple(qubits), codeword_terms(code, which))


def choi_initial(code: BaconShorCode, blocks: Sequence[Sequence[int]], refs: Sequence[str] | None = None) -> InitialState:
    """Each block maximally entangled with its own reference qubit."""
    refs = list(refs or [f"ref{i}" for i in range(len(blocks))])
    zero = codeword_terms(code, "zero")
    one = codeword_terms(code, "one")
    init = None
    for blk, ref in zip(blocks, refs):
        terms = {}
        for r, cw in ((0, zero), (1, one)):
            for bits, a in cw.items():
                terms[(r,) + bits] = a / SQRT2
        part = InitialState((ref,) + tuple(blk), terms)
        init = part if init is None else init.tensor(part)
    return init


# --- logical amplitudes --------------------------------------------------


def _block_logical(keys: np.ndarray, slots: Sequence[int], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per key: whether the block bits form a codeword pattern, and its logical value."""
    valid = np.ones(len(keys), dtype=bool)
    parity = np.zeros(len(keys), dtype=np.int64)
    for r in range(n):
        mask = 0
        for sl in slots[r * n : (r + 1) * n]:
            mask |= 1 << sl
        c = st.popcount(keys, mask)
        valid &= (c == 0) | (c == n)
        parity ^= (c == n).astype(np.int64)
    return valid, parity


@dataclass
class LogicalView:
    """Amplitudes of one output branch projected onto the code space.

    ``amps[p, r, l]`` = <r|<l_L| out> for column ``p``, reference index ``r``
    and logical index ``l`` (big-endian over blocks); ``gram[p, r, r']`` is the
    overlap of the reference-conditioned outputs.
    """

    amps: np.ndarray
    gram: np.ndarray

    @property
    def norm(self) -> np.ndarray:
        return np.einsum("prr->p", self.gram).real


def logical_view(
    result: Result,
    blocks: Sequence[Sequence[Hashable]],
    refs: Sequence[Hashable],
    n: int,
    frames: Sequence[tuple[int, int]] | None = None,
    code_amp: float | None = None,
) -> LogicalView:
    extra = set(result.slot) - {q for b in blocks for q in b} - set(refs)
    if extra:
        raise DomainError(f"output has live qubits outside the decoded blocks: {sorted(map(str, extra))}")
    keys, amps = result.keys, result.amps
    P = amps.shape[1]
    k = len(blocks)
    ref_idx = np.zeros(len(keys), dtype=np.int64)
    for ref in refs:
        ref_idx = ref_idx * 2 + ((keys >> st.U64(result.slot[ref])) & st.U64(1)).astype(np.int64)
    log_idx = np.zeros(len(keys), dtype=np.int64)
    valid = np.ones(len(keys), dtype=bool)
    for blk in blocks:
        slots = [result.slot[q] for q in blk]
        if len(blk) == 1:
            v, l = np.ones(len(keys), dtype=bool), ((keys >> st.U64(slots[0])) & st.U64(1)).astype(np.int64)
        else:
            v, l = _block_logical(keys, slots, n)
        valid &= v
        log_idx = log_idx * 2 + l
    if code_amp is None:
        code_amp = 1.0 if n == 1 else 1.0 / math.sqrt(2 ** (n - 1))
    A = np.zeros((P, 2 ** len(refs), 2**k), dtype=complex)
    sel = np.nonzero(valid)[0]
    np.add.at(A, (slice(None), ref_idx[sel], log_idx[sel]), (amps[sel] * code_amp ** k).T)
    if frames:
        A = apply_frames(A, frames)
    ref_mask = 0
    for ref in refs:
        ref_mask |= 1 << result.slot[ref]
    rest = keys & ~st.U64(ref_mask)
    uniq, inv = np.unique(rest, return_inverse=True)
    M = np.zeros((len(uniq), 2 ** len(refs), P), dtype=complex)
    np.add.at(M, (inv, ref_idx), amps)
    G = np.einsum("urp,usp->prs", M.conj(), M)
    return LogicalView(A, G)


def apply_frames(A: np.ndarray, frames: Sequence[tuple[int, int]]) -> np.ndarray:
    """Undo Pauli frames: the stored output equals X^x Z^z times the ideal one."""
    k = len(frames)
    out = A.copy()
    for b, (x, z) in enumerate(frames):
        shift = k - 1 - b
        idx = np.arange(2**k)
        if x:
            out = out[..., idx ^ (1 << shift)]
        if z:
            sign = np.where((idx >> shift) & 1, -1.0, 1.0)
            out = out * sign
    return out


def expected_choi(gate: np.ndarray) -> np.ndarray:
    """E[r, l] = <r|<l| (I ⊗ G)|Φ>, |Φ> the normalized maximally entangled state."""
    d = gate.shape[0]
    return gate.T / math.sqrt(d)


def choi_fidelity(view: LogicalView, gate: np.ndarray) -> np.ndarray:
    """|<ideal|out>|^2 per column (unnormalized by the branch probability)."""
    E = expected_choi(gate)
    return np.abs(np.einsum("rl,prl->p", E.conj(), view.amps)) ** 2


def state_infidelity(view: LogicalView, psi: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Unnormalized infidelity contribution of one branch for input ``psi``.

    Inputs are read off the reference qubit: out(psi) = sqrt(d) * sum_r psi_r out_r.
    """
    d = len(psi)
    total = d * np.einsum("r,prs,s->p", psi.conj(), view.gram, psi).real
    phi = math.sqrt(d) * np.einsum("r,prl->pl", psi, view.amps)
    return total - np.abs(phi @ target.conj()) ** 2


# --- ideal decoding ------------------------------------------------------


@functools.lru_cache(maxsize=None)
def ideal_decoder(n: int, k: int = 1) -> tuple[Circuit, tuple[tuple[int, ...], ...]]:
    """Ideal EC on ``k`` blocks with prior row statuses read from ``prior{b}.{row}``."""
    ctx = Context(n)
    blocks = [ctx.block("D") for _ in range(k)]
    steps = []
    for b, blk in enumerate(blocks):
        part, _ = ideal_ec(ctx, blk, f"I{b}", prior={r: f"prior{b}.{r}" for r in range(1, n + 1)})
        steps.append(part)
    circuit = ctx.b.build(seq(*steps), [q for blk in blocks for q in blk.qubits], gadget="ideal-decoder", n=n)
    return circuit, tuple(blk.qubits for blk in blocks)


def ideal_decode(
    result: Result,
    n: int,
    blocks: Sequence[Sequence[int]],
    flags: Sequence[dict] | None = None,
) -> Iterable[Result]:
    """Run the noiseless ideal EC on the output blocks of ``result``.

    ``flags`` maps, per block, row -> record key of the row status handed over
    by the gadget's last EC unit.
    """
    circuit, dq = ideal_decoder(n, len(blocks))
    mapping = {q: d for blk, dblk in zip(blocks, dq) for q, d in zip(blk, dblk)}
    records = {}
    for b, fl in enumerate(flags or []):
        for r, key in fl.items():
            records[f"prior{b}.{r}"] = int(result.records.get(key, 0))
    init = result.as_initial(mapping, records)
    return Engine(circuit, NoNoise(), extras=init.extras).iterate(init)


# --- fault sweeps --------------------------------------------------------


@dataclass
class Violation:
    faults: tuple
    detail: str

    def to_json(self) -> dict:
        return {"faults": [list(f) for f in self.faults], "detail": self.detail}


@dataclass
class PropertyReport:
    prop: str
    gadget: str
    n: int
    budget: int
    checked: int = 0
    exceeds_budget: int = 0
    rejected: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "property": self.prop,
            "gadget": self.gadget,
            "n": self.n,
            "budget": self.budget,
            "checked": self.checked,
            "exceeds_budget": self.exceeds_budget,
            "rejected": self.rejected,
            "violations": [v.to_json() for v in self.violations],
        }


def fault_units(faults: Iterable[tuple]) -> int:
    return sum(FAULT_UNITS[f[0]] for f in faults)


def _record_bit(records: dict, key: str | None) -> int:
    return int(key is not None and records.get(key, 0) == 1)


def _frames(circuit: Circuit, records: dict) -> list[tuple[int, int]]:
    return [(_record_bit(records, x), _record_bit(records, z)) for x, z in circuit.meta.get("frames", [])]


def decoded_fidelity(
    circuit: Circuit,
    result: Result,
    gate: np.ndarray,
    refs: Sequence[str],
    n: int,
) -> tuple[float, float]:
    """(Choi overlap, probability) of ``result`` after ideal decoding, column 0."""
    blocks = circuit.meta["output_blocks"]
    frames = _frames(circuit, result.records)
    fid = 0.0
    prob = 0.0
    for dres in ideal_decode(result, n, blocks, circuit.meta.get("flags")):
        _, dq = ideal_decoder(n, len(blocks))
        view = logical_view(dres, dq, refs, n, frames)
        fid += float(choi_fidelity(view, gate)[0])
        prob += float(view.norm[0])
    return fid, prob


def check_p1(
    circuit: Circuit,
    n: int,
    budget: int = 1,
    kinds: Sequence[str] = ("E1", "Z"),
    gate: np.ndarray | None = None,
    prop: str = "P1",
) -> PropertyReport:
    """Inject every fault combination within ``kinds``; for placements within
    the budget, ideal decoding of the output must equal the ideal gate applied
    to the (perfect) input."""
    code = BaconShorCode(n)
    blocks = circuit.meta["input_blocks"]
    refs = [f"ref{i}" for i in range(len(blocks))]
    init = choi_initial(code, blocks, refs)
    gate = GATES["I"] if gate is None else gate
    if gate.shape[0] != 2 ** len(blocks):
        gate = functools.reduce(np.kron, [gate] * len(blocks))
    report = PropertyReport(prop, circuit.meta.get("gadget", "?"), n, budget)
    max_faults = max(1, budget)
    engine = Engine(circuit, FaultSweep(kinds, max_faults), extras=init.extras)
    for res in engine.iterate(init):
        units = fault_units(res.faults)
        if units > budget:
            report.exceeds_budget += 1
            continue
        acc = circuit.meta.get("accept")
        if acc is not None and res.records.get(acc, 0) != 1:
            report.rejected += 1
            continue
        report.checked += 1
        fid, prob = decoded_fidelity(circuit, res, gate, refs, n)
        if fid < (1 - TOL) * prob:
            report.violations.append(Violation(res.faults, f"decoded overlap {fid:.6g} of probability {prob:.6g}"))
    return report


def check_p2_cat(n: int, kinds: Sequence[str] = ("E1", "Z"), budget: int = 1) -> PropertyReport:
    """Cat preparation under single faults: rejected, or the row embedded among
    perfect cats ideal-decodes to |+>_L."""
    from ..gadgets import build_logical

    code = BaconShorCode(n)
    circuit = build_logical(code, "prep-cat")
    row = circuit.meta["output_row"]
    acc = circuit.meta["accept"]
    report = PropertyReport("P2", "prep-cat", n, budget)
    plus = codeword_terms(code, "plus")
    cat = {tuple([0] * n): 1 / SQRT2, tuple([1] * n): 1 / SQRT2}
    dcirc, (dq,) = ideal_decoder(n, 1)
    for res in Engine(circuit, FaultSweep(kinds, 1)).iterate(InitialState((), {(): 1.0})):
        if fault_units(res.faults) > budget:
            report.exceeds_budget += 1
            continue
        if res.records.get(acc, 0) != 1:
            report.rejected += 1
            continue
        report.checked += 1
        out = res.terms(row, column=None)
        terms = {}
        for bits, a in out.items():
            rest = dict(cat)
            for others in itertools.product(rest.items(), repeat=n - 1):
                key = tuple(bits) + tuple(b for k, _ in others for b in k)
                amp = a
                for _, w in others:
                    amp = amp * w
                terms[key] = terms.get(key, 0) + amp
        init = InitialState(tuple(dq), terms)
        fid = 0.0
        prob = 0.0
        for dres in Engine(dcirc, NoNoise()).iterate(init):
            vals = dres.terms(dq, column=0)
            fid += abs(sum(np.conj(plus.get(k, 0)) * v for k, v in vals.items())) ** 2
            prob += float(dres.probability()[0])
        if fid < (1 - TOL) * prob:
            report.violations.append(Violation(res.faults, f"decoded overlap {fid:.6g} of probability {prob:.6g}"))
    return report


def check_meas_x(n: int, kinds: Sequence[str] = ("E1", "Z"), budget: int = 1) -> PropertyReport:
    """Logical X measurement of |±>_L: every in-budget fault leaves the outcome intact."""
    from ..gadgets import build_logical

    code = BaconShorCode(n)
    circuit = build_logical(code, "meas-x")
    key = circuit.meta["outcome"]
    report = PropertyReport("P3", "meas-x", n, budget)
    for which, want in (("plus", 1), ("minus", -1)):
        init = codeword_initial(code, circuit.inputs, which)
        for res in Engine(circuit, FaultSweep(kinds, 1)).iterate(init):
            if fault_units(res.faults) > budget:
                report.exceeds_budget += 1
                continue
            report.checked += 1
            if res.records[key] != want:
                report.violations.append(Violation(res.faults, f"{which}: outcome {res.records[key]}"))
    return report


def check_property(prop: str, gadget: str, n: int, budget: int = 1, policy: str = "redundant") -> PropertyReport:
    from ..gadgets import build_cz_extended, build_logical

    code = BaconShorCode(n)
    prop = prop.upper()
    if prop == "P1":
        return check_p1(build_logical(code, gadget, policy=policy), n, budget)
    if prop == "P2":
        if gadget != "prep-cat":
            raise DomainError("P2 is checked on the prep-cat gadget")
        return check_p2_cat(n, budget=budget)
    if prop == "P3":
        if gadget != "meas-x":
            raise DomainError("P3 is checked on the meas-x gadget")
        return check_meas_x(n, budget=budget)
    if prop == "P4":
        joint = gadget != "cz-extended-independent"
        circuit = build_cz_extended(code, policy, joint=joint)
        return check_p1(circuit, n, budget, gate=GATES["CZ"], prop="P4")
    raise DomainError(f"unknown property {prop!r}")


# --- ideal EC against input damping -------------------------------------


def damp_terms(terms: dict, positions: Sequence[int]) -> dict:
    """Apply the damping jump |0><1| at each tuple position (zero-norm parts dropped)."""
    out: dict = {}
    for bits, a in terms.items():
        if any(bits[i] == 0 for i in positions):
            continue
        b = list(bits)
        for i in positions:
            b[i] = 0
        out[tuple(b)] = out.get(tuple(b), 0) + a
    return out


@dataclass
class PlacementOverlap:
    qubits: tuple[tuple[int, int], ...]
    overlap: float
    probability: float


def check_ideal_correction(n: int, max_errors: int = 2) -> list[PlacementOverlap]:
    """Every placement of up to ``max_errors`` damping jumps on the data of a
    maximally entangled input, followed by the ideal EC: overlap of the
    corrected (normalized) state with the undamaged input."""
    from ..gadgets import build_logical

    code = BaconShorCode(n)
    circuit = build_logical(code, "ideal-ec")
    (blk,) = circuit.meta["input_blocks"]
    init = choi_initial(code, [blk], ["ref0"])
    cells = [(r, c) for r in range(1, n + 1) for c in range(1, n + 1)]
    out = []
    for k in range(1, max_errors + 1):
        for placement in itertools.combinations(range(n * n), k):
            terms = damp_terms(init.terms, [1 + i for i in placement])
            fid = prob = 0.0
            for res in Engine(circuit, NoNoise(), extras=init.extras).iterate(InitialState(init.qubits, terms)):
                view = logical_view(res, [blk], ["ref0"], n)
                fid += float(choi_fidelity(view, GATES["I"])[0])
                prob += float(view.norm[0])
            out.append(PlacementOverlap(tuple(cells[i] for i in placement), fid / prob, prob))
    return out


# --- zero-noise catalog --------------------------------------------------

_PLUS = AXIAL_STATES["+"]
GATE_ACTIONS: dict[str, str] = {
    "ideal-ec": "I",
    "ft-ec": "I",
    "ft-ec-memory": "I",
    "subcircuit": "I",
    "cz": "CZ",
    "cz-extended": "CZ",
    "ccz": "CCZ",
    "teleport-h": "H",
    "teleport-s": "S",
    "teleport-t": "T",
}
PREPARED_STATES: dict[str, np.ndarray] = {
    "prep-plus": _PLUS,
    "prep-zero": AXIAL_STATES["0"],
    "prep-s": GATES["S"] @ _PLUS,
    "prep-t": GATES["T"] @ _PLUS,
}


@dataclass
class CatalogEntry:
    gadget: str
    n: int
    branches: int = 0
    probability: float = 0.0
    accepted: float = 0.0
    worst: float = 1.0

    @property
    def ok(self) -> bool:
        return abs(self.probability - 1) < TOL and abs(self.accepted - 1) < TOL and self.worst > 1 - TOL

    def to_json(self) -> dict:
        return {
            "gadget": self.gadget,
            "n": self.n,
            "branches": self.branches,
            "probability": self.probability,
            "accept_probability": self.accepted,
            "worst_fidelity": self.worst,
            "ok": self.ok,
        }


def _row_terms(rows: Sequence[Sequence[int]], value_sets: Sequence[Sequence[int]]) -> InitialState:
    """Each row in an equal superposition of the constant strings in ``value_sets``."""
    init = None
    for row, vals in zip(rows, value_sets):
        terms = {tuple([v] * len(row)): 1 / math.sqrt(len(vals)) for v in vals}
        part = InitialState(tuple(row), terms)
        init = part if init is None else init.tensor(part)
    return init


def check_noiseless(gadget: str, n: int, policy: str = "redundant", samples: int | None = None, seed: int = 0) -> CatalogEntry:
    """Run a gadget without noise and measure how far it is from its logical action.

    Every measurement branch is followed unless ``samples`` is given, in which
    case that many outcome trajectories are drawn; ``worst`` is the smallest
    normalized overlap with the ideal output over the branches seen.
    """
    from ..gadgets import build_logical

    code = BaconShorCode(n)
    circuit = build_logical(code, gadget, policy=policy)
    meta = circuit.meta
    entry = CatalogEntry(gadget, n)
    acc_key = meta.get("accept")

    def runs(init: InitialState) -> Iterable[Result]:
        if samples is None:
            yield from Engine(circuit, NoNoise(), extras=init.extras).iterate(init)
            return
        rng = np.random.default_rng(seed)
        engine = Engine(circuit, NoNoise(), extras=init.extras, rng=rng)
        root = engine.initial_branch(init)
        for _ in range(samples):
            yield from engine.iterate(root)

    def tally(res: Result, fid: float, norm: float, weight: float) -> None:
        entry.branches += 1
        entry.probability += weight * norm
        if acc_key is None or res.records.get(acc_key, 0) == 1:
            entry.accepted += weight * norm
        if norm > TOL:
            entry.worst = min(entry.worst, fid / norm)

    def weight_of(res: Result, norm: float) -> float:
        # sampled trajectories stand for probability 1/samples each
        return 1.0 / (samples * norm) if samples is not None and norm > 0 else 1.0

    if gadget in GATE_ACTIONS:
        gate = GATES[GATE_ACTIONS[gadget]]
        blocks = meta["input_blocks"]
        refs = [f"ref{i}" for i in range(len(blocks))]
        init = choi_initial(code, blocks, refs)
        for res in runs(init):
            view = logical_view(res, meta["output_blocks"], refs, n, _frames(circuit, res.records))
            norm = float(view.norm[0])
            tally(res, float(choi_fidelity(view, gate)[0]), norm, weight_of(res, norm))
    elif gadget in PREPARED_STATES:
        target = PREPARED_STATES[gadget]
        for res in runs(InitialState((), {(): 1.0})):
            view = logical_view(res, meta["output_blocks"], [], n, _frames(circuit, res.records))
            norm = float(view.norm[0])
            fid = float(abs(np.vdot(target, view.amps[0, 0])) ** 2)
            tally(res, fid, norm, weight_of(res, norm))
    elif gadget in ("meas-x", "meas-z"):
        states = (("plus", 1), ("minus", -1)) if gadget == "meas-x" else (("zero", 1), ("one", -1))
        for which, want in states:
            for res in runs(codeword_initial(code, circuit.inputs, which)):
                norm = float(res.probability()[0])
                hit = float(res.records[meta["outcome"]] == want)
                tally(res, hit * norm, norm, weight_of(res, norm) / 2)
    elif gadget == "prep-cat":
        row = meta["output_row"]
        cat = {tuple([0] * n): 1 / SQRT2, tuple([1] * n): 1 / SQRT2}
        for res in runs(InitialState((), {(): 1.0})):
            out = res.terms(row, column=0)
            extra = set(res.slot) - set(row)
            if extra:
                raise DomainError(f"cat preparation leaves live qubits {sorted(extra)}")
            norm = float(res.probability()[0])
            fid = abs(sum(np.conj(cat.get(k, 0)) * v for k, v in out.items())) ** 2
            tally(res, fid, norm, weight_of(res, norm))
    elif gadget in ("xx", "damping"):
        rows = meta["extended_rows"] if gadget == "xx" else [meta["extended_row"]]
        flat = [q for r in rows for q in r]
        inputs = [[0, 1]] * len(rows) if gadget == "xx" else [[1]]
        init = _row_terms(rows, inputs)
        start = dict(init.terms)
        for res in runs(init):
            out = res.terms(flat, column=0)
            norm = float(res.probability()[0])
            fid = abs(sum(np.conj(start.get(k, 0)) * v for k, v in out.items())) ** 2
            if gadget == "xx" and res.records[meta["xx"]["xx"] if isinstance(meta["xx"], dict) else meta["xx"]] != 1:
                fid = 0.0
            tally(res, fid, norm, weight_of(res, norm))
    else:
        raise DomainError(f"no logical action known for gadget {gadget!r}")
    return entry


# --- XX measurement error sequences --------------------------------------


@functools.lru_cache(maxsize=None)
def xx_fragment(n: int) -> tuple[Circuit, frozenset]:
    """Flagged XX measurement on two extended rows followed by one noiseless
    round of adjacent parity checks per row.  Returns the circuit and the
    fault locations belonging to the XX measurement."""
    ctx = Context(n, "naive")
    t = n - 1
    rows = [[ctx.alloc("data", f"x{r}.{i}") for i in range(2 * t + 1)] for r in (1, 2)]
    xx, _ = xx_measurement(ctx, rows[0], rows[1], "X")
    checks = [
        parity_block(ctx, chain(rows[r], False), [f"S.{r}.{c}" for c in range(2 * t)], f"S.{r}") for r in (0, 1)
    ]
    circuit = ctx.b.build(seq(xx, par(*checks)), rows[0] + rows[1], rows=rows)
    last = len(xx)
    allowed = frozenset((loc.qubit, loc.step) for loc in circuit.locations() if loc.step < last)
    return circuit, allowed


def check_xx_sequences(n: int, max_faults: int = 2) -> PropertyReport:
    """Every ≤ ``max_faults`` damping injection into the XX measurement: the
    error sequences chosen from the parity syndromes differ in at most as many
    columns as there were faults."""
    circuit, allowed = xx_fragment(n)
    t = n - 1
    rows = circuit.meta["rows"]
    cat = {}
    L = 2 * t + 1
    for a in (0, 1):
        for b in (0, 1):
            cat[tuple([a] * L + [b] * L)] = 0.5
    init = InitialState(tuple(rows[0] + rows[1]), cat)
    report = PropertyReport("xx-diff", "xx", n, max_faults)
    for res in Engine(circuit, FaultSweep(("E1",), max_faults, set(allowed))).iterate(init):
        report.checked += 1
        ell = len(res.faults)
        sa = [res.records[f"S.0.{c}"] for c in range(2 * t)]
        sb = [res.records[f"S.1.{c}"] for c in range(2 * t)]
        try:
            ea, eb = dec.choose_pair(dec.sequences_from_syndrome(sa), dec.sequences_from_syndrome(sb), t)
        except DecodingFailure:
            report.violations.append(Violation(res.faults, "no pair within DIFF <= t"))
            continue
        d = dec.diff(ea, eb)
        if d > ell:
            report.violations.append(Violation(res.faults, f"DIFF {d} > {ell} faults ({ea}, {eb})"))
    return report


# --- infidelity ----------------------------------------------------------


@dataclass
class InfidelityEstimate:
    p: np.ndarray
    value: np.ndarray
    per_state: dict[str, np.ndarray]
    truncation: np.ndarray
    stderr: np.ndarray | None = None
    samples: int = 0

    def to_rows(self) -> list[dict]:
        rows = []
        for i, p in enumerate(self.p):
            row = {"p": float(p), "infidelity": float(self.value[i]), "truncation_bound": float(self.truncation[i])}
            if self.stderr is not None:
                row["stderr"] = float(self.stderr[i])
            rows.append(row)
        return rows


def _accumulate(view: LogicalView, gate: np.ndarray, acc: dict[str, np.ndarray], weight: float = 1.0) -> None:
    for name, psi in AXIAL_STATES.items():
        acc[name] += weight * state_infidelity(view, psi, gate @ psi)


def unencoded_infidelity(p: Sequence[float]) -> InfidelityEstimate:
    """One bare qubit through one noise location, averaged over axial states."""
    from ..circuit import Builder

    p = np.atleast_1d(np.asarray(p, dtype=float))
    b = Builder()
    q = b.alloc("data", "q")
    circuit = b.build([[op("Wait", q)]], [q], gadget="unencoded")
    init = InitialState(("ref", q), {(0, 0): 1 / SQRT2, (1, 1): 1 / SQRT2})
    noise = KrausNoise(p, max_jumps=1)
    acc = {k: np.zeros(len(p)) for k in AXIAL_STATES}
    for res in Engine(circuit, noise, extras=("ref",)).iterate(init):
        _accumulate(logical_view(res, [[q]], ["ref"], 1), GATES["I"], acc)
    value = np.mean([acc[k] for k in AXIAL_STATES], axis=0)
    return InfidelityEstimate(p, value, acc, noise.dropped())


def _memory_views(circuit: Circuit, res: Result, n: int) -> Iterable[LogicalView]:
    blocks = circuit.meta["output_blocks"]
    _, dq = ideal_decoder(n, len(blocks))
    for dres in ideal_decode(res, n, blocks, circuit.meta.get("flags")):
        yield logical_view(dres, dq, ["ref0"], n)


def logical_infidelity(
    circuit: Circuit,
    n: int,
    p: Sequence[float],
    mode: str = "enumerate",
    max_jumps: int | None = None,
    shots: int = 1000,
    seed: int = 0,
    bias: float = 1.0,
    progress: Callable[[int], None] | None = None,
) -> InfidelityEstimate:
    """Average infidelity over the six axial logical states of a one-block
    gadget followed by ideal decoding.

    ``enumerate`` sums every Kraus branch with at most ``max_jumps`` jumps and
    reports the dropped probability as the truncation bound.  ``mc`` samples
    trajectories (jumps and measurement outcomes) with a fixed seed and
    reweights them by their exact probabilities.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    code = BaconShorCode(n)
    init = choi_initial(code, circuit.meta["input_blocks"], ["ref0"])
    gate = GATES["I"]
    acc = {k: np.zeros(len(p)) for k in AXIAL_STATES}
    if mode == "enumerate":
        noise = KrausNoise(p, max_jumps=(n + 1) if max_jumps is None else max_jumps)
        engine = Engine(circuit, noise, extras=init.extras)
        for res in engine.iterate(init):
            for view in _memory_views(circuit, res, n):
                _accumulate(view, gate, acc)
        value = np.mean([acc[k] for k in AXIAL_STATES], axis=0)
        return InfidelityEstimate(p, value, acc, noise.dropped())
    if mode != "mc":
        raise DomainError(f"unknown mode {mode!r}")
    samples, acc = _mc_samples(circuit, n, p, shots, np.random.default_rng(seed), bias, progress)
    return _mc_estimate(p, samples, acc)


def _mc_samples(
    circuit: Circuit,
    n: int,
    p: np.ndarray,
    shots: int,
    rng: np.random.Generator,
    bias: float = 1.0,
    progress: Callable[[int], None] | None = None,
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Importance-weighted per-shot infidelities, shape ``(shots, len(p))``."""
    init = choi_initial(BaconShorCode(n), circuit.meta["input_blocks"], ["ref0"])
    engine = Engine(circuit, SampledNoise(p, rng, bias=bias), extras=init.extras, rng=rng)
    root = engine.initial_branch(init)
    samples = np.zeros((shots, len(p)))
    acc = {k: np.zeros(len(p)) for k in AXIAL_STATES}
    for i in range(shots):
        (res,) = list(engine.iterate(root))
        one = {k: np.zeros(len(p)) for k in AXIAL_STATES}
        for view in _memory_views(circuit, res, n):
            _accumulate(view, GATES["I"], one)
        w = math.exp(-res.log_q)
        samples[i] = np.mean([one[k] for k in AXIAL_STATES], axis=0) * w
        for k in AXIAL_STATES:
            acc[k] += one[k] * w
        if progress:
            progress(i)
    return samples, acc


def _mc_estimate(p: np.ndarray, samples: np.ndarray, acc: dict[str, np.ndarray]) -> InfidelityEstimate:
    shots = len(samples)
    value = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(shots) if shots > 1 else np.zeros(len(p))
    per_state = {k: v / shots for k, v in acc.items()}
    return InfidelityEstimate(p, value, per_state, np.zeros(len(p)), stderr, shots)


@functools.lru_cache(maxsize=8)
def _memory_circuit(n: int, policy: str) -> Circuit:
    from ..gadgets import build_logical

    return build_logical(BaconShorCode(n), "ft-ec-memory", policy=policy)


def _mc_chunk(job: tuple) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    n, policy, p, shots, seed_seq, bias = job
    return _mc_samples(_memory_circuit(n, policy), n, np.asarray(p), shots, np.random.default_rng(seed_seq), bias)


def memory_infidelity(
    n: int,
    p: Sequence[float],
    mode: str = "enumerate",
    shots: int = 1000,
    seed: int = 0,
    bias: float = 1.0,
    max_jumps: int | None = None,
    policy: str = "redundant",
    jobs: int = 1,
    chunk: int = 64,
) -> InfidelityEstimate:
    """Infidelity of the extended memory gadget.

    Monte Carlo shots are cut into fixed chunks with seeds spawned from
    ``seed``; chunks are merged in index order, so the estimate does not
    depend on ``jobs``.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if mode == "enumerate":
        return logical_infidelity(_memory_circuit(n, policy), n, p, max_jumps=max_jumps)
    if mode != "mc":
        raise DomainError(f"unknown mode {mode!r}")
    if shots < 1:
        raise DomainError("shots must be positive")
    sizes = [min(chunk, shots - i) for i in range(0, shots, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    work = [(n, policy, tuple(p), k, ss, bias) for k, ss in zip(sizes, seeds)]
    if jobs > 1 and len(work) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_mc_chunk, work))
    else:
        parts = [_mc_chunk(w) for w in work]
    samples = np.concatenate([s for s, _ in parts])
    acc = {k: sum(a[k] for _, a in parts) for k in AXIAL_STATES}
    return _mc_estimate(p, samples, acc)


def fit_slope(p: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of log(values) against log(p)."""
    slope, intercept = np.polyfit(np.log(p), np.log(values), 1)
    return float(slope), float(intercept)

"""Kraus-branch execution of scheduled circuits.

Every circuit is compiled once onto a fixed set of bit slots (qubit lifetimes
are interval-coloured), after which a branch is just sparse amplitudes, a live
slot mask and its outcome records.  Branches are expanded depth first in
location-index order, so the ensemble and any floating-point reduction over it
are deterministic.

The noise strategy decides what happens at each executed location:

* :class:`NoNoise` for ideal runs,
* :class:`KrausNoise` for the exact channel with a cap on the number of jumps,
* :class:`Injection` for explicitly placed faults,
* :class:`FaultSweep` for every placement of up to ``max_faults`` faults,
* :class:`SampledNoise` for importance-sampled trajectories.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterator, Mapping, Sequence

import numpy as np

from ..circuit import CALC, MEASUREMENTS, PREPARATIONS, WAIT, Circuit, cond_holds
from ..errors import CapacityError, DomainError
from . import state as st

MAX_SLOTS = 63

FAULT_UNITS = {"E1": 1, "Z": 2, "M": 1}

_Z_MATRIX = np.diag([1.0, -1.0]).astype(complex)


# --- compilation ---------------------------------------------------------


@dataclass(frozen=True)
class _Op:
    kind: str
    qubits: tuple[int, ...]
    masks: tuple[int, ...]
    record: str | None
    cond: tuple[str, ...]


@dataclass(frozen=True)
class _Step:
    calcs: tuple[tuple[str, dict], ...]
    ops: tuple[_Op, ...]
    # (qubit, slot) pairs that may be live at the end of the step
    resident: tuple[tuple[int, int], ...]


@dataclass
class Program:
    circuit: Circuit
    slot: dict[Hashable, int]
    steps: list[_Step]
    width: int
    extras: tuple = ()

    def mask(self, qubits: Sequence[Hashable]) -> int:
        m = 0
        for q in qubits:
            m |= 1 << self.slot[q]
        return m


def compile_circuit(circuit: Circuit, extra: Sequence[Hashable] = (), cap: int = MAX_SLOTS) -> Program:
    """Assign bit slots: circuit inputs first, then ``extra`` keys, then ancillas."""
    slot: dict[Hashable, int] = {}
    for q in circuit.inputs:
        slot[q] = len(slot)
    for e in extra:
        slot[e] = len(slot)
    free = []
    width = len(slot)
    steps = []
    resident = {q: slot[q] for q in circuit.inputs}
    for s, raw in enumerate(circuit.steps):
        release = []
        for ins in raw:
            if ins.kind in PREPARATIONS:
                q = ins.operands[0]
                if free:
                    free.sort()
                    slot[q] = free.pop(0)
                else:
                    slot[q] = width
                    width += 1
                    if width > cap:
                        raise CapacityError(f"more than {cap} simultaneously live qubits at step {s}")
                resident[q] = slot[q]
            elif ins.kind in MEASUREMENTS:
                release.append(ins.operands[0])
                resident.pop(ins.operands[0], None)
        ops = []
        calcs = []
        for ins in raw:
            if ins.kind == CALC:
                calcs.append((ins.fn, ins.args or {}))
                continue
            masks = tuple(1 << slot[q] for q in ins.operands)
            ops.append(_Op(ins.kind, ins.operands, masks, ins.record, ins.cond))
        steps.append(_Step(tuple(calcs), tuple(ops), tuple(sorted(resident.items()))))
        free.extend(slot[q] for q in release)
    return Program(circuit, slot, steps, width, tuple(extra))


# --- branches ------------------------------------------------------------


@dataclass
class Branch:
    keys: np.ndarray
    amps: np.ndarray
    live: int
    records: dict
    jumps: int = 0
    faults: tuple = ()
    log_q: float = 0.0

    def probability(self) -> np.ndarray:
        return st.norms(self.amps)

    def child(self, keys, amps, live=None, records=None, jumps=None, faults=None, log_q=None) -> Branch:
        return Branch(
            keys,
            amps,
            self.live if live is None else live,
            self.records if records is None else records,
            self.jumps if jumps is None else jumps,
            self.faults if faults is None else faults,
            self.log_q if log_q is None else log_q,
        )


@dataclass(frozen=True)
class InitialState:
    """Amplitudes over an ordered tuple of qubit keys.

    Keys that are circuit qubit ids must be circuit inputs; any other hashable
    key (for example ``"ref"``) names an extra qubit the circuit never touches.
    """

    qubits: tuple[Hashable, ...]
    # values are scalars or per-column arrays
    terms: Mapping[tuple[int, ...], complex | np.ndarray]
    records: Mapping[str, object] = field(default_factory=dict)

    @property
    def extras(self) -> tuple[Hashable, ...]:
        return tuple(q for q in self.qubits if not isinstance(q, (int, np.integer)))

    def tensor(self, other: InitialState) -> InitialState:
        terms = {}
        for b1, a1 in self.terms.items():
            for b2, a2 in other.terms.items():
                terms[b1 + b2] = a1 * a2
        return InitialState(self.qubits + other.qubits, terms, {**self.records, **other.records})


@dataclass
class Result:
    """A completed branch with its output state expressed over qubit keys."""

    keys: np.ndarray
    amps: np.ndarray
    slot: dict[Hashable, int]
    records: dict
    jumps: int
    faults: tuple
    log_q: float = 0.0

    def probability(self) -> np.ndarray:
        return st.norms(self.amps)

    def terms(self, qubits: Sequence[Hashable], column: int | None = 0) -> dict:
        """Amplitudes keyed by the bits of ``qubits``; all columns if ``column`` is None."""
        out: dict = {}
        slots = [self.slot[q] for q in qubits]
        amps = self.amps if column is None else self.amps[:, column]
        for k, a in zip(self.keys.tolist(), amps):
            bits = tuple((k >> sl) & 1 for sl in slots)
            out[bits] = out[bits] + a if bits in out else a
        return out

    def as_initial(self, mapping: Mapping[Hashable, Hashable], records: Mapping | None = None) -> InitialState:
        """Hand the output state (every column) to another circuit, renaming qubit keys."""
        qubits = tuple(self.slot)
        terms = self.terms(qubits, column=None)
        return InitialState(tuple(mapping.get(q, q) for q in qubits), terms, dict(records or {}))


# --- noise strategies ----------------------------------------------------


class NoiseStrategy:
    columns = 1

    def at_step(self, step: int) -> bool:
        """Whether any location of this step may carry noise."""
        return True

    def apply(self, branch: Branch, program: Program, step: int, qubits: list[int]) -> list[Branch]:
        raise NotImplementedError

    def dropped(self) -> np.ndarray:
        return np.zeros(self.columns)


class NoNoise(NoiseStrategy):
    def at_step(self, step: int) -> bool:
        return False

    def apply(self, branch, program, step, qubits):
        return [branch]


class KrausNoise(NoiseStrategy):
    """Exact amplitude damping; branches with more than ``max_jumps`` jumps are
    dropped and their probability is accumulated exactly."""

    def __init__(self, p: float | Sequence[float], max_jumps: int, locations: set | None = None):
        self.p = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any((self.p < 0) | (self.p > 1)):
            raise DomainError("damping probability must lie in [0, 1]")
        if max_jumps < 0:
            raise DomainError("max_jumps must be non-negative")
        self.columns = len(self.p)
        self.max_jumps = max_jumps
        self.sqrt_p = np.sqrt(self.p)
        s = np.sqrt(1.0 - self.p)
        self.powers = s[None, :] ** np.arange(MAX_SLOTS + 1)[:, None]
        # tail[n, b]: P(Binomial(n, p) > b)
        tail = np.zeros((MAX_SLOTS + 1, max_jumps + 1, self.columns))
        for n in range(MAX_SLOTS + 1):
            pmf = np.array([math.comb(n, k) * self.p**k * (1 - self.p) ** (n - k) for k in range(n + 1)])
            for b in range(min(max_jumps + 1, n)):
                tail[n, b] = pmf[b + 1 :].sum(axis=0)
        self.tail = tail
        self._dropped = np.zeros(self.columns)
        self.locations = locations

    def dropped(self) -> np.ndarray:
        return self._dropped

    def apply(self, branch, program, step, qubits):
        if self.locations is not None:
            qubits = [q for q in qubits if (q, step) in self.locations]
            if not qubits:
                return [branch]
        mask = program.mask(qubits)
        keys, amps = branch.keys, branch.amps
        budget = self.max_jumps - branch.jumps
        occ = np.bitwise_or.reduce(keys & st.U64(mask)) if len(keys) else 0
        cands = [q for q in qubits if int(occ) >> program.slot[q] & 1]
        if len(cands) > budget:
            counts = st.popcount(keys, mask)
            self._dropped += np.einsum(
                "ij,ij->j", np.abs(amps) ** 2, self.tail[counts, max(budget, 0)]
            )
        out = [branch.child(*st.damp_nojump(keys, amps, mask, self.powers))]
        for k in range(1, min(budget, len(cands)) + 1):
            for combo in itertools.combinations(cands, k):
                jm = program.mask(combo)
                nk, na = st.damp_jump(keys, amps, jm, self.sqrt_p)
                if not len(nk):
                    continue
                nk, na = st.damp_nojump(nk, na, mask & ~jm, self.powers)
                faults = branch.faults + tuple(("E1", q, step) for q in combo)
                out.append(branch.child(nk, na, jumps=branch.jumps + k, faults=faults))
        return out


def _apply_fault(keys, amps, program, q, kind, matrix=None):
    m = 1 << program.slot[q]
    if kind == "E1":
        return st.damp_jump(keys, amps, m, np.ones(amps.shape[1]))
    if kind == "Z":
        return st.z(keys, amps, m)
    if kind == "M":
        return st.apply_matrix(keys, amps, m, matrix)
    raise DomainError(f"unknown fault kind {kind!r}")


@dataclass(frozen=True)
class Fault:
    qubit: int
    step: int
    kind: str = "E1"
    matrix: tuple | None = None

    @property
    def units(self) -> int:
        return FAULT_UNITS[self.kind]


class Injection(NoiseStrategy):
    """Apply the given faults at their locations; noiseless elsewhere."""

    def __init__(self, faults: Sequence[Fault]):
        self.by_loc: dict[tuple[int, int], Fault] = {}
        for f in faults:
            key = (f.qubit, f.step)
            if key in self.by_loc:
                raise DomainError(f"two faults placed at qubit {f.qubit}, step {f.step}")
            self.by_loc[key] = f
        self.steps = {f.step for f in faults}

    def at_step(self, step):
        return step in self.steps

    def apply(self, branch, program, step, qubits):
        keys, amps = branch.keys, branch.amps
        faults = branch.faults
        for q in qubits:
            f = self.by_loc.get((q, step))
            if f is None:
                continue
            keys, amps = _apply_fault(keys, amps, program, q, f.kind, f.matrix)
            faults = faults + ((f.kind, q, step),)
            if not len(keys):
                return []
        jumps = branch.jumps + sum(1 for kind, _, _ in faults[len(branch.faults):] if kind == "E1")
        return [branch.child(keys, amps, faults=faults, jumps=jumps)]


class FaultSweep(NoiseStrategy):
    """Fork every combination of up to ``max_faults`` faults of the given kinds.

    Prefixes are shared: a branch that has already received its faults runs
    noiselessly from then on.  ``allowed`` optionally restricts the locations.
    """

    def __init__(self, kinds: Sequence[str] = ("E1",), max_faults: int = 1, allowed: set | None = None):
        self.kinds = tuple(kinds)
        self.max_faults = max_faults
        self.allowed = allowed
        self._steps = None if allowed is None else {s for _, s in allowed}

    def at_step(self, step):
        return self._steps is None or step in self._steps

    def apply(self, branch, program, step, qubits):
        if self.allowed is not None:
            qubits = [q for q in qubits if (q, step) in self.allowed]
        out = [branch]
        room = self.max_faults - len(branch.faults)
        if room <= 0 or not qubits:
            return out
        for k in range(1, min(room, len(qubits)) + 1):
            for combo in itertools.combinations(qubits, k):
                for kinds in itertools.product(self.kinds, repeat=k):
                    keys, amps = branch.keys, branch.amps
                    for q, kind in zip(combo, kinds):
                        keys, amps = _apply_fault(keys, amps, program, q, kind)
                        if not len(keys):
                            break
                    if not len(keys):
                        continue
                    faults = branch.faults + tuple((kind, q, step) for q, kind in zip(combo, kinds))
                    jumps = branch.jumps + sum(1 for kind in kinds if kind == "E1")
                    out.append(branch.child(keys, amps, faults=faults, jumps=jumps))
        return out


class SampledNoise(NoiseStrategy):
    """Importance-sampled trajectories of the exact channel.

    Each occupied qubit jumps with proposal probability
    ``min(cap, bias * p_ref * population)``; the proposal log-probability is
    accumulated in ``Branch.log_q`` while the amplitudes keep the exact
    (unnormalized) Kraus weights for every damping strength.
    """

    def __init__(self, p: Sequence[float], rng: np.random.Generator, bias: float = 1.0, cap: float = 0.5):
        self.p = np.atleast_1d(np.asarray(p, dtype=float))
        self.columns = len(self.p)
        self.sqrt_p = np.sqrt(self.p)
        s = np.sqrt(1.0 - self.p)
        self.powers = s[None, :] ** np.arange(MAX_SLOTS + 1)[:, None]
        self.rng = rng
        self.bias = bias
        self.cap = cap
        self.p_ref = float(self.p.max())

    def apply(self, branch, program, step, qubits):
        keys, amps = branch.keys, branch.amps
        mask = program.mask(qubits)
        jump_mask = 0
        log_q = branch.log_q
        jumped = []
        for q in qubits:
            # populations are taken after earlier jumps of this step, so a
            # proposed jump never lands on a vanished component
            w = np.abs(amps[:, 0]) ** 2
            total = w.sum()
            m = 1 << program.slot[q]
            pop = w[st.has_bit(keys, m)].sum() / total if total > 0 else 0.0
            if pop <= 0:
                continue
            prop = min(self.cap, self.bias * self.p_ref * pop)
            if self.rng.random() < prop:
                jump_mask |= m
                jumped.append(q)
                log_q += math.log(prop)
                keys, amps = st.damp_jump(keys, amps, m, self.sqrt_p)
            else:
                log_q += math.log1p(-prop)
        keys, amps = st.damp_nojump(keys, amps, mask & ~jump_mask, self.powers)
        faults = branch.faults + tuple(("E1", q, step) for q in jumped)
        return [branch.child(keys, amps, jumps=branch.jumps + len(jumped), faults=faults, log_q=log_q)]


# --- classical functions -------------------------------------------------

CalcRegistry = Mapping[str, Callable[[dict, dict], dict]]


def _default_registry() -> CalcRegistry:
    from ..gadgets.control import REGISTRY

    return REGISTRY


# --- execution -----------------------------------------------------------


class Engine:
    def __init__(
        self,
        circuit: Circuit,
        noise: NoiseStrategy | None = None,
        extras: Sequence[Hashable] = (),
        registry: CalcRegistry | None = None,
        rng: np.random.Generator | None = None,
        cap: int = MAX_SLOTS,
    ):
        self.program = compile_circuit(circuit, extras, cap)
        self.noise = noise or NoNoise()
        self.registry = registry or _default_registry()
        self.rng = rng  # set for sampled measurement outcomes

    def initial_branch(self, init: InitialState) -> Branch:
        slots = []
        for q in init.qubits:
            if q not in self.program.slot:
                raise DomainError(f"initial state names qubit {q!r}, which is not a circuit input or extra")
            slots.append(self.program.slot[q])
        circuit_inputs = set(self.program.circuit.inputs)
        given = {q for q in init.qubits if isinstance(q, (int, np.integer))}
        if given != circuit_inputs:
            raise DomainError(f"initial state covers qubits {sorted(given)}, circuit inputs are {sorted(circuit_inputs)}")
        keys = []
        amps = []
        for bits, a in init.terms.items():
            k = 0
            for b, sl in zip(bits, slots):
                k |= int(b) << sl
            keys.append(k)
            amps.append(np.atleast_1d(np.asarray(a, dtype=complex)))
        width = max([len(a) for a in amps] + [1])
        cols = self.noise.columns
        if width > 1 and cols not in (1, width):
            raise DomainError(f"initial state has {width} columns, noise model has {cols}")
        cols = max(cols, width)
        amp_arr = np.array([np.broadcast_to(a, (cols,)) for a in amps], dtype=complex).reshape(len(amps), cols)
        live = 0
        for sl in slots:
            live |= 1 << sl
        return Branch(np.asarray(keys, dtype=st.U64), amp_arr, live, dict(init.records))

    def _step(self, branch: Branch, s: int) -> list[Branch]:
        cstep = self.program.steps[s]
        if cstep.calcs:
            rec = dict(branch.records)
            for fn, args in cstep.calcs:
                rec.update(self.registry[fn](rec, args))
            branch = branch.child(branch.keys, branch.amps, records=rec)
        ops = [o for o in cstep.ops if cond_holds(o.cond, branch.records)]
        if not ops:
            return [branch]
        measured = [o.qubits[0] for o in ops if o.kind in MEASUREMENTS]
        prepared = [o.qubits[0] for o in ops if o.kind in PREPARATIONS]
        noisy = self.noise.at_step(s)
        if noisy and measured:
            branches = self.noise.apply(branch, self.program, s, measured)
        else:
            branches = [branch]
        after = []
        for b in branches:
            after.extend(self._apply_ops(b, ops, s))
        if not noisy:
            return after
        out = []
        for b in after:
            post = [q for q, sl in cstep.resident if b.live >> sl & 1]
            out.extend(self.noise.apply(b, self.program, s, post) if post else [b])
        return out

    def _apply_ops(self, branch: Branch, ops: list[_Op], s: int) -> list[Branch]:
        keys, amps, live = branch.keys, branch.amps, branch.live
        outcomes: list[tuple[_Op, list]] = []
        for o in ops:
            k = o.kind
            m = o.masks
            if k == "CNOT":
                keys, amps = st.cnot(keys, amps, m[0], m[1])
            elif k == "X":
                keys, amps = st.x(keys, amps, m[0])
            elif k == "Z":
                keys, amps = st.z(keys, amps, m[0])
            elif k == "CZ":
                keys, amps = st.cz(keys, amps, m[0], m[1])
            elif k == "S":
                keys, amps = st.s(keys, amps, m[0])
            elif k == "T":
                keys, amps = st.t(keys, amps, m[0])
            elif k == "CCZ":
                keys, amps = st.ccz(keys, amps, *m)
            elif k == "PrepZero":
                live |= m[0]
            elif k == "PrepPlus":
                keys, amps = st.prep_plus(keys, amps, m[0])
                live |= m[0]
            elif k in MEASUREMENTS:
                outcomes.append((o, []))
            elif k == WAIT:
                pass
            else:  # pragma: no cover - rejected by schedule()
                raise DomainError(f"cannot simulate {k}")
        if not outcomes:
            return [branch.child(keys, amps, live=live)]
        # measurements act on distinct slots; expand their outcomes in order
        partial = [(keys, amps, {})]
        for o, _ in outcomes:
            nxt = []
            for pk, pa, rec in partial:
                fn = st.measure_z if o.kind == "MZ" else st.measure_x
                for val, nk, na in fn(pk, pa, o.masks[0]):
                    nxt.append((nk, na, {**rec, o.record: val}))
            partial = nxt
            live &= ~o.masks[0]
        if self.rng is not None and len(partial) > 1:
            probs = np.array([st.norms(pa)[0] for _, pa, _ in partial])
            probs = probs / probs.sum()
            i = int(self.rng.choice(len(partial), p=probs))
            pk, pa, rec = partial[i]
            return [branch.child(pk, pa, live=live, records={**branch.records, **rec},
                                 log_q=branch.log_q + math.log(probs[i]))]
        return [branch.child(pk, pa, live=live, records={**branch.records, **rec}) for pk, pa, rec in partial]

    def iterate(self, init: InitialState | Branch) -> Iterator[Result]:
        root = init if isinstance(init, Branch) else self.initial_branch(init)
        nsteps = len(self.program.steps)
        stack: list[tuple[int, Branch]] = [(0, root)]
        while stack:
            s, b = stack.pop()
            while s < nsteps:
                kids = self._step(b, s)
                s += 1
                if not kids:
                    b = None
                    break
                if len(kids) > 1:
                    for kid in reversed(kids[1:]):
                        stack.append((s, kid))
                b = kids[0]
            if b is None or not len(b.keys):
                continue
            yield self._result(b)

    def _result(self, b: Branch) -> Result:
        prog = self.program
        if prog.steps:
            owners = dict(prog.steps[-1].resident)
        else:
            owners = {q: prog.slot[q] for q in prog.circuit.inputs}
        owners.update({q: prog.slot[q] for q in prog.extras})
        slot = {q: sl for q, sl in owners.items() if b.live >> sl & 1}
        return Result(b.keys, b.amps, slot, b.records, b.jumps, b.faults, b.log_q)

    def run(self, init: InitialState) -> list[Result]:
        return list(self.iterate(init))


def run(circuit: Circuit, init: InitialState, noise: NoiseStrategy | None = None, **kw) -> list[Result]:
    return Engine(circuit, noise, extras=init.extras, **kw).run(init)

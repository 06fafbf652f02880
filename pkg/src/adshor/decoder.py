"""Classical decoding for the Bacon-Shor amplitude-damping gadgets.

Sign convention for every record: a Z-basis outcome of +1 means |0>, and a
parity or X-basis outcome of -1 flags an odd parity.  Error sequences are
strings over ``"I"`` and ``"X"``; Z patterns are tuples of 0/1 per row.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DecodingFailure, DomainError, SchemaError


class RepeatPolicy(str, enum.Enum):
    NAIVE = "naive"
    LEMMA2 = "lemma2"
    REDUNDANT = "redundant"

    def parity_cap(self, t: int) -> int:
        """Maximum number of repetitions of a repeated syndrome measurement."""
        if self is RepeatPolicy.NAIVE:
            return t * (t + 1) + 1
        if self is RepeatPolicy.LEMMA2:
            return (t + 2) ** 2 // 4 + 1
        return (t + 2) ** 2 // 8 + 1

    def damping_rounds(self, t: int) -> int:
        return t // 2 + 1 if self is RepeatPolicy.REDUNDANT else t

    @property
    def cyclic(self) -> bool:
        return self is RepeatPolicy.REDUNDANT


class RowStatus(enum.IntEnum):
    UNDAMPED = 0
    POTENTIALLY_DAMPED = 1
    DAMPED = 2


# --- error sequences -----------------------------------------------------


def _check_seq(e: str) -> None:
    if set(e) - {"I", "X"}:
        raise DomainError(f"error sequence {e!r} must be over I and X")


def complement(e: str) -> str:
    _check_seq(e)
    return e.translate(str.maketrans("IX", "XI"))


def diff(e1: str, e2: str) -> int:
    _check_seq(e1)
    _check_seq(e2)
    if len(e1) != len(e2):
        raise DomainError(f"sequences of different length: {len(e1)} and {len(e2)}")
    return sum(a != b for a, b in zip(e1, e2))


def sequences_from_syndrome(s: Sequence[int]) -> tuple[str, str]:
    """The two complementary sequences whose adjacent parities give ``s``.

    The first returned sequence starts with ``I``.
    """
    bits = [0]
    for v in s:
        if v not in (1, -1):
            raise DomainError(f"syndrome entries must be +1 or -1, got {v!r}")
        bits.append(bits[-1] ^ (v == -1))
    e = "".join("X" if b else "I" for b in bits)
    return e, complement(e)


def adjacent_parities(e: str) -> tuple[int, ...]:
    return tuple(-1 if a != b else 1 for a, b in zip(e, e[1:]))


def choose_pair(options_a: Sequence[str], options_b: Sequence[str], t: int) -> tuple[str, str]:
    """Pick one candidate per row so the pair differs in at most ``t`` columns.

    Ties prefer fewer X symbols in total, then lexicographic order.
    Raises :class:`DecodingFailure` when no assignment qualifies.
    """
    good = [(a, b) for a in options_a for b in options_b if diff(a, b) <= t]
    if not good:
        raise DecodingFailure(f"no error-sequence pair with DIFF <= {t}")
    return min(good, key=lambda ab: (ab[0].count("X") + ab[1].count("X"), ab[0] + ab[1]))


# --- syndrome repetition -------------------------------------------------


@dataclass(frozen=True)
class MajorityResult:
    syndrome: tuple[int, ...]
    count: int
    tie: bool = False


def is_valid_cyclic(s: Sequence[int]) -> bool:
    return sum(1 for v in s if v == -1) % 2 == 0


def majority_syndrome(rounds: Sequence[Sequence[int]], policy: RepeatPolicy | str, t: int) -> MajorityResult:
    policy = RepeatPolicy(policy)
    if not rounds:
        raise DomainError("no syndrome rounds to vote over")
    seqs = [tuple(r) for r in rounds]
    if policy is RepeatPolicy.NAIVE:
        counts: Counter = Counter()
        for s in seqs:
            counts[s] += 1
            if counts[s] == t + 1:
                return MajorityResult(s, t + 1)
    pool = seqs
    if policy is RepeatPolicy.REDUNDANT:
        pool = [s for s in seqs if is_valid_cyclic(s)] or seqs
    counts = Counter(pool)
    top = max(counts.values())
    best = sorted(s for s, c in counts.items() if c == top)
    return MajorityResult(best[0], top, tie=len(best) > 1)


def repetition_done(rounds: Sequence[Sequence[int]], t: int, cap: int) -> bool:
    """Whether a repeated measurement may stop after the given rounds."""
    if len(rounds) >= cap:
        return True
    if len(rounds) < t + 1:
        return False
    return max(Counter(tuple(r) for r in rounds).values()) >= t + 1


def row_syndrome(checks: Sequence[int], length: int) -> tuple[int, ...]:
    """Chain syndrome of a row; a trailing closing check only serves validity."""
    return tuple(checks[: length - 1])


def majority_row(outcomes: Sequence[int]) -> int:
    """Row value (0 or 1) by majority over Z outcomes (+1 means |0>)."""
    ones = sum(1 for v in outcomes if v == -1)
    return 1 if 2 * ones > len(outcomes) else 0


# --- records of the fault-tolerant EC ------------------------------------


@dataclass
class SubcircuitRecord:
    rows: tuple[int, int]
    damping: dict[int, list[list[int]]]
    damping_mz: dict[int, list[int] | None]
    xx: int
    flag: int
    parity: dict[int, list[list[int]]]
    coupling: dict[int, list[int]]

    def to_json(self) -> dict:
        return {
            "rows": list(self.rows),
            "damping": {str(k): v for k, v in self.damping.items()},
            "damping_mz": {str(k): v for k, v in self.damping_mz.items()},
            "xx": self.xx,
            "flag": self.flag,
            "parity": {str(k): v for k, v in self.parity.items()},
            "coupling": {str(k): v for k, v in self.coupling.items()},
        }

    @classmethod
    def from_json(cls, d: Mapping) -> SubcircuitRecord:
        try:
            return cls(
                rows=tuple(d["rows"]),
                damping={int(k): v for k, v in d["damping"].items()},
                damping_mz={int(k): v for k, v in d["damping_mz"].items()},
                xx=int(d["xx"]),
                flag=int(d["flag"]),
                parity={int(k): v for k, v in d["parity"].items()},
                coupling={int(k): v for k, v in d["coupling"].items()},
            )
        except KeyError as exc:
            raise SchemaError(f"subcircuit record lacks field {exc.args[0]!r}") from exc


@dataclass
class SyndromeRecord:
    """Everything the Z decoder needs from one EC unit."""

    n: int
    policy: RepeatPolicy
    rounds: list[list[SubcircuitRecord]]
    prior: dict[int, RowStatus] = field(default_factory=dict)

    @property
    def t(self) -> int:
        return self.n - 1

    def xx_rounds(self) -> list[tuple[int, ...]]:
        out = []
        for rnd in self.rounds:
            by_pair = {sc.rows: sc.xx for sc in rnd}
            try:
                out.append(tuple(by_pair[p] for p in xx_pairs(self.n)))
            except KeyError as exc:
                raise SchemaError(f"round lacks the XX outcome for rows {exc.args[0]}") from exc
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "policy": self.policy.value,
            "prior": {str(k): int(v) for k, v in self.prior.items()},
            "rounds": [[sc.to_json() for sc in rnd] for rnd in self.rounds],
        }

    @classmethod
    def from_json(cls, d: Mapping) -> SyndromeRecord:
        try:
            return cls(
                n=int(d["n"]),
                policy=RepeatPolicy(d.get("policy", "naive")),
                rounds=[[SubcircuitRecord.from_json(sc) for sc in rnd] for rnd in d["rounds"]],
                prior={int(k): RowStatus(v) for k, v in d.get("prior", {}).items()},
            )
        except KeyError as exc:
            raise SchemaError(f"syndrome record lacks field {exc.args[0]!r}") from exc


def xx_pairs(n: int) -> list[tuple[int, int]]:
    """Row pairs measured in one Z-syndrome round, in syndrome order."""
    return [(i, i + 1) for i in range(1, n)]


def xx_vote_policy(policy: RepeatPolicy) -> RepeatPolicy:
    # an open chain of XX outcomes has no parity constraint to filter on
    return RepeatPolicy.LEMMA2 if policy is RepeatPolicy.REDUNDANT else policy


def subcircuit_labels(sc: SubcircuitRecord) -> dict[int, RowStatus]:
    """Labels a single subcircuit assigns from its own outcomes."""
    out = {}
    for row in sc.rows:
        status = RowStatus.UNDAMPED
        if any(v == -1 for rnd in sc.damping.get(row, []) for v in rnd):
            status = RowStatus.DAMPED
        elif any(v == -1 for rnd in sc.parity.get(row, []) for v in rnd):
            status = RowStatus.DAMPED if sc.flag == 1 else RowStatus.POTENTIALLY_DAMPED
        out[row] = status
    return out


def label_rows(record: SyndromeRecord) -> list[RowStatus]:
    """Row statuses for one EC unit; index 0 is row 1.

    Labels only ever escalate.  A -1 from a coupling ancilla marks the row
    damped for the subcircuits that follow, which within one unit amounts to
    marking it damped for the unit.
    """
    status = {r: record.prior.get(r, RowStatus.UNDAMPED) for r in range(1, record.n + 1)}
    for rnd in record.rounds:
        for sc in rnd:
            for row, lab in subcircuit_labels(sc).items():
                status[row] = max(status[row], lab)
            for row in sc.rows:
                if row not in sc.coupling:
                    raise SchemaError(f"coupling outcomes missing for row {row} in subcircuit {sc.rows}")
                if any(v == -1 for v in sc.coupling[row]):
                    status[row] = RowStatus.DAMPED
    return [status[r] for r in range(1, record.n + 1)]


def outgoing_flags(record: SyndromeRecord) -> dict[int, RowStatus]:
    """Labels that must travel to whoever decodes the output next.

    A label passes from each subcircuit to the next one on the same row, so
    every row the unit marked stays marked in the following unit: its
    residual (I - Z) part may only be exposed by a later XX measurement.
    """
    return {r + 1: s for r, s in enumerate(label_rows(record)) if s}


# --- Z decoding ----------------------------------------------------------


@dataclass
class DecodeResult:
    x_corrections: list[tuple[int, int]] = field(default_factory=list)
    z_rows: list[int] = field(default_factory=list)
    frame: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def z_coords(self) -> list[tuple[int, int]]:
        return [(r, 1) for r in self.z_rows]

    def to_json(self) -> dict:
        return {
            "x_corrections": [list(c) for c in sorted(self.x_corrections)],
            "z_rows": sorted(self.z_rows),
            "z_corrections": [list(c) for c in self.z_coords()],
            "frame": self.frame,
            "flags": self.flags,
        }


def z_patterns(xx_syndrome: Sequence[int], n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The two row patterns compatible with a chain of XX outcomes."""
    f = [0]
    for v in xx_syndrome[: n - 1]:
        f.append(f[-1] ^ (v == -1))
    f = tuple(f)
    return f, tuple(1 - b for b in f)


def pattern_weight(pattern: Sequence[int], statuses: Sequence[RowStatus]) -> int:
    n_d = sum(1 for s in statuses if s == RowStatus.DAMPED)
    n_p = sum(1 for s in statuses if s == RowStatus.POTENTIALLY_DAMPED)
    z_p = sum(1 for b, s in zip(pattern, statuses) if b and s == RowStatus.POTENTIALLY_DAMPED)
    z_u = sum(1 for b, s in zip(pattern, statuses) if b and s == RowStatus.UNDAMPED)
    return n_d + n_p + z_p + 2 * z_u


def _pick(f, g, key) -> tuple[int, ...]:
    kf, kg = key(f), key(g)
    if kf != kg:
        return f if kf < kg else g
    return f if f[0] == 0 else g


def decode_z(xx_syndrome: Sequence[int], statuses: Sequence[RowStatus]) -> DecodeResult:
    n = len(statuses)
    f, g = z_patterns(xx_syndrome, n)
    best = _pick(f, g, lambda e: pattern_weight(e, statuses))
    return DecodeResult(z_rows=[i + 1 for i, b in enumerate(best) if b])


def resolve_tie(rounds: Sequence[Sequence[int]], count: int, statuses: Sequence[RowStatus]) -> tuple[int, ...]:
    """Among equally frequent syndromes take the one whose correction weighs
    least; if still tied, the one seen last (it reflects the latest state)."""
    tied = {tuple(s) for s in rounds if Counter(tuple(r) for r in rounds)[tuple(s)] == count}

    def weight(s: tuple[int, ...]) -> int:
        f, g = z_patterns(s, len(statuses))
        return min(pattern_weight(f, statuses), pattern_weight(g, statuses))

    last = {tuple(s): i for i, s in enumerate(rounds)}
    return min(tied, key=lambda s: (weight(s), -last[s]))


def voted_syndrome(record: SyndromeRecord, statuses: Sequence[RowStatus]) -> tuple[int, ...]:
    rounds = record.xx_rounds()
    maj = majority_syndrome(rounds, xx_vote_policy(record.policy), record.t)
    if maj.tie:
        return resolve_tie(rounds, maj.count, statuses)
    return maj.syndrome


def decode_ec(record: SyndromeRecord) -> DecodeResult:
    """Full Z decode of one EC unit: vote the XX rounds, label rows, weigh."""
    statuses = label_rows(record)
    rounds = record.xx_rounds()
    maj = majority_syndrome(rounds, xx_vote_policy(record.policy), record.t)
    syndrome = voted_syndrome(record, statuses)
    result = decode_z(syndrome, statuses)
    result.flags = {
        "statuses": [int(s) for s in statuses],
        "syndrome": list(syndrome),
        "tie": maj.tie,
        "outgoing": {str(k): int(v) for k, v in outgoing_flags(record).items()},
    }
    return result


# --- ideal EC ------------------------------------------------------------


@dataclass
class IdealRecord:
    n: int
    zz: dict[int, list[int]]
    mz: dict[int, list[int]]
    xx: list[int]
    prior: dict[int, RowStatus] = field(default_factory=dict)

    def damped_rows(self) -> list[int]:
        rows = {r for r, s in self.zz.items() if any(v == -1 for v in s)}
        rows |= {r for r, s in self.prior.items() if s}
        return sorted(rows)


def ideal_x_corrections(record: IdealRecord) -> list[tuple[int, int]]:
    out = []
    for r in sorted(record.zz):
        if not any(v == -1 for v in record.zz[r]):
            continue
        if r not in record.mz:
            raise SchemaError(f"row {r} is damped but has no Z outcomes")
        out.extend((r, j + 1) for j, v in enumerate(record.mz[r]) if v == 1)
    return out


def decode_ideal(record: IdealRecord) -> DecodeResult:
    """X on the |0> qubits of damped rows; Z pattern with fewer Zs on undamped rows."""
    n = record.n
    damped = set(record.damped_rows())
    f, g = z_patterns(record.xx, n)
    best = _pick(f, g, lambda e: sum(1 for i, b in enumerate(e) if b and (i + 1) not in damped))
    return DecodeResult(
        x_corrections=ideal_x_corrections(record),
        z_rows=[i + 1 for i, b in enumerate(best) if b],
    )


# --- joint decoding after a transversal CZ -------------------------------


def cz_partner_rows(damped_qubits: Iterable[tuple[int, int]]) -> set[int]:
    """Rows of the other block holding the CZ partners of the given qubits."""
    return {j for _, j in damped_qubits}


def joint_cz_decode(
    rec_a: SyndromeRecord,
    rec_b: SyndromeRecord,
    damped_a: Iterable[tuple[int, int]],
    damped_b: Iterable[tuple[int, int]],
) -> tuple[DecodeResult, DecodeResult]:
    """Decode both blocks, escalating rows partnered with damped qubits.

    ``damped_a`` lists qubits of block A found damped by its damping
    extraction; qubit (i, j) of A is CZ-partnered with (j, i) of B, so row j of
    B is escalated (and symmetrically).
    """
    out = []
    for rec, other in ((rec_a, damped_b), (rec_b, damped_a)):
        prior = dict(rec.prior)
        for row in cz_partner_rows(other):
            prior[row] = RowStatus.DAMPED
        bumped = SyndromeRecord(rec.n, rec.policy, rec.rounds, prior)
        out.append(decode_ec(bumped))
    return out[0], out[1]


def damped_qubits(record: SyndromeRecord) -> list[tuple[int, int]]:
    """Data qubits read as |0> on an extended row found in |1>.

    Damping only lowers |1> to |0>, so the row value is |1> as soon as one
    outcome is -1; even positions are data, odd positions coupling copies.
    """
    found = set()
    for rnd in record.rounds:
        for sc in rnd:
            for row, mz in sc.damping_mz.items():
                if not mz or all(v == 1 for v in mz):
                    continue
                for pos, v in enumerate(mz):
                    if v == 1 and pos % 2 == 0:
                        found.add((row, pos // 2 + 1))
    return sorted(found)


def all_statuses(n: int) -> Iterable[tuple[RowStatus, ...]]:
    return itertools.product(list(RowStatus), repeat=n)

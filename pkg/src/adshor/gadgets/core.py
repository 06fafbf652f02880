"""Error-correction building blocks: coupling, damping extraction, the flagged
XX measurement, repeated parity checks, recovery, and the EC units built from
them.

Blocks are lists of timesteps (see :mod:`adshor.circuit`).  Every builder
registers its measurement records with the shared :class:`Context` and returns
a schema describing where the decoder finds them.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..circuit import Block, Builder, calc, conditioned, op, par, seq
from ..codes import BaconShorCode
from ..decoder import RepeatPolicy, xx_pairs


@dataclass(frozen=True)
class CodeBlock:
    """Data qubits of one encoded block, row-major."""

    name: str
    n: int
    qubits: tuple[int, ...]

    def q(self, row: int, col: int) -> int:
        return self.qubits[(row - 1) * self.n + (col - 1)]

    def row(self, row: int) -> list[int]:
        return list(self.qubits[(row - 1) * self.n : row * self.n])


class Context:
    def __init__(self, n: int, policy: RepeatPolicy | str = RepeatPolicy.REDUNDANT) -> None:
        self.code = BaconShorCode(n)
        self.n = n
        self.t = n - 1
        self.policy = RepeatPolicy(policy)
        self.b = Builder()
        self._stems: dict[str, int] = {}

    def prefix(self, stem: str) -> str:
        k = self._stems.get(stem, 0)
        self._stems[stem] = k + 1
        return f"{stem}{k}"

    def alloc(self, role: str, label: str = "") -> int:
        return self.b.alloc(role, label)

    def rec(self, name: str) -> str:
        return self.b.record(name)

    def block(self, stem: str = "B", role: str = "data") -> CodeBlock:
        name = self.prefix(stem)
        qs = tuple(
            self.alloc(role, f"{name}({r},{c})") for r in range(1, self.n + 1) for c in range(1, self.n + 1)
        )
        return CodeBlock(name, self.n, qs)


def first_with(block: Block, ins) -> Block:
    """Put ``ins`` (normally a Calc) at the start of the block's first step."""
    if not block:
        return [[ins]]
    return [[ins] + list(block[0])] + [list(s) for s in block[1:]]


def chain(qubits: list[int], cyclic: bool) -> list[tuple[int, int]]:
    pairs = list(zip(qubits, qubits[1:]))
    if cyclic:
        pairs.append((qubits[-1], qubits[0]))
    return pairs


def parity_block(ctx: Context, pairs: list[tuple[int, int]], keys: list[str], label: str) -> Block:
    """Z-parity checks: fresh |0> ancilla, two CNOTs, MZ."""
    ancs = [ctx.alloc("parity", f"{label}.{i}") for i in range(len(pairs))]
    return [
        [op("PrepZero", a) for a in ancs],
        [op("CNOT", qa, a) for (qa, _), a in zip(pairs, ancs)],
        [op("CNOT", qb, a) for (_, qb), a in zip(pairs, ancs)],
        [op("MZ", a, record=ctx.rec(k)) for a, k in zip(ancs, keys)],
    ]


def nondestructive_mz(ctx: Context, qubits: list[int], keys: list[str], label: str) -> Block:
    ancs = [ctx.alloc("parity", f"{label}.{i}") for i in range(len(qubits))]
    return [
        [op("PrepZero", a) for a in ancs],
        [op("CNOT", q, a) for q, a in zip(qubits, ancs)],
        [op("MZ", a, record=ctx.rec(k)) for a, k in zip(ancs, keys)],
    ]


def x_parity(ctx: Context, qubits: list[int], key: str, label: str) -> Block:
    """X^{⊗k} measurement with a |+> ancilla fanned out by CNOTs."""
    a = ctx.alloc("parity", label)
    return seq([[op("PrepPlus", a)]], [[op("CNOT", a, q)] for q in qubits], [[op("MX", a, record=ctx.rec(key))]])


# --- damping extraction -------------------------------------------------


def damping_extraction(
    ctx: Context,
    data: list[int],
    targets: list[int],
    prefix: str,
    rule: str = "majority",
    segment_extended: int | None = None,
) -> tuple[Block, dict]:
    """Repeated ZZ checks on ``data``; if any is -1, measure every qubit of
    ``targets`` with nondestructive MZ and flip those disagreeing with the row."""
    pol = ctx.policy
    rounds = pol.damping_rounds(ctx.t)
    pairs = chain(data, pol.cyclic)
    blk: Block = []
    round_keys: list[list[str]] = []
    for k in range(rounds):
        keys = [f"{prefix}.k{k}.c{c}" for c in range(len(pairs))]
        body = parity_block(ctx, pairs, keys, f"{prefix}.k{k}")
        if k > 0:
            go = f"{prefix}.go{k}"
            body = first_with(conditioned(body, go), calc("all_one", keys=round_keys[-1], out=go))
        blk += body
        round_keys.append(keys)
        if segment_extended is not None:
            ctx.b.segment("damping_round", extended=segment_extended, checks=len(pairs))
    hit = f"{prefix}.hit"
    mz_keys = [f"{prefix}.mz{i}" for i in range(len(targets))]
    mzb = conditioned(nondestructive_mz(ctx, targets, mz_keys, f"{prefix}.mz"), hit)
    blk += first_with(mzb, calc("any_minus", keys=[k for r in round_keys for k in r], out=hit))
    fix = f"{prefix}.fx"
    blk.append(
        [calc("row_fix", keys=mz_keys, rule=rule, out=fix)]
        + [op("X", q).with_cond((hit, f"{fix}{i}")) for i, q in enumerate(targets)]
    )
    return blk, {"rounds": round_keys, "mz": mz_keys, "hit": hit}


# --- XX measurement ------------------------------------------------------


def zigzag(ext_a: list[int], ext_b: list[int]) -> list[int]:
    order = []
    for qa, qb in zip(ext_a, ext_b):
        order += [qa, qb]
    return order


def xx_measurement(ctx: Context, ext_a: list[int], ext_b: list[int], prefix: str) -> tuple[Block, dict]:
    """Flagged X^{⊗} measurement over two extended rows in zig-zag order."""
    anc = ctx.alloc("xx", f"{prefix}.xx")
    flag = ctx.alloc("flag", f"{prefix}.flag")
    xx_key, flag_key = ctx.rec(f"{prefix}.xx"), ctx.rec(f"{prefix}.flag")
    blk = seq(
        [[op("PrepPlus", anc), op("PrepZero", flag)]],
        [[op("CNOT", anc, flag)]],
        [[op("CNOT", anc, q)] for q in zigzag(ext_a, ext_b)],
        [[op("CNOT", anc, flag)]],
        [[op("MX", anc, record=xx_key), op("MZ", flag, record=flag_key)]],
    )
    ctx.b.segment("xx", extended=len(ext_a) + len(ext_b))
    return blk, {"xx": xx_key, "flag": flag_key}


# --- subcircuit ----------------------------------------------------------


def _interleave(data: list[int], coupling: list[int]) -> list[int]:
    ext = []
    for d, c in zip(data, coupling):
        ext += [d, c]
    return ext + data[len(coupling) :]


def subcircuit(ctx: Context, rows: dict[int, list[int]], prefix: str) -> tuple[Block, dict]:
    """One EC subcircuit on two adjacent rows (``rows`` maps row -> data qubits)."""
    t = ctx.t
    pol = ctx.policy
    (ra, da), (rb, db) = sorted(rows.items())
    coup = {r: [ctx.alloc("coupling", f"{prefix}.c{r}.{j}") for j in range(t)] for r in (ra, rb)}
    ext = {ra: _interleave(da, coup[ra]), rb: _interleave(db, coup[rb])}
    data = {ra: da, rb: db}
    L = 2 * t + 1

    couple = [
        [op("PrepZero", c) for r in (ra, rb) for c in coup[r]],
        [op("CNOT", d, c) for r in (ra, rb) for d, c in zip(data[r], coup[r])],
    ]
    for _ in (ra, rb):
        ctx.b.segment("coupling", extended=L)

    # rows one after the other keeps the live set small
    damp_blocks = []
    damping_schema = {}
    for r in (ra, rb):
        blk, sch = damping_extraction(ctx, data[r], ext[r], f"{prefix}.d{r}", "damping", segment_extended=L)
        damp_blocks.append(blk)
        damping_schema[str(r)] = sch

    xx_blk, xx_schema = xx_measurement(ctx, ext[ra], ext[rb], prefix)

    cap = pol.parity_cap(t)
    checks = {r: chain(ext[r], pol.cyclic) for r in (ra, rb)}
    parity_schema: dict[str, list[list[str]]] = {str(ra): [], str(rb): []}
    combined: list[list[str]] = []
    par_blk: Block = []
    for k in range(cap):
        body: Block = []
        keys_all = []
        for r in (ra, rb):
            keys = [f"{prefix}.p{k}.{r}.c{c}" for c in range(len(checks[r]))]
            body += parity_block(ctx, checks[r], keys, f"{prefix}.p{k}.{r}")
            parity_schema[str(r)].append(keys)
            keys_all += keys
            ctx.b.segment("parity_round", extended=L, checks=len(checks[r]))
        if k >= t + 1:
            go = f"{prefix}.pgo{k}"
            body = first_with(
                conditioned(body, go),
                calc("repeat_go", rounds=list(combined), k=k, t=t, cap=cap, out=go),
            )
        par_blk += body
        combined.append(keys_all)

    out_a, out_b = f"{prefix}.ra", f"{prefix}.rb"
    recover = [
        [
            calc(
                "recovery",
                rounds=combined,
                split=len(checks[ra]),
                t=t,
                policy=pol.value,
                out_a=out_a,
                out_b=out_b,
            )
        ]
        + [op("X", q).with_cond((f"{out_a}{i}",)) for i, q in enumerate(ext[ra])]
        + [op("X", q).with_cond((f"{out_b}{i}",)) for i, q in enumerate(ext[rb])]
    ]

    cp_keys = {r: [f"{prefix}.cp{r}.{j}" for j in range(t)] for r in (ra, rb)}
    decouple = [
        [op("CNOT", d, c) for r in (ra, rb) for d, c in zip(data[r], coup[r])],
        [op("MZ", c, record=ctx.rec(k)) for r in (ra, rb) for c, k in zip(coup[r], cp_keys[r])],
    ]
    for _ in (ra, rb):
        ctx.b.segment("decouple", extended=L)

    blk = seq(couple, *damp_blocks, xx_blk, par_blk, recover, decouple)
    schema = {
        "rows": [ra, rb],
        "damping": damping_schema,
        "xx": xx_schema["xx"],
        "flag": xx_schema["flag"],
        "parity": parity_schema,
        "coupling": {str(r): cp_keys[r] for r in (ra, rb)},
    }
    return blk, schema


# --- EC units ------------------------------------------------------------


def ft_ec(
    ctx: Context, block: CodeBlock, prefix: str, prior: dict[int, str] | None = None, decode: bool = True
) -> tuple[Block, dict]:
    """Fault-tolerant EC: rounds of subcircuits (odd pairs, then even pairs)
    repeated until the XX syndrome repeats, then Z decoding.

    With ``decode=False`` the decoding step is left to the caller (used for
    joint decoding).  The schema's ``out`` prefix names the produced bits:
    ``{out}.z{row}`` for Z corrections and ``{out}.out{row}`` for row statuses
    handed to the next decoder.
    """
    n, t = ctx.n, ctx.t
    pol = ctx.policy
    cap = pol.parity_cap(t)
    pairs = xx_pairs(n)
    odd = [p for p in pairs if p[0] % 2 == 1]
    even = [p for p in pairs if p[0] % 2 == 0]
    blk: Block = []
    rounds_schema = []
    xx_keys: list[list[str]] = []
    for r in range(cap):
        steps = []
        scs = {}
        for group in (odd, even):
            parts = []
            for a, b in group:
                sb, sch = subcircuit(ctx, {a: block.row(a), b: block.row(b)}, f"{prefix}.r{r}.p{a}-{b}")
                parts.append(sb)
                scs[(a, b)] = sch
            if parts:
                steps.append(par(*parts))
        body = seq(*steps)
        ordered = [scs[p] for p in pairs]
        if r >= t + 1:
            go = f"{prefix}.r{r}.go"
            body = first_with(
                conditioned(body, go),
                calc("repeat_go", rounds=list(xx_keys), k=r, t=t, cap=cap, out=go),
            )
        blk += body
        rounds_schema.append(ordered)
        xx_keys.append([sc["xx"] for sc in ordered])
    schema = {
        "n": n,
        "policy": pol.value,
        "rounds": rounds_schema,
        "prior": {str(k): v for k, v in (prior or {}).items()},
        "out": prefix,
    }
    if decode:
        blk.append(z_correction(block, prefix, calc("ec_decode", **schema)))
    return blk, schema


def z_correction(block: CodeBlock, out: str, decoder_calc) -> list:
    return [decoder_calc] + [
        op("Z", block.q(r, 1)).with_cond((f"{out}.z{r}",)) for r in range(1, block.n + 1)
    ]


def outgoing_keys(schema: dict) -> dict[int, str]:
    return {r: f"{schema['out']}.out{r}" for r in range(1, schema["n"] + 1)}


def ideal_ec(ctx: Context, block: CodeBlock, prefix: str, prior: dict[int, str] | None = None) -> tuple[Block, dict]:
    """The non-fault-tolerant EC procedure: ZZ checks, MZ on damped rows,
    X fixes, XX checks between neighbouring rows, Z fixes."""
    n = ctx.n
    zz = {}
    zz_blocks = []
    for r in range(1, n + 1):
        keys = [f"{prefix}.zz{r}.{c}" for c in range(n - 1)]
        zz[str(r)] = keys
        zz_blocks.append(parity_block(ctx, chain(block.row(r), False), keys, f"{prefix}.zz{r}"))
    mz = {}
    mz_blocks = []
    for r in range(1, n + 1):
        keys = [f"{prefix}.mz{r}.{c}" for c in range(n)]
        mz[str(r)] = keys
        dam = f"{prefix}.dam{r}"
        mzb = conditioned(nondestructive_mz(ctx, block.row(r), keys, f"{prefix}.mz{r}"), dam)
        mz_blocks.append(first_with(mzb, calc("any_minus", keys=zz[str(r)], out=dam)))
    pri = {str(k): v for k, v in (prior or {}).items()}
    args = {"n": n, "zz": zz, "mz": mz, "prior": pri, "out": prefix}
    fix = [calc("ideal_xfix", **args)] + [
        op("X", block.q(r, c)).with_cond((f"{prefix}.x{r}.{c}",))
        for r in range(1, n + 1)
        for c in range(1, n + 1)
    ]
    xx_keys = [f"{prefix}.xx{a}" for a, _ in xx_pairs(n)]
    groups = []
    for parity_class in (1, 0):
        parts = []
        for a, b in xx_pairs(n):
            if a % 2 != parity_class:
                continue
            key = f"{prefix}.xx{a}"
            parts.append(x_parity(ctx, block.row(a) + block.row(b), key, key))
        if parts:
            groups.append(par(*parts))
    args = {**args, "xx": xx_keys}
    blk = seq(par(*zz_blocks), par(*mz_blocks), [fix], *groups, [z_correction(block, prefix, calc("ideal_decode", **args))])
    return blk, args

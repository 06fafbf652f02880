"""Logical gadgets: transversal CZ and CCZ, logical measurements, state
preparation, resource states and gate teleportation, plus the extended
gadgets (gadget sandwiched between EC units) used by the simulator.

Each ``*_blocks`` helper appends to a shared :class:`Context` and returns a
:class:`Piece`: the timesteps, the output code blocks, their Pauli frames and
an optional acceptance bit.  A frame ``(x, z)`` names two bit records; the
physical output equals ``X̄^x Z̄^z`` times the ideal output.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..circuit import Block, Circuit, calc, conditioned, op, par, seq
from ..codes import BaconShorCode
from ..decoder import RepeatPolicy
from ..errors import ArityError
from .core import (
    CodeBlock,
    Context,
    damping_extraction,
    first_with,
    ft_ec,
    ideal_ec,
    outgoing_keys,
    subcircuit,
    x_parity,
    xx_measurement,
    z_correction,
)

Frame = tuple  # (x_key | None, z_key | None)
NO_FRAME: Frame = (None, None)


class GadgetKind(str, enum.Enum):
    IDEAL_EC = "ideal-ec"
    FT_EC = "ft-ec"
    SUBCIRCUIT = "subcircuit"
    XX = "xx"
    DAMPING = "damping"
    CZ = "cz"
    CCZ = "ccz"
    MEAS_X = "meas-x"
    MEAS_Z = "meas-z"
    PREP_CAT = "prep-cat"
    PREP_PLUS = "prep-plus"
    PREP_ZERO = "prep-zero"
    PREP_S = "prep-s"
    PREP_T = "prep-t"
    TELEPORT_H = "teleport-h"
    TELEPORT_S = "teleport-s"
    TELEPORT_T = "teleport-t"
    MEMORY = "ft-ec-memory"
    CZ_EXTENDED = "cz-extended"


ARITY = {GadgetKind.CZ: 2, GadgetKind.CCZ: 3, GadgetKind.CZ_EXTENDED: 2}


@dataclass
class Piece:
    steps: Block
    outputs: list[CodeBlock] = field(default_factory=list)
    frames: list[Frame] = field(default_factory=list)
    accept: str | None = None


# --- transversal gates ---------------------------------------------------


def cz_steps(a: CodeBlock, b: CodeBlock) -> Block:
    n = a.n
    return [[op("CZ", a.q(i, j), b.q(j, i)) for i in range(1, n + 1) for j in range(1, n + 1)]]


def ccz_target_row(i: int, j: int, s: int, n: int) -> int:
    return (i - 1 + j - 1 + s) % n + 1


def ccz_blocks(ctx: Context, a: CodeBlock, b: CodeBlock, c: CodeBlock, prefix: str) -> Piece:
    """``n`` layers of transversal CCZ with the third block's row shifted
    cyclically; damping extraction on every row between layers."""
    n = ctx.n
    steps: Block = []
    for s in range(n):
        steps.append(
            [
                op("CCZ", a.q(i, j), b.q(j, i), c.q(ccz_target_row(i, j, s, n), i))
                for i in range(1, n + 1)
                for j in range(1, n + 1)
            ]
        )
        if s == n - 1:
            break
        parts = []
        for blk in (a, b, c):
            for r in range(1, n + 1):
                part, _ = damping_extraction(ctx, blk.row(r), blk.row(r), f"{prefix}.s{s}.{blk.name}.r{r}", "damping")
                parts.append(part)
        steps += par(*parts)
    return Piece(steps, [a, b, c], [NO_FRAME] * 3)


# --- logical measurements ------------------------------------------------


def meas_z_blocks(ctx: Context, block: CodeBlock, prefix: str) -> tuple[Block, str]:
    n = ctx.n
    keys = [[f"{prefix}.q{r}.{c}" for c in range(1, n + 1)] for r in range(1, n + 1)]
    step = [op("MZ", block.q(r, c), record=ctx.rec(keys[r - 1][c - 1])) for r in range(1, n + 1) for c in range(1, n + 1)]
    return [step, [calc("meas_z", rows=keys, out=prefix)]], prefix


def meas_x_blocks(ctx: Context, block: CodeBlock, prefix: str) -> tuple[Block, str]:
    """Per row: |+> ancilla fanned out over the row, the first qubit then
    disentangles the others; X on ancilla and first qubit, Z on the rest."""
    n = ctx.n
    parts = []
    rows = []
    for r in range(1, n + 1):
        qs = block.row(r)
        anc = ctx.alloc("parity", f"{prefix}.a{r}")
        a_key, f_key = f"{prefix}.a{r}", f"{prefix}.f{r}"
        z_keys = [f"{prefix}.z{r}.{c}" for c in range(2, n + 1)]
        part = seq(
            [[op("PrepPlus", anc)]],
            [[op("CNOT", anc, q)] for q in qs],
            [[op("CNOT", qs[0], q)] for q in qs[1:]],
            [
                [op("MX", anc, record=ctx.rec(a_key)), op("MX", qs[0], record=ctx.rec(f_key))]
                + [op("MZ", q, record=ctx.rec(k)) for q, k in zip(qs[1:], z_keys)]
            ],
        )
        parts.append(part)
        rows.append({"anc": a_key, "first": f_key, "z": z_keys})
    return par(*parts) + [[calc("meas_x", rows=rows, out=prefix)]], prefix


# --- preparation ---------------------------------------------------------


def cat_blocks(ctx: Context, qubits: list[int], prefix: str, checks: int = 2) -> tuple[Block, str, list[str]]:
    """Cat state on ``qubits``: |0...0>, ``checks`` X-parity measurements
    (a -1 first outcome is fixed by Z on the first qubit), damping extraction.
    Returns the steps, the accept bit and the parity keys."""
    keys = [f"{prefix}.m{k}" for k in range(checks)]
    steps = seq([[op("PrepZero", q) for q in qubits]], x_parity(ctx, qubits, keys[0], keys[0]))
    fix = f"{prefix}.zf"
    steps.append([calc("parity", minus=[keys[0]], out=fix), op("Z", qubits[0]).with_cond((fix,))])
    for k in keys[1:]:
        steps += x_parity(ctx, qubits, k, k)
    damp, sch = damping_extraction(ctx, qubits, qubits, f"{prefix}.d", "damping")
    steps += damp
    accept = f"{prefix}.ok"
    steps.append([calc("all_one", keys=keys[1:], zero=[sch["hit"]], out=accept)])
    return steps, accept, keys


def prep_plus_blocks(ctx: Context, block: CodeBlock, prefix: str) -> Piece:
    parts = []
    accepts = []
    for r in range(1, ctx.n + 1):
        steps, acc, _ = cat_blocks(ctx, block.row(r), f"{prefix}.row{r}")
        parts.append(steps)
        accepts.append(acc)
    accept = f"{prefix}.ok"
    return Piece(par(*parts) + [[calc("all_one", keys=accepts, out=accept)]], [block], [NO_FRAME], accept)


def teleport_h_blocks(ctx: Context, psi: CodeBlock, prefix: str, frame: Frame = NO_FRAME) -> Piece:
    """H̄ by one-bit teleportation into a fresh |+>_L block."""
    out = ctx.block(f"{prefix}.R")
    plus = prep_plus_blocks(ctx, out, f"{prefix}.plus")
    meas, m = meas_x_blocks(ctx, psi, f"{prefix}.mx")
    f = f"{prefix}.f"
    steps = seq(
        plus.steps,
        cz_steps(psi, out),
        meas,
        [[calc("teleport_frame", m=m, cin=list(frame), gate="I", out=f)]],
    )
    return Piece(steps, [out], [(f"{f}.x", f"{f}.z")], plus.accept)


def prep_zero_blocks(ctx: Context, prefix: str) -> Piece:
    psi = ctx.block(f"{prefix}.P")
    plus = prep_plus_blocks(ctx, psi, f"{prefix}.plus")
    tel = teleport_h_blocks(ctx, psi, f"{prefix}.h")
    accept = f"{prefix}.ok"
    steps = seq(plus.steps, tel.steps, [[calc("all_one", keys=[plus.accept, tel.accept], out=accept)]])
    return Piece(steps, tel.outputs, tel.frames, accept)


def prep_resource_blocks(ctx: Context, gate: str, prefix: str, gate_if: str | None = None) -> Piece:
    """Encoded (|0> + e^{iθ}|1>)/√2 for θ = π/2 (``S``) or π/4 (``T``).

    A phased cat row replaces row 1 of a |0>_L block whose row 1 is measured
    out; one subcircuit on rows 1 and 2 merges them.  With ``gate_if`` the
    phase gate is conditioned on that bit (no phase gives |+>_L).
    """
    n, t = ctx.n, ctx.t
    zero = prep_zero_blocks(ctx, f"{prefix}.zero")
    zb = zero.outputs[0]
    x0, _ = zero.frames[0]
    beta = [ctx.alloc("resource", f"{prefix}.beta{c}") for c in range(1, n + 1)]
    cat, cat_ok, _ = cat_blocks(ctx, beta, f"{prefix}.cat", checks=t + 1)
    phase = op(gate, beta[0])
    if gate_if is not None:
        phase = phase.with_cond((gate_if,))
    row1 = zb.row(1)
    v_keys = [f"{prefix}.v{c}" for c in range(1, n + 1)]
    v = f"{prefix}.v"
    measure_row1 = [[op("MZ", q, record=ctx.rec(k)) for q, k in zip(row1, v_keys)], [calc("any_minus", keys=v_keys, out=v)]]
    merged = CodeBlock(f"{prefix}.M", n, tuple(beta) + zb.qubits[n:])
    sc, sch = subcircuit(ctx, {1: merged.row(1), 2: merged.row(2)}, f"{prefix}.merge")
    zfix = f"{prefix}.zm"
    fx = f"{prefix}.fx"
    accept = f"{prefix}.ok"
    steps = seq(
        zero.steps,
        cat,
        [[phase]],
        measure_row1,
        sc,
        [[calc("parity", minus=[sch["xx"]], out=zfix), op("Z", beta[0]).with_cond((zfix,))]],
        [
            [
                calc("parity", bits=[x0, v], out=fx),
                calc(
                    "all_one",
                    keys=[zero.accept, cat_ok],
                    zero=[sch["damping"][r]["hit"] for r in sorted(sch["damping"])],
                    out=accept,
                ),
            ]
        ],
    )
    return Piece(steps, [merged], [(fx, zfix)], accept)


def teleport_s_blocks(ctx: Context, psi: CodeBlock, prefix: str, gate_if: str | None = None) -> Piece:
    """S̄ = teleported H̄ followed by a one-bit teleport through the S resource."""
    h = teleport_h_blocks(ctx, psi, f"{prefix}.h")
    ra = h.outputs[0]
    res = prep_resource_blocks(ctx, "S", f"{prefix}.res", gate_if)
    rb = res.outputs[0]
    meas, m = meas_x_blocks(ctx, ra, f"{prefix}.mx")
    f = f"{prefix}.f"
    args = dict(m=m, cin=list(h.frames[0]), res=list(res.frames[0]), gate="S", out=f)
    if gate_if is not None:
        args["gate_if"] = gate_if
    accept = f"{prefix}.ok"
    steps = seq(
        h.steps,
        res.steps,
        cz_steps(ra, rb),
        meas,
        [[calc("teleport_frame", **args), calc("all_one", keys=[h.accept, res.accept], out=accept)]],
    )
    return Piece(steps, [rb], [(f"{f}.x", f"{f}.z")], accept)


def teleport_t_blocks(ctx: Context, psi: CodeBlock, prefix: str) -> Piece:
    """T̄ through the T resource; the outcome-dependent S̄ correction is itself
    teleported, with its phase switched on only when needed."""
    h = teleport_h_blocks(ctx, psi, f"{prefix}.h")
    r1 = h.outputs[0]
    res = prep_resource_blocks(ctx, "T", f"{prefix}.res")
    r2 = res.outputs[0]
    meas, m = meas_x_blocks(ctx, r1, f"{prefix}.mx")
    tf = f"{prefix}.t"
    first = seq(
        h.steps,
        res.steps,
        cz_steps(r1, r2),
        meas,
        [[calc("teleport_frame", m=m, cin=list(h.frames[0]), res=list(res.frames[0]), gate="T", out=tf)]],
    )
    corr = teleport_s_blocks(ctx, r2, f"{prefix}.s", gate_if=f"{tf}.m")
    f = f"{prefix}.f"
    accept = f"{prefix}.ok"
    steps = seq(
        first,
        corr.steps,
        [
            [
                calc("compose_t_frame", p=[f"{tf}.x", f"{tf}.z"], m=f"{tf}.m", inner=list(corr.frames[0]), out=f),
                calc("all_one", keys=[h.accept, res.accept, corr.accept], out=accept),
            ]
        ],
    )
    return Piece(steps, corr.outputs, [(f"{f}.x", f"{f}.z")], accept)


# --- circuits ------------------------------------------------------------


def _circuit(ctx: Context, kind: GadgetKind, steps: Block, inputs: list[CodeBlock], piece_or_outputs, **meta) -> Circuit:
    if isinstance(piece_or_outputs, Piece):
        outs = piece_or_outputs.outputs
        frames = piece_or_outputs.frames
        accept = piece_or_outputs.accept
    else:
        outs, frames, accept = piece_or_outputs, [NO_FRAME] * len(piece_or_outputs), None
    input_qubits = [q for b in inputs for q in b.qubits]
    return ctx.b.build(
        steps,
        input_qubits,
        gadget=kind.value,
        n=ctx.n,
        policy=ctx.policy.value,
        input_blocks=[list(b.qubits) for b in inputs],
        output_blocks=[list(b.qubits) for b in outs],
        frames=[list(f) for f in frames],
        accept=accept,
        **meta,
    )


def build_memory(code: BaconShorCode, policy: RepeatPolicy | str = RepeatPolicy.REDUNDANT) -> Circuit:
    """EC, one idle step, EC.  The trailing EC's outgoing row statuses are
    recorded in ``meta['flags']`` for the ideal decoder that follows."""
    ctx = Context(code.n, policy)
    blk = ctx.block("D")
    lead, lead_schema = ft_ec(ctx, blk, "L")
    trail, trail_schema = ft_ec(ctx, blk, "T", prior=outgoing_keys(lead_schema))
    steps = seq(lead, [[op("Wait", q) for q in blk.qubits]], trail)
    return _circuit(
        ctx,
        GadgetKind.MEMORY,
        steps,
        [blk],
        [blk],
        flags=[{str(r): k for r, k in outgoing_keys(trail_schema).items()}],
        ec=[lead_schema, trail_schema],
    )


def build_cz_extended(
    code: BaconShorCode, policy: RepeatPolicy | str = RepeatPolicy.REDUNDANT, joint: bool = True
) -> Circuit:
    """EC on both blocks, transversal CZ, EC on both blocks with joint (or
    independent) decoding of the trailing units."""
    ctx = Context(code.n, policy)
    a, b = ctx.block("A"), ctx.block("B")
    la, sa = ft_ec(ctx, a, "LA")
    lb, sb = ft_ec(ctx, b, "LB")
    ta, tsa = ft_ec(ctx, a, "TA", prior=outgoing_keys(sa), decode=False)
    tb, tsb = ft_ec(ctx, b, "TB", prior=outgoing_keys(sb), decode=False)
    if joint:
        decoders = [calc("ec_joint_decode", a=tsa, b=tsb)]
    else:
        decoders = [calc("ec_decode", **tsa), calc("ec_decode", **tsb)]
    fixes = z_correction(a, "TA", decoders[0])[1:] + z_correction(b, "TB", decoders[0])[1:]
    steps = seq(par(la, lb), cz_steps(a, b), par(ta, tb), [decoders + fixes])
    return _circuit(
        ctx,
        GadgetKind.CZ_EXTENDED,
        steps,
        [a, b],
        [a, b],
        joint=joint,
        flags=[{str(r): k for r, k in outgoing_keys(s).items()} for s in (tsa, tsb)],
        ec=[sa, sb, tsa, tsb],
    )


def _check_arity(kind: GadgetKind, blocks: int | None) -> None:
    want = ARITY.get(kind, 1)
    if blocks is not None and blocks != want:
        raise ArityError(f"{kind.value} acts on {want} block(s), got {blocks}")


def build_logical(
    code: BaconShorCode,
    kind: GadgetKind | str,
    blocks: int | None = None,
    policy: RepeatPolicy | str = RepeatPolicy.REDUNDANT,
) -> Circuit:
    kind = GadgetKind(kind)
    _check_arity(kind, blocks)
    ctx = Context(code.n, policy)
    n, t = ctx.n, ctx.t
    if kind is GadgetKind.MEMORY:
        return build_memory(code, policy)
    if kind is GadgetKind.CZ_EXTENDED:
        return build_cz_extended(code, policy)
    if kind is GadgetKind.IDEAL_EC:
        blk = ctx.block("D")
        steps, schema = ideal_ec(ctx, blk, "I")
        return _circuit(ctx, kind, steps, [blk], [blk], ideal=schema)
    if kind is GadgetKind.FT_EC:
        blk = ctx.block("D")
        steps, schema = ft_ec(ctx, blk, "E")
        return _circuit(
            ctx, kind, steps, [blk], [blk], flags=[{str(r): k for r, k in outgoing_keys(schema).items()}], ec=[schema]
        )
    if kind is GadgetKind.SUBCIRCUIT:
        blk = ctx.block("D")
        steps, schema = subcircuit(ctx, {1: blk.row(1), 2: blk.row(2)}, "S")
        return _circuit(ctx, kind, steps, [blk], [blk], subcircuit=schema)
    if kind is GadgetKind.XX:
        # two extended rows: data and coupling qubits interleaved
        rows = [
            [ctx.alloc("data" if i % 2 == 0 else "coupling", f"x{r}.{i}") for i in range(2 * t + 1)] for r in (1, 2)
        ]
        steps, schema = xx_measurement(ctx, rows[0], rows[1], "X")
        return ctx.b.build(
            steps, rows[0] + rows[1], gadget=kind.value, n=n, policy=ctx.policy.value, extended_rows=rows, xx=schema
        )
    if kind is GadgetKind.DAMPING:
        ext = [ctx.alloc("data" if i % 2 == 0 else "coupling", f"e{i}") for i in range(2 * t + 1)]
        steps, schema = damping_extraction(ctx, ext[0::2], ext, "D", "damping", segment_extended=len(ext))
        return ctx.b.build(steps, ext, gadget=kind.value, n=n, policy=ctx.policy.value, extended_row=ext, damping=schema)
    if kind is GadgetKind.CZ:
        a, b = ctx.block("A"), ctx.block("B")
        return _circuit(ctx, kind, cz_steps(a, b), [a, b], [a, b])
    if kind is GadgetKind.CCZ:
        a, b, c = ctx.block("A"), ctx.block("B"), ctx.block("C")
        piece = ccz_blocks(ctx, a, b, c, "CCZ")
        return _circuit(ctx, kind, piece.steps, [a, b, c], piece)
    if kind in (GadgetKind.MEAS_X, GadgetKind.MEAS_Z):
        blk = ctx.block("D")
        fn = meas_x_blocks if kind is GadgetKind.MEAS_X else meas_z_blocks
        steps, key = fn(ctx, blk, "M")
        return _circuit(ctx, kind, steps, [blk], [], outcome=key)
    if kind is GadgetKind.PREP_CAT:
        qs = [ctx.alloc("data", f"cat{c}") for c in range(1, n + 1)]
        steps, acc, _ = cat_blocks(ctx, qs, "C")
        return ctx.b.build(steps, [], gadget=kind.value, n=n, policy=ctx.policy.value, output_row=qs, accept=acc)
    if kind is GadgetKind.PREP_PLUS:
        blk = ctx.block("D")
        piece = prep_plus_blocks(ctx, blk, "P")
        # the block is prepared inside the gadget, so it is not an input
        return _circuit(ctx, kind, piece.steps, [], piece)
    if kind is GadgetKind.PREP_ZERO:
        piece = prep_zero_blocks(ctx, "Z")
        return _circuit(ctx, kind, piece.steps, [], piece)
    if kind in (GadgetKind.PREP_S, GadgetKind.PREP_T):
        piece = prep_resource_blocks(ctx, "S" if kind is GadgetKind.PREP_S else "T", "R")
        return _circuit(ctx, kind, piece.steps, [], piece)
    blk = ctx.block("D")
    builder = {
        GadgetKind.TELEPORT_H: teleport_h_blocks,
        GadgetKind.TELEPORT_S: teleport_s_blocks,
        GadgetKind.TELEPORT_T: teleport_t_blocks,
    }[kind]
    piece = builder(ctx, blk, "G")
    return _circuit(ctx, kind, piece.steps, [blk], piece)

"""Classical functions evaluated by ``Calc`` instructions.

Each function takes the branch's record map and the instruction's arguments
and returns new records.  Measurement records hold +1/-1; bits produced here
hold 0/1.  A missing record means the measurement never ran in that branch.
"""

from __future__ import annotations

from typing import Callable, Mapping

from .. import decoder as dec
from ..errors import DecodingFailure, SchemaError

Records = Mapping[str, object]


def _present(records: Records, keys) -> list:
    return [records[k] for k in keys if k in records]


def all_one(records: Records, args: dict) -> dict:
    """1 when every ``keys`` record exists and equals 1 and every ``zero`` bit is unset."""
    ok = all(k in records and records[k] == 1 for k in args.get("keys", []))
    ok = ok and all(records.get(k, 0) == 0 for k in args.get("zero", []))
    return {args["out"]: int(ok)}


def any_minus(records: Records, args: dict) -> dict:
    return {args["out"]: int(any(v == -1 for v in _present(records, args["keys"])))}


def parity(records: Records, args: dict) -> dict:
    """XOR of bit records equal to 1 and outcome records equal to -1."""
    v = 0
    for k in args.get("bits", []):
        v ^= int(k is not None and records.get(k, 0) == 1)
    for k in args.get("minus", []):
        v ^= int(records.get(k, 1) == -1)
    return {args["out"]: v}


def row_value(outcomes: list[int], rule: str) -> int:
    if rule == "majority":
        return dec.majority_row(outcomes)
    # damping only ever lowers |1> to |0>, so any |1> outcome marks a |1> row
    return int(any(v == -1 for v in outcomes))


def row_fix(records: Records, args: dict) -> dict:
    """Bits marking the qubits whose Z outcome disagrees with their row."""
    keys = args["keys"]
    out = args["out"]
    if not all(k in records for k in keys):
        return {f"{out}{i}": 0 for i in range(len(keys))}
    vals = [records[k] for k in keys]
    row = row_value(vals, args.get("rule", "majority"))
    return {f"{out}{i}": int((v == -1) != bool(row)) for i, v in enumerate(vals)}


def _executed(records: Records, rounds) -> list[tuple[int, ...]]:
    out = []
    for keys in rounds:
        if all(k in records for k in keys):
            out.append(tuple(records[k] for k in keys))
    return out


def repeat_go(records: Records, args: dict) -> dict:
    """Whether round ``k`` of a repeat-until-agreement measurement runs."""
    done = _executed(records, args["rounds"])
    k = args["k"]
    go = len(done) == k and not dec.repetition_done(done, args["t"], args["cap"])
    return {args["out"]: int(go)}


def recovery(records: Records, args: dict) -> dict:
    """X recovery bits for two extended rows from repeated parity rounds."""
    t = args["t"]
    policy = dec.RepeatPolicy(args["policy"])
    split = args["split"]
    length = 2 * t + 1
    done = _executed(records, args["rounds"])
    out_a, out_b = args["out_a"], args["out_b"]
    res: dict = {}
    if not done:
        res.update({f"{out_a}{i}": 0 for i in range(length)})
        res.update({f"{out_b}{i}": 0 for i in range(length)})
        return res
    maj = dec.majority_syndrome(done, policy, t)
    sa = dec.row_syndrome(maj.syndrome[:split], length)
    sb = dec.row_syndrome(maj.syndrome[split:], length)
    opts_a = dec.sequences_from_syndrome(sa)
    opts_b = dec.sequences_from_syndrome(sb)
    try:
        ea, eb = dec.choose_pair(opts_a, opts_b, t)
        res[f"{out_a}.fail"] = 0
    except DecodingFailure:
        ea, eb = min(
            ((a, b) for a in opts_a for b in opts_b),
            key=lambda ab: (dec.diff(*ab), ab[0].count("X") + ab[1].count("X"), ab[0] + ab[1]),
        )
        res[f"{out_a}.fail"] = 1
    res.update({f"{out_a}{i}": int(c == "X") for i, c in enumerate(ea)})
    res.update({f"{out_b}{i}": int(c == "X") for i, c in enumerate(eb)})
    return res


# --- EC records ----------------------------------------------------------


def subcircuit_record(records: Records, sc: dict) -> dec.SubcircuitRecord | None:
    if sc["xx"] not in records:
        return None
    damping: dict = {}
    damping_mz: dict = {}
    parity_rows: dict = {}
    coupling: dict = {}
    for row_s, info in sc["damping"].items():
        row = int(row_s)
        damping[row] = [list(r) for r in _executed(records, info["rounds"])]
        mz = info["mz"]
        damping_mz[row] = [records[k] for k in mz] if all(k in records for k in mz) else None
    for row_s, rounds in sc["parity"].items():
        parity_rows[int(row_s)] = [list(r) for r in _executed(records, rounds)]
    for row_s, keys in sc["coupling"].items():
        missing = [k for k in keys if k not in records]
        if missing:
            raise SchemaError(f"coupling outcome {missing[0]!r} missing")
        coupling[int(row_s)] = [records[k] for k in keys]
    return dec.SubcircuitRecord(
        rows=tuple(sc["rows"]),
        damping=damping,
        damping_mz=damping_mz,
        xx=records[sc["xx"]],
        flag=records.get(sc["flag"], 1),
        parity=parity_rows,
        coupling=coupling,
    )


def syndrome_record(records: Records, schema: dict) -> dec.SyndromeRecord:
    rounds = []
    for rnd in schema["rounds"]:
        scs = [subcircuit_record(records, sc) for sc in rnd]
        if any(s is None for s in scs):
            continue
        rounds.append(scs)
    prior = {}
    for row_s, key in schema.get("prior", {}).items():
        v = records.get(key, 0)
        if v:
            prior[int(row_s)] = dec.RowStatus(v)
    return dec.SyndromeRecord(schema["n"], dec.RepeatPolicy(schema["policy"]), rounds, prior)


def _ec_outputs(schema: dict, result: dec.DecodeResult, record: dec.SyndromeRecord) -> dict:
    out = schema["out"]
    n = schema["n"]
    res = {f"{out}.z{r}": int(r in result.z_rows) for r in range(1, n + 1)}
    flags = dec.outgoing_flags(record)
    res.update({f"{out}.out{r}": int(flags.get(r, 0)) for r in range(1, n + 1)})
    res[f"{out}.tie"] = int(result.flags.get("tie", False))
    return res


def ec_decode(records: Records, args: dict) -> dict:
    record = syndrome_record(records, args)
    return _ec_outputs(args, dec.decode_ec(record), record)


def ec_joint_decode(records: Records, args: dict) -> dict:
    ra = syndrome_record(records, args["a"])
    rb = syndrome_record(records, args["b"])
    da, db = dec.joint_cz_decode(ra, rb, dec.damped_qubits(ra), dec.damped_qubits(rb))
    return {**_ec_outputs(args["a"], da, ra), **_ec_outputs(args["b"], db, rb)}


# --- ideal EC ------------------------------------------------------------


def ideal_record(records: Records, args: dict) -> dec.IdealRecord:
    zz = {int(r): [records[k] for k in keys] for r, keys in args["zz"].items()}
    mz = {}
    for r, keys in args["mz"].items():
        if all(k in records for k in keys):
            mz[int(r)] = [records[k] for k in keys]
    xx = [records[k] for k in args.get("xx", []) if k in records]
    prior = {}
    for r, key in args.get("prior", {}).items():
        v = records.get(key, 0)
        if v:
            prior[int(r)] = dec.RowStatus(v)
    return dec.IdealRecord(args["n"], zz, mz, xx, prior)


def ideal_xfix(records: Records, args: dict) -> dict:
    rec = ideal_record(records, args)
    n = args["n"]
    fixes = set(dec.ideal_x_corrections(rec))
    out = args["out"]
    return {f"{out}.x{r}.{c}": int((r, c) in fixes) for r in range(1, n + 1) for c in range(1, n + 1)}


def ideal_decode(records: Records, args: dict) -> dict:
    rec = ideal_record(records, args)
    result = dec.decode_ideal(rec)
    out = args["out"]
    return {f"{out}.z{r}": int(r in result.z_rows) for r in range(1, args["n"] + 1)}


# --- logical measurements ------------------------------------------------


def meas_z(records: Records, args: dict) -> dict:
    """Logical Z from transversal Z outcomes: parity of rows read as |1>."""
    ones = 0
    for keys in args["rows"]:
        ones ^= row_value([records[k] for k in keys], "damping")
    return {args["out"]: -1 if ones else 1}


def meas_x(records: Records, args: dict) -> dict:
    """Majority over valid rows; a row is valid when both X outcomes agree
    and every Z outcome is +1."""
    votes = []
    for row in args["rows"]:
        a, f = records[row["anc"]], records[row["first"]]
        if a == f and all(records[k] == 1 for k in row["z"]):
            votes.append(a)
    plus = sum(1 for v in votes if v == 1)
    minus = len(votes) - plus
    out = args["out"]
    return {out: 1 if plus >= minus else -1, f"{out}.valid": len(votes), f"{out}.tie": int(plus == minus)}


# --- Pauli frames --------------------------------------------------------


def _bit(records: Records, key) -> int:
    return int(key is not None and records.get(key, 0) == 1)


def teleport_frame(records: Records, args: dict) -> dict:
    """Frame after a one-bit teleport: CZ with a resource, X measurement of the
    input, output on the resource block.

    Input frame ``(xc, zc)`` and resource frame ``(xr, zr)`` are moved through
    the CZ; ``gate`` names the resource phase (``I``, ``S`` or ``T``).  For
    ``T`` the outcome-dependent ``SX`` is left for a physical correction and
    only the Pauli part is returned.
    """
    xc, zc = (_bit(records, k) for k in args.get("cin", (None, None)))
    xr, zr = (_bit(records, k) for k in args.get("res", (None, None)))
    m = int(records[args["m"]] == -1) ^ xr ^ zc
    gate = args["gate"]
    if "gate_if" in args:
        gate = gate if _bit(records, args["gate_if"]) else "I"
    x, z = xr, zr ^ xc
    if gate == "I":
        x ^= m
    elif gate == "S":
        x ^= m
        z ^= m
    elif gate != "T":
        raise SchemaError(f"unknown teleported phase {gate!r}")
    out = args["out"]
    return {f"{out}.m": m, f"{out}.x": x, f"{out}.z": z}


def compose_t_frame(records: Records, args: dict) -> dict:
    """Final frame of the T gadget after the conditional S correction.

    With Pauli part ``P`` and outcome ``m`` the state before correction is
    ``P (SX)^m T psi``; the correction maps it to ``F S^m P S^-m (ZX)^m T psi``.
    """
    xp, zp = (_bit(records, k) for k in args["p"])
    m = _bit(records, args["m"])
    xf, zf = (_bit(records, k) for k in args["inner"])
    if m:
        zp ^= xp
    out = args["out"]
    return {f"{out}.x": xf ^ xp ^ m, f"{out}.z": zf ^ zp ^ m}


REGISTRY: dict[str, Callable[[Records, dict], dict]] = {
    "all_one": all_one,
    "any_minus": any_minus,
    "parity": parity,
    "row_fix": row_fix,
    "repeat_go": repeat_go,
    "recovery": recovery,
    "ec_decode": ec_decode,
    "ec_joint_decode": ec_joint_decode,
    "ideal_xfix": ideal_xfix,
    "ideal_decode": ideal_decode,
    "meas_z": meas_z,
    "meas_x": meas_x,
    "teleport_frame": teleport_frame,
    "compose_t_frame": compose_t_frame,
}

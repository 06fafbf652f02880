"""Command-line front end: ``adshor <command> ...``.

Exit codes: 0 success, 1 usage or domain error, 2 a property check found
violations.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import AdshorError

EXIT_OK, EXIT_ERROR, EXIT_VIOLATIONS = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in columns})
    return buf.getvalue()


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(args: argparse.Namespace, argv: Sequence[str], outputs: list[str], inputs: Sequence[str] = ()) -> None:
    """RunManifest beside each output: command, flags, version, seed, input hashes."""
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "flags": flags,
        "version": __version__,
        "seed": flags.get("seed"),
        "inputs": {p: _sha256(p) for p in inputs},
        "outputs": outputs,
    }
    for out in outputs:
        Path(f"{out}.manifest.json").write_text(_dump_json(manifest))


def _emit(text: str, out: str | None) -> list[str]:
    if out is None or out == "-":
        sys.stdout.write(text)
        return []
    Path(out).write_text(text)
    return [out]


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("ADSHOR_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"ADSHOR_JOBS must be an integer, got {env!r}") from exc
    return 1


def _n_range(text: str) -> list[int]:
    """``"2..10"``, ``"2,4,6"`` or ``"3"``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            values = list(range(int(a), int(b) + 1))
        else:
            values = [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad lattice-size range {text!r}") from exc
    if not values or min(values) < 2:
        raise argparse.ArgumentTypeError("lattice sizes must be >= 2")
    return values


# --- commands ------------------------------------------------------------


def cmd_emit(args, argv) -> int:
    from .circuit import serialize
    from .codes import BaconShorCode
    from .gadgets import build_logical

    circuit = build_logical(BaconShorCode(args.n), args.gadget, policy=args.policy)
    outputs = _emit(serialize(circuit) + "\n", args.output)
    write_manifest(args, argv, outputs)
    return EXIT_OK


def cmd_simulate(args, argv) -> int:
    from .simulator.oracles import memory_infidelity, unencoded_infidelity
    from .threshold import p_grid

    if args.sweep:
        pmin, pmax, steps = args.sweep
        ps = p_grid(float(pmin), float(pmax), int(steps))
    elif args.p is not None:
        ps = [args.p]
    else:
        raise UsageError("simulate needs --p or --sweep")
    if args.gadget == "unencoded":
        est = unencoded_infidelity(ps)
    else:
        est = memory_infidelity(
            args.n,
            ps,
            mode=args.mode,
            shots=args.shots,
            seed=args.seed,
            bias=args.bias,
            max_jumps=args.max_jumps,
            policy=args.policy,
            jobs=_jobs(args),
        )
    columns = ["p", "infidelity", "truncation_bound"] + (["stderr"] if est.stderr is not None else [])
    rows = est.to_rows()
    if est.stderr is None:
        for r in rows:
            r.pop("stderr", None)
    outputs = _emit(_csv_text(rows, columns), args.output)
    write_manifest(args, argv, outputs)
    return EXIT_OK


def cmd_check(args, argv) -> int:
    from .simulator.oracles import check_xx_sequences, check_property

    if args.property == "xx-diff":
        report = check_xx_sequences(args.n, max_faults=max(1, args.budget))
    else:
        report = check_property(args.property, args.gadget, args.n, args.budget, args.policy)
    outputs = _emit(_dump_json(report.to_json()), args.output)
    write_manifest(args, argv, outputs)
    return EXIT_VIOLATIONS if report.violations else EXIT_OK


def _decode_doc(doc: dict, n: int) -> dict:
    from . import decoder as dec

    if "a" in doc and "b" in doc:
        ra = dec.SyndromeRecord.from_json(doc["a"])
        rb = dec.SyndromeRecord.from_json(doc["b"])
        for r in (ra, rb):
            if r.n != n:
                raise UsageError(f"record is for n={r.n}, not --code {n}")
        da, db = dec.joint_cz_decode(ra, rb, dec.damped_qubits(ra), dec.damped_qubits(rb))
        return {"a": da.to_json(), "b": db.to_json()}
    if "zz" in doc:
        rec = dec.IdealRecord(
            n,
            {int(r): list(v) for r, v in doc["zz"].items()},
            {int(r): list(v) for r, v in doc.get("mz", {}).items()},
            list(doc.get("xx", [])),
            {int(r): dec.RowStatus(v) for r, v in doc.get("prior", {}).items()},
        )
        res = dec.decode_ideal(rec)
        res.x_corrections = dec.ideal_x_corrections(rec)
        return res.to_json()
    rec = dec.SyndromeRecord.from_json(doc)
    if rec.n != n:
        raise UsageError(f"record is for n={rec.n}, not --code {n}")
    return dec.decode_ec(rec).to_json()


def cmd_decode(args, argv) -> int:
    try:
        doc = json.loads(Path(args.records).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {args.records}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.records}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise UsageError("records file must hold a JSON object")
    outputs = _emit(_dump_json(_decode_doc(doc, args.code)), args.output)
    write_manifest(args, argv, outputs, [args.records])
    return EXIT_OK


def cmd_threshold(args, argv) -> int:
    from .threshold import threshold_report

    report = threshold_report(range(2, args.n_max + 1))
    if args.json:
        text = _dump_json(report.to_json())
    else:
        lines = [f"{'n':>3} {'N':>8} {'p_th':>11} {'reference':>10} {'rel.dev':>9}  match"]
        for r in report.rows:
            ref = f"{r.reference:.2e}" if r.reference is not None else "-"
            dev = f"{r.deviation:+.2e}" if r.deviation is not None else "-"
            lines.append(f"{r.n:>3} {r.N:>8} {r.p_th:>11.4e} {ref:>10} {dev:>9}  {'yes' if r.matches() else 'no'}")
        text = "\n".join(lines) + "\n"
    outputs = _emit(text, args.output)
    write_manifest(args, argv, outputs)
    return EXIT_OK


def cmd_curves(args, argv) -> int:
    from .threshold import figure_data, p_grid

    rows = figure_data(p_grid(args.pmin, args.pmax, args.steps), args.n)
    outputs = _emit(_csv_text(rows, ["p", "n", "bound", "unencoded"]), args.output)
    write_manifest(args, argv, outputs)
    return EXIT_OK


# --- parser --------------------------------------------------------------

GADGETS = [
    "ideal-ec", "ft-ec", "subcircuit", "xx", "damping", "cz", "ccz", "meas-x", "meas-z", "prep-cat",
    "prep-plus", "prep-zero", "prep-s", "prep-t", "teleport-h", "teleport-s", "teleport-t",
    "ft-ec-memory", "cz-extended",
]  # fmt: skip
POLICIES = ["naive", "lemma2", "redundant"]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adshor", description="Fault-tolerant Bacon-Shor gadgets under amplitude damping.")
    parser.add_argument("--version", action="version", version=f"adshor {__version__}")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes (default $ADSHOR_JOBS or 1)")
    # --jobs is accepted before or after the command name
    common = _Parser(add_help=False)
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("emit", parents=[common], help="write a gadget circuit as JSON")
    p.add_argument("--gadget", required=True, choices=GADGETS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--policy", choices=POLICIES, default="redundant")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("simulate", parents=[common], help="logical infidelity of a memory gadget or a bare qubit")
    p.add_argument("--gadget", required=True, choices=["ft-ec-memory", "unencoded"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--p", type=float)
    p.add_argument("--sweep", nargs=3, metavar=("PMIN", "PMAX", "STEPS"))
    p.add_argument("--mode", choices=["enumerate", "mc"], default="enumerate")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias", type=float, default=1.0, help="jump-proposal boost for mc sampling")
    p.add_argument("--max-jumps", type=int, default=None)
    p.add_argument("--policy", choices=POLICIES, default="redundant")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", parents=[common], help="exhaustive fault-injection property check")
    p.add_argument("--property", required=True, choices=["P1", "P2", "P3", "P4", "xx-diff", "p1", "p2", "p3", "p4"])
    p.add_argument("--gadget", default="ft-ec")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--budget", type=int, default=1)
    p.add_argument("--policy", choices=POLICIES, default="redundant")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("decode", parents=[common], help="decode a syndrome record file")
    p.add_argument("--records", required=True)
    p.add_argument("--code", type=int, required=True, help="lattice size n")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("threshold", parents=[common], help="pseudothreshold table")
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("curves", parents=[common], help="infidelity-bound curves as CSV")
    p.add_argument("--pmin", type=float, default=1e-8)
    p.add_argument("--pmax", type=float, default=1e-4)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--n", type=_n_range, default=list(range(2, 11)))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except AdshorError as exc:
        print(f"adshor: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

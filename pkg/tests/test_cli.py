import csv
import hashlib
import io
import json

import pytest

from adshor.circuit import deserialize
from adshor.cli import EXIT_ERROR, EXIT_OK, EXIT_VIOLATIONS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_threshold_table(capsys):
    code, out, _ = run(capsys, "threshold")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 10
    assert all(line.endswith("yes") for line in lines[1:])


def test_threshold_json_sorted(capsys):
    code, out, _ = run(capsys, "threshold", "--json", "--n-max", "4")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["all_match"]
    assert [r["n"] for r in doc["rows"]] == [2, 3, 4]
    assert out == json.dumps(doc, indent=2, sort_keys=True) + "\n"


@pytest.mark.parametrize("argv", [["threshold", "--bogus"], ["nope"], [], ["emit", "--gadget", "xx"]])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_ERROR and "error" in err


def test_emit_writes_circuit_and_manifest(capsys, tmp_path):
    out = tmp_path / "cz.json"
    code, _, _ = run(capsys, "emit", "--gadget", "cz", "--n", "3", "-o", str(out))
    assert code == EXIT_OK
    circuit = deserialize(out.read_text())
    assert circuit.count("CZ") == 9
    manifest = json.loads((tmp_path / "cz.json.manifest.json").read_text())
    assert manifest["command"] == "emit"
    assert manifest["flags"]["gadget"] == "cz" and manifest["outputs"] == [str(out)]
    assert "version" in manifest


def test_simulate_unencoded_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--gadget", "unencoded", "--p", "1e-3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK
    assert list(rows[0]) == ["p", "infidelity", "truncation_bound"]
    assert float(rows[0]["infidelity"]) == pytest.approx(1e-3 / 3, rel=2e-3)


def test_simulate_sweep(capsys):
    code, out, _ = run(capsys, "simulate", "--gadget", "unencoded", "--sweep", "1e-4", "1e-2", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and [float(r["p"]) for r in rows] == pytest.approx([1e-4, 1e-3, 1e-2])


def test_simulate_needs_p(capsys):
    code, _, err = run(capsys, "simulate", "--gadget", "unencoded")
    assert code == EXIT_ERROR and "--p" in err


def test_bad_jobs_env(capsys, monkeypatch):
    monkeypatch.setenv("ADSHOR_JOBS", "many")
    code, _, err = run(capsys, "simulate", "--gadget", "ft-ec-memory", "--mode", "mc", "--shots", "1", "--p", "1e-3")
    assert code == EXIT_ERROR and "ADSHOR_JOBS" in err


def test_simulate_memory_mc_with_jobs(capsys):
    argv = ["simulate", "--gadget", "ft-ec-memory", "--n", "2", "--p", "1e-3", "--mode", "mc", "--shots", "2", "--seed", "1"]
    code, out, _ = run(capsys, *argv, "--jobs", "1")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and list(rows[0]) == ["p", "infidelity", "truncation_bound", "stderr"]
    again = run(capsys, "--jobs", "1", *argv)[1]
    assert again == out


def test_check_exit_codes(capsys):
    code, out, _ = run(capsys, "check", "--property", "P2", "--gadget", "prep-cat", "--n", "2")
    assert code == EXIT_OK and json.loads(out)["violations"] == []
    code, out, _ = run(capsys, "check", "--property", "P1", "--gadget", "ideal-ec", "--n", "2")
    assert code == EXIT_VIOLATIONS and json.loads(out)["violations"]


def test_check_unknown_gadget_for_property(capsys):
    code, _, err = run(capsys, "check", "--property", "P2", "--gadget", "ft-ec")
    assert code == EXIT_ERROR and "prep-cat" in err


def test_decode_ideal_record(capsys, tmp_path):
    rec = {"zz": {"1": [1, -1], "2": [1, 1], "3": [1, 1]}, "mz": {"1": [1, -1, -1]}, "xx": [1, 1]}
    path = tmp_path / "rec.json"
    path.write_text(json.dumps(rec))
    out = tmp_path / "dec.json"
    code, _, _ = run(capsys, "decode", "--records", str(path), "--code", "3", "-o", str(out))
    assert code == EXIT_OK
    assert json.loads(out.read_text())["x_corrections"] == [[1, 1]]
    manifest = json.loads((tmp_path / "dec.json.manifest.json").read_text())
    assert manifest["inputs"] == {str(path): hashlib.sha256(path.read_bytes()).hexdigest()}


def test_decode_syndrome_record(capsys, tmp_path):
    sc = {
        "rows": [1, 2],
        "damping": {"1": [[1, 1]], "2": [[1, 1]]},
        "damping_mz": {"1": None, "2": None},
        "xx": -1,
        "flag": 1,
        "parity": {"1": [[1, 1, 1]], "2": [[1, -1, 1]]},
        "coupling": {"1": [1], "2": [1]},
    }
    path = tmp_path / "ec.json"
    path.write_text(json.dumps({"n": 2, "policy": "naive", "rounds": [[sc], [sc]]}))
    code, out, _ = run(capsys, "decode", "--records", str(path), "--code", "2")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["z_rows"] == [2] and doc["flags"]["statuses"] == [0, 2]


def test_decode_errors(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{oops")
    code, _, err = run(capsys, "decode", "--records", str(path), "--code", "2")
    assert code == EXIT_ERROR and "malformed" in err
    code, _, err = run(capsys, "decode", "--records", str(tmp_path / "missing.json"), "--code", "2")
    assert code == EXIT_ERROR
    path.write_text(json.dumps({"n": 2}))
    code, _, err = run(capsys, "decode", "--records", str(path), "--code", "2")
    assert code == EXIT_ERROR and "rounds" in err


def test_curves_csv(capsys):
    code, out, _ = run(capsys, "curves", "--steps", "5", "--n", "2..4")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 15
    assert list(rows[0]) == ["p", "n", "bound", "unencoded"]


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("adshor ")

import json

import pytest
from hypothesis import given, settings, strategies as st

from adshor.circuit import (
    Builder,
    Circuit,
    count_locations,
    deserialize,
    op,
    segment_location_count,
    schedule,
    serialize,
)
from adshor.codes import BaconShorCode
from adshor.errors import CircuitParseError, SchedulingError
from adshor.gadgets.logical import GadgetKind, build_logical
from adshor.threshold import n_sub

BUILDABLE = [k.value for k in GadgetKind]


def test_empty_circuit():
    c = schedule(Circuit([], [], [], [], {}))
    assert count_locations(c) == 0


def test_nondestructive_mz_six_locations():
    b = Builder()
    d, a = b.alloc("data"), b.alloc("parity")
    b.record("m")
    c = b.build([[op("PrepZero", a)], [op("CNOT", d, a)], [op("MZ", a, record="m")]], [d])
    assert count_locations(c) == 6


def test_conflict_is_scheduling_error():
    b = Builder()
    a, c = b.alloc("data"), b.alloc("data")
    with pytest.raises(SchedulingError):
        b.build([[op("X", a), op("CNOT", a, c)]], [a, c])


def test_use_before_preparation():
    b = Builder()
    a = b.alloc("parity")
    with pytest.raises(SchedulingError):
        b.build([[op("X", a)]], [])


@pytest.mark.parametrize(
    "t,want",
    [(1, 194), (2, 464)],
)
def test_subcircuit_accounting_count(t, want):
    c = build_logical(BaconShorCode(t + 1), "subcircuit")
    assert count_locations(c, "paper-accounting") == want


@pytest.mark.parametrize("t", range(1, 10))
def test_subcircuit_accounting_closed_form(t):
    c = build_logical(BaconShorCode(t + 1), "subcircuit")
    assert count_locations(c, "paper-accounting") == n_sub(t)


def test_component_counts():
    # coupling step, both rows, t=1
    assert 2 * segment_location_count({"kind": "coupling", "extended": 3}) == 6
    # damping extraction per round per row, t=2: 5 extended qubits, 3 cyclic checks
    assert segment_location_count({"kind": "damping_round", "extended": 5, "checks": 3}) == 24
    # flagged XX measurement, t=1
    assert segment_location_count({"kind": "xx", "extended": 6}) == 68


@pytest.mark.parametrize("t", range(1, 10))
def test_component_closed_forms(t):
    segs = build_logical(BaconShorCode(t + 1), "subcircuit").meta["segments"]
    for s in segs:
        got = segment_location_count(s)
        if s["kind"] == "coupling":
            assert got == 2 * t + 1
        elif s["kind"] == "damping_round":
            assert got == 3 * (3 * t + 2)
        elif s["kind"] == "xx":
            assert got == 16 * (t + 1) ** 2 + 4


def test_roundtrip_byte_identical_ft_ec():
    c = build_logical(BaconShorCode(2), "ft-ec")
    text = serialize(c)
    assert serialize(deserialize(text)) == text


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("gadget", BUILDABLE)
def test_roundtrip_all_builders(n, gadget):
    c = build_logical(BaconShorCode(n), gadget)
    back = deserialize(serialize(c))
    assert back.steps == c.steps
    assert back.locations().locations == c.locations().locations
    assert count_locations(c) >= sum(1 for ins in c.instructions() if ins.is_quantum)


def test_unknown_gate_names_instruction():
    doc = json.loads(serialize(build_logical(BaconShorCode(2), "cz")))
    doc["steps"][0][1]["kind"] = "SWAP"
    with pytest.raises(CircuitParseError, match=r"steps\[0\]\[1\].*SWAP"):
        deserialize(json.dumps(doc))


def test_malformed_json_reports_position():
    with pytest.raises(CircuitParseError, match="line 1"):
        deserialize("{not json")


def test_cz_pairs_transpose():
    c = build_logical(BaconShorCode(3), "cz")
    a, b = c.meta["input_blocks"]
    pairs = [ins.operands for ins in c.instructions() if ins.kind == "CZ"]
    assert len(pairs) == 9
    for i in range(3):
        for j in range(3):
            assert (a[3 * i + j], b[3 * j + i]) in pairs


def test_schedule_deterministic():
    a = build_logical(BaconShorCode(3), "ft-ec").locations()
    b = build_logical(BaconShorCode(3), "ft-ec").locations()
    assert a.locations == b.locations


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.sampled_from(["X", "Z", "S", "T", "CNOT", "CZ", "Wait"]), max_size=3), max_size=6))
def test_random_circuits_count_live_sites(layers):
    b = Builder()
    qs = [b.alloc("data") for _ in range(4)]
    steps = []
    for layer in layers:
        free = list(qs)
        step = []
        for kind in layer:
            k = 2 if kind in ("CNOT", "CZ") else 1
            if len(free) < k:
                break
            step.append(op(kind, *free[:k]))
            free = free[k:]
        steps.append(step)
    c = b.build(steps, qs)
    assert count_locations(c) == 4 * sum(1 for s in steps if s)
    assert serialize(deserialize(serialize(c))) == serialize(c)

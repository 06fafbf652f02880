import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adshor.codes import (
    BaconShorCode,
    LatticeCoord,
    OperatorString,
    code_description,
    codeword_state,
    logical_operators,
    stabilizer_generators,
)
from adshor.errors import CapacityError, InvalidCodeError

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
}


def symplectic(op: OperatorString, n: int) -> np.ndarray:
    """Independent (x|z) bit vector, built from the row-major index."""
    v = np.zeros(2 * n * n, dtype=int)
    for c, s in op.ops.items():
        q = (c.row - 1) * n + (c.col - 1)
        v[q] = s in "XY"
        v[n * n + q] = s in "ZY"
    return v


def sym_product(a: np.ndarray, b: np.ndarray) -> int:
    m = len(a) // 2
    return int(a[:m] @ b[m:] + a[m:] @ b[:m]) % 2


def dense(op: OperatorString, n: int) -> np.ndarray:
    mats = [PAULI[op.ops.get(LatticeCoord(r, c), "I")] for r in range(1, n + 1) for c in range(1, n + 1)]
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return op.phase * out


def test_generators_n2():
    gens = [str(g) for g in stabilizer_generators(BaconShorCode(2))]
    assert gens == ["Z@1,1 Z@1,2", "Z@2,1 Z@2,2", "X@1,1 X@1,2 X@2,1 X@2,2"]


def test_generators_n3_match_listed_set():
    gens = {str(g) for g in stabilizer_generators(BaconShorCode(3))}
    zz = {f"Z@{i},{j} Z@{i},{j + 1}" for i in (1, 2, 3) for j in (1, 2)}
    xx = {
        "X@1,1 X@1,2 X@1,3 X@2,1 X@2,2 X@2,3",
        "X@2,1 X@2,2 X@2,3 X@3,1 X@3,2 X@3,3",
    }
    assert gens == zz | xx


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_generators_commute(n):
    gens = stabilizer_generators(BaconShorCode(n))
    assert len(gens) == n * (n - 1) + (n - 1)
    vecs = [symplectic(g, n) for g in gens]
    for a, b in itertools.combinations(vecs, 2):
        assert sym_product(a, b) == 0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_logicals_commute_with_stabilizers_and_anticommute(n):
    code = BaconShorCode(n)
    xbar, zbar = logical_operators(code)
    xv, zv = symplectic(xbar, n), symplectic(zbar, n)
    for g in stabilizer_generators(code):
        assert sym_product(xv, symplectic(g, n)) == 0
        assert sym_product(zv, symplectic(g, n)) == 0
    assert sym_product(xv, zv) == 1
    assert zbar * xbar == -(xbar * zbar)


def test_logicals_n2():
    xbar, zbar = logical_operators(BaconShorCode(2))
    assert str(xbar) == "X@1,1 X@1,2"
    assert str(zbar) == "Z@1,1 Z@2,1"


def test_invalid_code():
    with pytest.raises(InvalidCodeError):
        BaconShorCode(1)


def test_codeword_n2_plus_is_product_of_row_bells():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(codeword_state(BaconShorCode(2), "plus"), np.kron(bell, bell), atol=1e-12)


def test_codeword_n3_zero_listed_form():
    psi = codeword_state(BaconShorCode(3), "zero")
    want = np.zeros(2**9)
    for rows in ["000", "011", "101", "110"]:
        want[int("".join(b * 3 for b in rows), 2)] = 0.5
    assert np.allclose(psi, want, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("which", ["plus", "minus", "zero", "one"])
def test_codewords_are_stabilized(n, which):
    code = BaconShorCode(n)
    psi = codeword_state(code, which)
    assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)
    for g in stabilizer_generators(code):
        assert np.vdot(psi, dense(g, n) @ psi).real == pytest.approx(1, abs=1e-12)
    xbar, zbar = logical_operators(code)
    op, sign = {"plus": (xbar, 1), "minus": (xbar, -1), "zero": (zbar, 1), "one": (zbar, -1)}[which]
    assert np.vdot(psi, dense(op, n) @ psi).real == pytest.approx(sign, abs=1e-12)


def test_n2_is_four_qubit_code():
    code = BaconShorCode(2)
    k = lambda s: np.eye(16)[int(s, 2)]
    zero = (k("0000") + k("1111")) / np.sqrt(2)
    one = (k("0011") + k("1100")) / np.sqrt(2)
    assert abs(np.vdot(zero, codeword_state(code, "zero"))) == pytest.approx(1, abs=1e-12)
    assert abs(np.vdot(one, codeword_state(code, "one"))) == pytest.approx(1, abs=1e-12)


def test_dense_cap():
    with pytest.raises(CapacityError):
        codeword_state(BaconShorCode(4), "plus")


def test_operator_products():
    x = OperatorString.parse("X@1,1")
    z = OperatorString.parse("Z@1,1")
    e = OperatorString.parse("E@1,1")
    assert (x * z) == OperatorString.parse("Y@1,1") * OperatorString({}, -1j)
    assert (e * e).is_zero
    assert e * OperatorString.parse("E†@1,1") == OperatorString.parse("P0@1,1")


def test_description_json():
    d = code_description(BaconShorCode(2))
    assert d["n"] == 2 and d["t"] == 1
    assert d["stabilizers"][0] == "Z@1,1 Z@1,2"
    assert d["logicals"] == {"X": "X@1,1 X@1,2", "Z": "Z@1,1 Z@2,1"}


pauli_strings = st.dictionaries(
    st.tuples(st.integers(1, 2), st.integers(1, 2)), st.sampled_from("IXYZ"), max_size=4
).map(lambda d: OperatorString.from_pairs(d.items()))


@given(pauli_strings, pauli_strings)
def test_commutation_matches_matrices(a, b):
    ma, mb = dense(a, 2), dense(b, 2)
    assert a.commutes_with(b) == np.allclose(ma @ mb, mb @ ma)


@given(pauli_strings, pauli_strings)
def test_product_matches_matrices(a, b):
    assert np.allclose(dense(a * b, 2), dense(a, 2) @ dense(b, 2))

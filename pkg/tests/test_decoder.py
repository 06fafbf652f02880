import itertools

import pytest
from hypothesis import given, strategies as st

from adshor import decoder as dec
from adshor.decoder import RowStatus as RS
from adshor.errors import DecodingFailure, DomainError, SchemaError

U, P, D = RS.UNDAMPED, RS.POTENTIALLY_DAMPED, RS.DAMPED


def test_diff_examples():
    assert dec.diff("XIIXX", "IXIXI") == 3
    assert dec.diff("XIXIX", "XIXIX") == 0
    e = "XIIXI"
    assert dec.diff(e, dec.complement(e)) == 5


def test_diff_length_mismatch():
    with pytest.raises(DomainError):
        dec.diff("XI", "XII")


def test_sequences_from_syndrome():
    assert dec.sequences_from_syndrome((1, -1, 1, 1)) == ("IIXXX", "XXIII")
    assert dec.sequences_from_syndrome((1, 1)) == ("III", "XXX")


@given(st.lists(st.sampled_from([1, -1]), min_size=1, max_size=12))
def test_sequences_reproduce_syndrome(s):
    e, ebar = dec.sequences_from_syndrome(s)
    # brute force: adjacent parities recomputed character by character
    for seq in (e, ebar):
        got = [1 if seq[i] == seq[i + 1] else -1 for i in range(len(seq) - 1)]
        assert got == list(s)
    assert e[0] == "I" and ebar == dec.complement(e)


def test_choose_pair_single_option():
    # t=2: candidate pairs with DIFF 1 or 4 on five columns
    a = dec.sequences_from_syndrome((1, 1, 1, 1))
    b = dec.sequences_from_syndrome((-1, 1, 1, 1))
    ea, eb = dec.choose_pair(a, b, 2)
    assert dec.diff(ea, eb) == 1
    assert (ea, eb) == ("IIIII", "XIIII")


def test_choose_pair_trivial():
    a = dec.sequences_from_syndrome((1, 1))
    assert dec.choose_pair(a, a, 1) == ("III", "III")


def test_choose_pair_failure():
    with pytest.raises(DecodingFailure):
        dec.choose_pair(["IIIII"], ["XXIII"], 1)


def test_majority_naive_repeat():
    assert dec.majority_syndrome([(1,), (1,)], "naive", 1).syndrome == (1,)


def test_majority_naive_first_to_reach():
    rounds = [(-1, 1), (1, 1), (-1, 1), (1, 1), (1, 1), (-1, 1), (-1, 1)]
    assert dec.majority_syndrome(rounds, "naive", 2).syndrome == (1, 1)


def test_majority_naive_adversarial_t2():
    # each fault can spoil at most one round; with t=2 faults the true
    # sequence still reaches t+1 = 3 repeats within t(t+1)+1 = 7 rounds
    true = (1, 1, 1)
    wrong = [(-1, 1, 1), (1, -1, 1), (1, 1, -1), (-1, -1, 1)]
    for placement in itertools.combinations(range(7), 2):
        for w in itertools.product(wrong, repeat=2):
            rounds = [true] * 7
            for pos, s in zip(placement, w):
                rounds[pos] = s
            assert dec.majority_syndrome(rounds, "naive", 2).syndrome == true


def test_majority_redundant_excludes_invalid():
    rounds = [(-1, 1, 1), (-1, 1, 1), (1, 1, 1)]
    assert dec.majority_syndrome(rounds, "redundant", 2).syndrome == (1, 1, 1)


def test_majority_tie_flagged():
    res = dec.majority_syndrome([(1,), (-1,)], "lemma2", 1)
    assert res.tie and res.syndrome == (-1,)


def test_resolve_tie_prefers_light_correction_then_latest():
    statuses = [U, U]
    assert dec.resolve_tie([(-1,), (1,)], 1, statuses) == (1,)
    assert dec.resolve_tie([(-1,), (1,)], 1, [D, U]) == (1,)
    # both corrections weigh the same: the later round wins
    assert dec.resolve_tie([(1,), (-1,)], 1, [D, D]) == (-1,)


def _sc(rows=(1, 2), damping=None, mz=None, xx=1, flag=1, parity=None, coupling=None, n=2):
    t = n - 1
    return dec.SubcircuitRecord(
        rows=rows,
        damping=damping or {r: [[1] * (t + 1)] for r in rows},
        damping_mz=mz or {r: None for r in rows},
        xx=xx,
        flag=flag,
        parity=parity or {r: [[1] * (2 * t + 1)] for r in rows},
        coupling=coupling or {r: [1] * t for r in rows},
    )


def _record(*rounds, n=2, prior=None):
    return dec.SyndromeRecord(n, dec.RepeatPolicy.NAIVE, [list(r) for r in rounds], prior or {})


def test_label_rows_clean():
    assert dec.label_rows(_record([_sc()], [_sc()])) == [U, U]


def test_label_rows_rules():
    damp = _sc(damping={1: [[-1, 1]], 2: [[1, 1]]})
    assert dec.label_rows(_record([damp])) == [D, U]
    par_flag_ok = _sc(parity={1: [[1, -1, 1]], 2: [[1, 1, 1]]})
    assert dec.label_rows(_record([par_flag_ok])) == [D, U]
    par_flagged = _sc(parity={1: [[1, -1, 1]], 2: [[1, 1, 1]]}, flag=-1)
    assert dec.label_rows(_record([par_flagged])) == [P, U]
    coupled = _sc(coupling={1: [1], 2: [-1]})
    assert dec.label_rows(_record([coupled], [_sc()])) == [U, D]


def test_label_rows_carry_prior_and_monotone():
    rec = _record([_sc(parity={1: [[1, -1, 1]], 2: [[1, 1, 1]]}, flag=-1)], [_sc()], prior={2: D})
    assert dec.label_rows(rec) == [P, D]
    # labels never drop as more subcircuits are appended
    rounds = [[_sc(damping={1: [[-1, 1]], 2: [[1, 1]]})], [_sc()], [_sc(flag=-1)]]
    prev = [U, U]
    for k in range(1, len(rounds) + 1):
        cur = dec.label_rows(_record(*rounds[:k]))
        assert all(c >= p for c, p in zip(cur, prev))
        prev = cur


def test_label_rows_schema_error():
    sc = _sc()
    sc.coupling = {1: [1]}
    with pytest.raises(SchemaError):
        dec.label_rows(_record([sc]))


def test_outgoing_flags_forward_all_marks():
    rec = _record([_sc(coupling={1: [-1], 2: [1]})], [_sc()])
    assert dec.outgoing_flags(rec) == {1: D}


def test_decode_z_scenarios_7x7():
    syndrome = (1, 1, 1, 1, -1, 1)
    damped = [D] * 4 + [U] * 3
    assert dec.decode_z(syndrome, damped).z_rows == [1, 2, 3, 4, 5]
    flagged = [P] * 4 + [U] * 3
    assert dec.decode_z(syndrome, flagged).z_rows == [6, 7]
    assert dec.decode_z((1,) * 6, [U] * 7).z_rows == []


def test_pattern_comparison_reduces():
    # the decision only depends on z_p + 2 z_u of each pattern
    for n in range(2, 8):
        for statuses in dec.all_statuses(n):
            for s in itertools.product((1, -1), repeat=n - 1):
                f, g = dec.z_patterns(s, n)

                def reduced(e):
                    zp = sum(1 for b, st_ in zip(e, statuses) if b and st_ == P)
                    zu = sum(1 for b, st_ in zip(e, statuses) if b and st_ == U)
                    return zp + 2 * zu

                if reduced(f) != reduced(g):
                    want = f if reduced(f) < reduced(g) else g
                    got = dec.decode_z(s, statuses).z_rows
                    assert got == [i + 1 for i, b in enumerate(want) if b]


def test_decode_z_matches_ideal_rule_without_flagged_rows():
    for n in range(2, 8):
        for statuses in itertools.product((U, D), repeat=n):
            damped = {i + 1: [-1] for i, s in enumerate(statuses) if s == D}
            zz = {r: damped.get(r, [1]) for r in range(1, n + 1)}
            mz = {r: [1] * n for r in damped}
            for s in itertools.product((1, -1), repeat=n - 1):
                ideal = dec.decode_ideal(dec.IdealRecord(n, zz, mz, list(s)))
                assert dec.decode_z(s, statuses).z_rows == ideal.z_rows


def test_decode_ideal_damping_on_first_qubit():
    rec = dec.IdealRecord(3, {1: [1, -1], 2: [1, 1], 3: [1, 1]}, {1: [1, -1, -1]}, [1, 1])
    res = dec.decode_ideal(rec)
    assert res.x_corrections == [(1, 1)] and res.z_rows == []


def test_decode_ideal_scenarios():
    zz_damped = {1: [-1, 1], 2: [1, -1], 3: [1, 1]}
    mz = {1: [1, -1, -1], 2: [-1, -1, 1]}
    assert dec.decode_ideal(dec.IdealRecord(3, zz_damped, mz, [1, -1])).z_rows == [1, 2]
    clean = {r: [1, 1] for r in (1, 2, 3)}
    assert dec.decode_ideal(dec.IdealRecord(3, clean, {}, [1, -1])).z_rows == [3]


def test_damped_qubits_rule():
    # extended row of 3: data, coupling, data; any -1 means the row is |1>
    sc = _sc(mz={1: [1, -1, -1], 2: None})
    assert dec.damped_qubits(_record([sc])) == [(1, 1)]
    sc = _sc(mz={1: [1, 1, 1], 2: [-1, 1, 1]})
    assert dec.damped_qubits(_record([sc])) == [(2, 2)]


def test_joint_decode_escalates_partner_rows():
    clean = _record([_sc(xx=-1)], [_sc(xx=-1)])
    a, b = dec.joint_cz_decode(clean, clean, [], [])
    assert a.z_rows == b.z_rows == dec.decode_ec(clean).z_rows
    a, b = dec.joint_cz_decode(clean, clean, [(1, 1)], [])
    # qubit (1,1) of block A is damped: row 1 of block B now carries the Z
    assert b.z_rows == [1]


def test_record_json_roundtrip():
    rec = _record([_sc(mz={1: [1, -1, -1], 2: None})], [_sc(flag=-1)], prior={1: P})
    back = dec.SyndromeRecord.from_json(rec.to_json())
    assert back == rec
    with pytest.raises(SchemaError):
        dec.SyndromeRecord.from_json({"n": 2})

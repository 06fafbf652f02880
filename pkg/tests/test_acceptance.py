"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line straight to the terminal, so the
lines survive pytest's output capture.
"""

import time

import numpy as np
import pytest

from adshor.circuit import count_locations, segment_location_count
from adshor.cli import main
from adshor.codes import BaconShorCode
from adshor.gadgets.logical import GadgetKind, build_logical
from adshor.simulator.oracles import (
    check_ideal_correction,
    check_xx_sequences,
    check_meas_x,
    check_noiseless,
    check_p2_cat,
    check_property,
    fit_slope,
    memory_infidelity,
    unencoded_infidelity,
)
from adshor.threshold import (
    REFERENCE_PSEUDOTHRESHOLDS,
    crossings,
    figure_data,
    n_sub,
    n_total,
    optimal_size,
    p_grid,
    pseudothreshold,
    threshold_report,
)

# full branch enumeration is too slow for these; outcome trajectories are sampled
SAMPLED = {
    2: {"teleport-t": 200, "ft-ec-memory": 200, "cz-extended": 200},
    3: {"teleport-s": 50, "teleport-t": 50, "ft-ec-memory": 50, "cz-extended": 50},
}


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


def test_criterion_01_pseudothreshold_table(report, capsys):
    start = time.perf_counter()
    code = main(["threshold"])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    rep = threshold_report()
    ok = code == 0 and rep.all_match() and elapsed < 1.0 and len(out.strip().splitlines()) == 10
    for n, want in REFERENCE_PSEUDOTHRESHOLDS.items():
        ok &= float(f"{pseudothreshold(n - 1):.2e}") == want
    report(1, ok, f"9 pseudothresholds to 3 s.f., runtime {elapsed:.3f} s")


def test_criterion_02_bound_curves(report):
    start = time.perf_counter()
    ps = p_grid(1e-8, 1e-4, 200)
    ns = range(2, 11)
    rows = figure_data(ps, ns)
    cross = crossings(rows)
    elapsed = time.perf_counter() - start
    step = ps[1] / ps[0]
    ok = elapsed < 5.0
    worst_slope = 0.0
    for n in ns:
        pts = [r for r in rows if r["n"] == n]
        slope, _ = fit_slope([r["p"] for r in pts], [r["bound"] for r in pts])
        worst_slope = max(worst_slope, abs(slope - n))
        lo, hi = cross[n]
        ref = REFERENCE_PSEUDOTHRESHOLDS[n]
        ok &= lo <= ref * step and hi >= ref / step
    ok &= worst_slope < 1e-9 and optimal_size(1e-7) == 8
    report(2, ok, f"slopes t+1 (max dev {worst_slope:.1e}), crossings within one grid step, best n at 1e-7 = {optimal_size(1e-7)}, {elapsed:.2f} s")


def test_criterion_03_ideal_ec_corrects_dampings(report):
    start = time.perf_counter()
    results = check_ideal_correction(3, max_errors=2)
    elapsed = time.perf_counter() - start
    worst = max(abs(r.overlap - 1) for r in results)
    ok = len(results) == 45 and worst < 1e-10 and elapsed < 120
    report(3, ok, f"{len(results)} placements, max |overlap-1| = {worst:.1e}, {elapsed:.1f} s")


def test_criterion_04_p1_single_faults(report):
    start = time.perf_counter()
    ft = check_property("P1", "ft-ec", 2)
    ideal = check_property("P1", "ideal-ec", 2)
    elapsed = time.perf_counter() - start
    ok = ft.checked > 0 and not ft.violations and ideal.violations and elapsed < 1800
    report(4, ok, f"ft-ec {len(ft.violations)}/{ft.checked} violations, ideal-ec {len(ideal.violations)}/{ideal.checked}, {elapsed:.1f} s")


def test_criterion_05_xx_error_sequences(report):
    start = time.perf_counter()
    rep = check_xx_sequences(3, max_faults=2)
    elapsed = time.perf_counter() - start
    ok = rep.checked > 0 and rep.ok and elapsed < 600
    report(5, ok, f"{rep.checked} injections, {len(rep.violations)} with DIFF above fault count, {elapsed:.1f} s")


def test_criterion_06_memory_scaling(report):
    start = time.perf_counter()
    p2 = np.logspace(-4, -3, 5)
    est2 = memory_infidelity(2, p2, mode="mc", shots=2000, seed=2024, bias=2.0)
    slope2, _ = fit_slope(p2, est2.value)

    pu = np.logspace(-4, -2, 5)
    coeff = unencoded_infidelity(pu).value / pu

    p3 = np.logspace(-6, -5, 5)
    est3 = memory_infidelity(3, p3, mode="mc", shots=192, seed=2024, bias=45.0)
    slope3, _ = fit_slope(p3, est3.value)
    elapsed = time.perf_counter() - start

    ok = abs(slope2 - 2.0) <= 0.1 and np.all(np.abs(coeff - 1 / 3) <= 0.02) and abs(slope3 - 3.0) <= 0.3
    report(
        6,
        ok,
        f"n=2 slope {slope2:.3f}, unencoded coefficient {coeff.min():.4f}..{coeff.max():.4f}, n=3 slope {slope3:.3f}, {elapsed:.0f} s",
    )


def test_criterion_07_zero_noise_catalog(report):
    bad = []
    count = 0
    for n in (2, 3):
        for kind in GadgetKind:
            entry = check_noiseless(kind.value, n, samples=SAMPLED[n].get(kind.value), seed=1)
            count += 1
            if not entry.ok:
                bad.append(f"{kind.value}@{n}")
    report(7, not bad, f"{count - len(bad)}/{count} gadgets exact" + (f", failing {bad}" if bad else ""))


def test_criterion_08_preparation_and_measurement(report):
    reps = {f"P2 cat n={n}": check_p2_cat(n) for n in (2, 3)}
    reps |= {f"meas-x n={n}": check_meas_x(n) for n in (2, 3)}
    ok = all(r.ok and r.checked > 0 for r in reps.values())
    detail = ", ".join(f"{k}: {len(r.violations)}/{r.checked}" for k, r in reps.items())
    report(8, ok, detail)


def test_criterion_09_joint_cz_decoding(report):
    joint = check_property("P4", "cz-extended", 2)
    alone = check_property("P4", "cz-extended-independent", 2)
    ok = joint.checked > 0 and not joint.violations and bool(alone.violations)
    report(9, ok, f"joint {len(joint.violations)}/{joint.checked} violations, independent {len(alone.violations)}/{alone.checked}")


def test_criterion_10_location_counting(report):
    closed = True
    for t in range(1, 6):
        c = build_logical(BaconShorCode(t + 1), "subcircuit")
        closed &= count_locations(c, "paper-accounting") == n_sub(t)
        for s in c.meta["segments"]:
            want = {"coupling": 2 * t + 1, "damping_round": 3 * (3 * t + 2), "xx": 16 * (t + 1) ** 2 + 4}.get(s["kind"])
            closed &= want is None or segment_location_count(s) == want
    ts = np.arange(4, 41)
    slope, _ = fit_slope(ts, [n_total(int(t)).n_total for t in ts])
    ok = closed and 5.5 <= slope <= 6.5
    report(10, ok, f"closed forms t<=5 {'match' if closed else 'differ'}, N(t) slope over [4,40] = {slope:.3f} (want 5.5..6.5)")

import math
from decimal import Decimal, getcontext

import pytest
from hypothesis import given, strategies as st

from adshor.errors import DomainError
from adshor.threshold import (
    REFERENCE_PSEUDOTHRESHOLDS,
    bound_coefficient,
    crossings,
    figure_data,
    infidelity_bound,
    n_sub,
    n_total,
    optimal_size,
    p_grid,
    pseudothreshold,
    pseudothreshold_bisect,
    threshold_report,
)


def decimal_threshold(t: int, N: int) -> float:
    """(3B)^(-1/t) in 50-digit decimal arithmetic, binomials from falling factorials."""
    getcontext().prec = 50
    k = t + 1
    top = math.prod(range(2 * N + k * k - k + 1, 2 * N + k * k + 1)) // math.factorial(k)
    low = math.prod(range(N - k + 1, N + 1)) // math.factorial(k)
    return float((Decimal(3 * (top - low)).ln() / -t).exp())


@pytest.mark.parametrize("t,want", [(1, 194), (2, 464), (3, 784)])
def test_n_sub(t, want):
    assert n_sub(t) == want


@pytest.mark.parametrize("t,want", [(1, 388), (2, 3252), (4, 28110)])
def test_n_total(t, want):
    assert n_total(t).n_total == want


def test_even_t_idle_term():
    assert n_total(2).n_idle == 78
    assert n_total(4).n_idle == 275


@pytest.mark.parametrize("bad", [0, -1])
def test_domain(bad):
    with pytest.raises(DomainError):
        n_sub(bad)
    with pytest.raises(DomainError):
        n_total(bad)


def test_coefficient_t1():
    assert bound_coefficient(1, 388) == 780 * 779 // 2 - 388 * 387 // 2 == 228732


def test_bound_at_zero():
    assert infidelity_bound(0.0, 1) == 0.0
    with pytest.raises(DomainError):
        infidelity_bound(1.0, 1)


@given(st.integers(1, 6), st.integers(10, 10**6))
def test_coefficient_positive_and_monotone(t, N):
    b = bound_coefficient(t, N)
    assert 0 < b < bound_coefficient(t, N + 1)


@pytest.mark.parametrize("n", range(2, 11))
def test_table_golden(n):
    t = n - 1
    p = pseudothreshold(t)
    assert float(f"{p:.2e}") == REFERENCE_PSEUDOTHRESHOLDS[n]
    assert p == pytest.approx(decimal_threshold(t, n_total(t).n_total), rel=1e-9)
    assert pseudothreshold_bisect(t) == pytest.approx(p, rel=1e-9)


def test_threshold_solves_equation():
    for n in range(2, 11):
        t = n - 1
        p = pseudothreshold(t)
        assert infidelity_bound(p, t) == pytest.approx(p / 3, rel=1e-9)


def test_report_rows():
    report = threshold_report()
    assert report.all_match()
    assert [r.n for r in report.rows] == list(range(2, 11))
    assert all(abs(r.deviation) < 5e-3 for r in report.rows)


def test_curves_are_monomials():
    ps = p_grid(1e-8, 1e-4, 50)
    rows = figure_data(ps, range(2, 11))
    for n in range(2, 11):
        pts = [r for r in rows if r["n"] == n]
        a, b = pts[0], pts[-1]
        slope = math.log(b["bound"] / a["bound"]) / math.log(b["p"] / a["p"])
        assert slope == pytest.approx(n, rel=1e-9)


def test_n2_crossing_brackets_reference():
    ps = p_grid(1e-8, 1e-4, 200)
    lo, hi = crossings(figure_data(ps, [2]))[2]
    step = ps[1] / ps[0]
    assert lo <= 1.46e-6 * step and hi >= 1.46e-6 / step


def test_optimal_size_effect():
    bounds = [infidelity_bound(1e-7, n - 1) for n in range(2, 11)]
    assert bounds[0] > bounds[1] > bounds[2]
    assert optimal_size(1e-7) == 8
    assert optimal_size(1e-6) == 6


def test_grid_validation():
    with pytest.raises(DomainError):
        p_grid(1e-4, 1e-8, 10)

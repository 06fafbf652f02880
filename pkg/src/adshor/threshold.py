"""Location counting, the combinatorial infidelity bound and pseudothresholds.

A memory gadget of ``N`` locations fails only when at least ``t+1`` faults
land in it, so its infidelity is at most ``B p^(t+1)`` with ``B`` a count of
fault sets.  The pseudothreshold is where that bound meets the bare-qubit
infidelity ``alpha p`` with ``alpha = 1/3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError

ALPHA = Fraction(1, 3)

# published lower bounds on the pseudothreshold, by lattice size n
REFERENCE_PSEUDOTHRESHOLDS: dict[int, float] = {
    2: 1.46e-6,
    3: 2.88e-6,
    4: 4.08e-6,
    5: 2.93e-6,
    6: 2.57e-6,
    7: 1.72e-6,
    8: 1.49e-6,
    9: 6.73e-7,
    10: 7.94e-7,
}


def _check_t(t: int) -> None:
    if not isinstance(t, int) or t < 1:
        raise DomainError(f"t must be an integer >= 1, got {t!r}")


def n_sub(t: int) -> int:
    """Locations in one EC subcircuit on two extended rows."""
    _check_t(t)
    return 16 * t * t + 72 * t + 40 + 12 * (2 * t + 1) * ((t + 2) ** 2 // 8) + 6 * (3 * t + 2) * (t // 2 + 1)


def n_idle(t: int) -> int:
    """Idle locations per syndrome round for even t (rows left out of the pairing)."""
    _check_t(t)
    return (t + 1) * (3 * (t + 1) * (t // 2) + 4 * t + 9)


def repetitions(t: int) -> int:
    """Z-syndrome rounds budgeted per EC unit for odd t."""
    return ((t // 2 + 2) ** 2) // 4 + 1


def subcircuits_per_round(t: int) -> int:
    """Odd t: one subcircuit per row pair of the cyclic chain; two rows share one."""
    return 1 if t == 1 else t + 1


@dataclass(frozen=True)
class LocationBudget:
    t: int
    n_sub: int
    n_idle: int
    n_total: int

    @property
    def n(self) -> int:
        return self.t + 1


def n_total(t: int) -> LocationBudget:
    """Locations in the extended memory gadget (two EC units)."""
    _check_t(t)
    sub = n_sub(t)
    if t % 2:
        return LocationBudget(t, sub, 0, repetitions(t) * subcircuits_per_round(t) * sub)
    idle = n_idle(t)
    total = (t // 8 + 2) * (t + 1) * ((t // 2) * sub + idle)
    return LocationBudget(t, sub, idle, total)


def bound_coefficient(t: int, N: int) -> int:
    """Exact count ``C(2N + (t+1)^2, t+1) - C(N, t+1)`` of malignant fault sets."""
    _check_t(t)
    if N < 1:
        raise DomainError(f"location count must be positive, got {N}")
    k = t + 1
    return math.comb(2 * N + k * k, k) - math.comb(N, k)


def _log_int(x: int) -> float:
    shift = max(0, x.bit_length() - 900)
    return math.log(x >> shift) + shift * math.log(2)


def infidelity_bound(p: float, t: int, N: int | None = None) -> float:
    if not 0 <= p < 1:
        raise DomainError(f"p must lie in [0, 1), got {p}")
    N = n_total(t).n_total if N is None else N
    B = bound_coefficient(t, N)
    if p == 0:
        return 0.0
    return math.exp(_log_int(B) + (t + 1) * math.log(p))


def pseudothreshold(t: int, N: int | None = None, alpha: Fraction = ALPHA) -> float:
    """Solve ``B p^(t+1) = alpha p`` in closed form: ``p = (B / alpha)^(-1/t)``."""
    N = n_total(t).n_total if N is None else N
    B = bound_coefficient(t, N)
    ratio = Fraction(B) / alpha
    log_ratio = _log_int(ratio.numerator) - _log_int(ratio.denominator)
    return math.exp(-log_ratio / t)


def pseudothreshold_bisect(
    t: int, N: int | None = None, alpha: Fraction = ALPHA, iterations: int = 200
) -> float:
    """Same crossing found by bisection on ``log p``, without the closed form."""
    N = n_total(t).n_total if N is None else N
    log_b = _log_int(bound_coefficient(t, N))
    log_a = math.log(alpha.numerator) - math.log(alpha.denominator)

    def excess(lp: float) -> float:
        return log_b + (t + 1) * lp - (log_a + lp)

    lo, hi = -700.0, 0.0
    if excess(lo) > 0 or excess(hi) < 0:
        raise DomainError("no crossing in (0, 1)")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    return math.exp(0.5 * (lo + hi))


@dataclass
class ThresholdRow:
    n: int
    N: int
    coefficient: int
    p_th: float
    reference: float | None

    @property
    def deviation(self) -> float | None:
        if self.reference is None:
            return None
        return self.p_th / self.reference - 1

    def matches(self, digits: int = 3) -> bool:
        return self.reference is not None and float(f"{self.p_th:.{digits - 1}e}") == self.reference

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "coefficient": str(self.coefficient),
            "p_th": self.p_th,
            "reference": self.reference,
            "relative_deviation": self.deviation,
            "matches_3sf": self.matches(),
        }


@dataclass
class ThresholdReport:
    rows: list[ThresholdRow] = field(default_factory=list)

    def all_match(self) -> bool:
        return all(r.matches() for r in self.rows if r.reference is not None)

    def to_json(self) -> dict:
        return {"rows": [r.to_json() for r in self.rows], "all_match": self.all_match()}


def threshold_report(n_values: Iterable[int] = range(2, 11)) -> ThresholdReport:
    rows = []
    for n in n_values:
        if n < 2:
            raise DomainError(f"lattice size must be >= 2, got {n}")
        t = n - 1
        N = n_total(t).n_total
        rows.append(ThresholdRow(n, N, bound_coefficient(t, N), pseudothreshold(t, N), REFERENCE_PSEUDOTHRESHOLDS.get(n)))
    return ThresholdReport(rows)


def p_grid(pmin: float, pmax: float, steps: int) -> list[float]:
    """Log-spaced grid with ``steps`` points from ``pmin`` to ``pmax``."""
    if not (0 < pmin < pmax < 1) or steps < 2:
        raise DomainError("grid needs 0 < pmin < pmax < 1 and at least two steps")
    a, b = math.log(pmin), math.log(pmax)
    return [math.exp(a + (b - a) * i / (steps - 1)) for i in range(steps)]


def figure_data(ps: Sequence[float], n_values: Iterable[int]) -> list[dict]:
    """Rows ``(p, n, bound, unencoded)`` for the bound-versus-p curves."""
    rows = []
    for n in n_values:
        t = n - 1
        N = n_total(t).n_total
        for p in ps:
            rows.append({"p": p, "n": n, "bound": infidelity_bound(p, t, N), "unencoded": float(ALPHA) * p})
    return rows


def crossings(rows: Sequence[dict]) -> dict[int, tuple[float, float]]:
    """Per n, the grid interval ``(p_below, p_above)`` where the bound overtakes p/3."""
    by_n: dict[int, list[dict]] = {}
    for r in rows:
        by_n.setdefault(r["n"], []).append(r)
    out = {}
    for n, rs in by_n.items():
        rs = sorted(rs, key=lambda r: r["p"])
        for lo, hi in zip(rs, rs[1:]):
            if lo["bound"] <= lo["unencoded"] and hi["bound"] > hi["unencoded"]:
                out[n] = (lo["p"], hi["p"])
                break
    return out


def optimal_size(p: float, n_values: Iterable[int] = range(2, 11)) -> int:
    """Lattice size with the smallest bound at noise strength ``p``."""
    return min(n_values, key=lambda n: infidelity_bound(p, n - 1))

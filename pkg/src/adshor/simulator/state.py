"""Sparse pure states over a handful of qubit slots.

A state is a pair ``(keys, amps)``: ``keys`` is a uint64 array of computational
basis states (bit ``k`` is slot ``k``) and ``amps`` a complex array of shape
``(len(keys), P)``, one column per damping strength being simulated
simultaneously.  Amplitudes are never renormalized, so the squared norm of a
column is the probability of the trajectory that produced it.
"""

from __future__ import annotations

import numpy as np

SQRT_HALF = 1.0 / np.sqrt(2.0)
_T_PHASE = np.exp(1j * np.pi / 4)
_PRUNE = 1e-13

U64 = np.uint64


def empty(p_columns: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros(0, dtype=U64), np.zeros((0, p_columns), dtype=complex)


def has_bit(keys: np.ndarray, mask: int) -> np.ndarray:
    return (keys & U64(mask)) != 0


def x(keys, amps, m):
    return keys ^ U64(m), amps


def cnot(keys, amps, mc, mt):
    hit = has_bit(keys, mc)
    out = keys.copy()
    out[hit] ^= U64(mt)
    return out, amps


def phase_where(keys, amps, mask, factor):
    hit = (keys & U64(mask)) == U64(mask)
    if hit.any():
        amps = amps.copy()
        amps[hit] *= factor
    return keys, amps


def z(keys, amps, m):
    return phase_where(keys, amps, m, -1.0)


def s(keys, amps, m):
    return phase_where(keys, amps, m, 1j)


def t(keys, amps, m):
    return phase_where(keys, amps, m, _T_PHASE)


def cz(keys, amps, ma, mb):
    return phase_where(keys, amps, ma | mb, -1.0)


def ccz(keys, amps, ma, mb, mc):
    return phase_where(keys, amps, ma | mb | mc, -1.0)


def prep_plus(keys, amps, m):
    return np.concatenate([keys, keys | U64(m)]), np.concatenate([amps, amps]) * SQRT_HALF


def prune(keys, amps):
    if len(keys) == 0:
        return keys, amps
    mag = np.abs(amps).max(axis=1)
    top = mag.max()
    if top == 0:
        return keys[:0], amps[:0]
    keep = mag > _PRUNE * top
    if keep.all():
        return keys, amps
    return keys[keep], amps[keep]


def measure_z(keys, amps, m):
    """Both outcomes: ``[(+1, keys, amps), (-1, keys, amps)]`` with the slot cleared."""
    hit = has_bit(keys, m)
    out = []
    lo = ~hit
    if lo.any():
        out.append((1, keys[lo], amps[lo]))
    if hit.any():
        out.append((-1, keys[hit] & ~U64(m), amps[hit]))
    return out


def _combine(keys, amps, m, matrix):
    """Apply a 2x2 matrix on slot ``m``; returns (keys, amps) with merged duplicates."""
    bit = has_bit(keys, m)
    base = keys & ~U64(m)
    (a, b), (c, d) = matrix
    # contributions to output bit 0 and bit 1
    w0 = np.where(bit, b, a)[:, None] * amps
    w1 = np.where(bit, d, c)[:, None] * amps
    allk = np.concatenate([base, base | U64(m)])
    alla = np.concatenate([w0, w1])
    uniq, inv = np.unique(allk, return_inverse=True)
    acc = np.zeros((len(uniq), amps.shape[1]), dtype=complex)
    np.add.at(acc, inv, alla)
    return prune(uniq, acc)


def apply_matrix(keys, amps, m, matrix):
    return _combine(keys, amps, m, np.asarray(matrix, dtype=complex))


def measure_x(keys, amps, m):
    """Both X outcomes, each projected and with the slot cleared."""
    bit = has_bit(keys, m)
    base = keys & ~U64(m)
    uniq, inv = np.unique(base, return_inverse=True)
    out = []
    for outcome, sign in ((1, 1.0), (-1, -1.0)):
        acc = np.zeros((len(uniq), amps.shape[1]), dtype=complex)
        np.add.at(acc, inv, np.where(bit, sign, 1.0)[:, None] * amps * SQRT_HALF)
        k, a = prune(uniq, acc)
        if len(k):
            out.append((outcome, k, a))
    return out


def norms(amps) -> np.ndarray:
    return np.einsum("ij,ij->j", amps.real, amps.real) + np.einsum("ij,ij->j", amps.imag, amps.imag)


def popcount(keys: np.ndarray, mask: int) -> np.ndarray:
    return np.bitwise_count(keys & U64(mask)).astype(np.int64)


def damp_jump(keys, amps, mask, sqrt_p):
    """Apply E1 on every slot in ``mask`` (all of them jump)."""
    sel = (keys & U64(mask)) == U64(mask)
    if not sel.any():
        return keys[:0], amps[:0]
    k = bin(mask).count("1")
    return keys[sel] & ~U64(mask), amps[sel] * (sqrt_p**k)[None, :]


def damp_nojump(keys, amps, mask, powers):
    """Apply E0 on every slot in ``mask``; ``powers[k]`` = sqrt(1-p)**k per column."""
    if mask == 0 or len(keys) == 0:
        return keys, amps
    c = popcount(keys, mask)
    if not c.any():
        return keys, amps
    return keys, amps * powers[c]

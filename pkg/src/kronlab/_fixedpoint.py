"""Exact fixed-point arithmetic and the vectorized residual kernel.

A real number is stored as ``round(value * 2**bits)``, a plain Python int,
so multiplying by an integer q and reducing mod 1 are exact operations on
integers. The hot loops (window scans over millions of q) cannot afford
per-element bigint work, so they run on the top 128 bits of the stored
value: four uint64 limb multiplications per coordinate, carried mod 2**128
in numpy. Within a chunk the index offsets stay below 2**20, every partial
product fits a uint64 with room to spare, and the result is exact, which
is what makes chunked scans independent of the chunk size.

Truncating a step to 128 bits costs less than q * 2**-128 per evaluation;
at the largest bound the precision guard admits this is far below the
2**-32 the reported residuals are trusted to.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

KERNEL_BITS = 128
_MOD = 1 << KERNEL_BITS
_M32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
CHUNK = 1 << 19

_GRID = 1 << 53
_GRID_F = float(_GRID)


def to_scaled(value, bits: int) -> int:
    """Nearest multiple of 2**-bits, as the integer round(value * 2**bits).

    Accepts anything Fraction accepts (float, int, Fraction, decimal text).
    Exact: Fraction.__round__ is round-half-even on exact rationals.
    """
    return round(Fraction(value) * (1 << bits))


def round_shift(v: int, s: int) -> int:
    """round(v / 2**s) with ties to even, for nonnegative v."""
    if s <= 0:
        return v << -s
    q, r = v >> s, v & ((1 << s) - 1)
    half = 1 << (s - 1)
    if r > half or (r == half and (q & 1)):
        q += 1
    return q


def frac_to_unit_float(v: int, bits: int) -> float:
    """Map a scaled fraction v (0 <= v < 2**bits) onto the 2**-53 grid in [0, 1).

    Rounding onto a fixed grid rather than to nearest float keeps the
    result sign-symmetric: v and 2**bits - v land on k/2**53 and
    (2**53 - k)/2**53, both exactly representable.
    """
    k = round_shift(v, bits - 53) & (_GRID - 1)
    return k / _GRID_F


def dist_to_float(v: int, bits: int) -> float:
    """Distance of the scaled fraction v to the nearest integer, in [0, 1/2]."""
    v %= 1 << bits
    k = round_shift(v, bits - 53) % _GRID
    return min(k, _GRID - k) / _GRID_F


def eps_to_u64(eps: float) -> int:
    """Threshold eps as a count of 2**-64 units (nearest)."""
    u = round(Fraction(eps) * (1 << 64))
    return min(max(u, 0), (1 << 64) - 1)


def step128(scaled: int, bits: int) -> int:
    """Top 128 bits of a scaled value, as a step per unit q (mod 2**128)."""
    if bits <= KERNEL_BITS:
        return (scaled << (KERNEL_BITS - bits)) % _MOD
    return (scaled >> (bits - KERNEL_BITS)) % _MOD


def offset128(value, bits: int = KERNEL_BITS) -> int:
    """A target coordinate as a 128-bit fixed-point offset."""
    return to_scaled(value, KERNEL_BITS) % _MOD


def _limbs(v: int) -> tuple[np.uint64, np.uint64, np.uint64, np.uint64]:
    return (
        np.uint64(v & 0xFFFFFFFF),
        np.uint64((v >> 32) & 0xFFFFFFFF),
        np.uint64((v >> 64) & 0xFFFFFFFF),
        np.uint64((v >> 96) & 0xFFFFFFFF),
    )


class ResidualKernel:
    """Vectorized sup-norm torus residuals of q*omega - theta.

    steps and offsets are 128-bit fixed-point integers, one per coordinate.
    residuals() returns uint64 distances in units of 2**-64: the true
    kernel distance is dist/2**64 up to the 128-bit truncation above.
    """

    def __init__(self, steps: list[int], offsets: list[int] | None = None):
        if not steps:
            raise ValueError("kernel needs at least one coordinate")
        self.steps = [int(s) % _MOD for s in steps]
        if offsets is None:
            offsets = [0] * len(steps)
        if len(offsets) != len(steps):
            raise ValueError("steps/offsets length mismatch")
        self.offsets = [int(t) % _MOD for t in offsets]

    def _coord_dists(self, step: int, anchor: int, idx: np.ndarray) -> np.ndarray:
        # 32-bit limb school multiplication, carried mod 2**128; only the
        # top 64 bits survive into the distance. idx < 2**30 keeps every
        # partial sum below 2**63.
        v0, v1, v2, v3 = _limbs(step)
        a0, a1, a2, a3 = _limbs(anchor)
        s = idx * v0 + a0
        c = s >> _SHIFT32
        s = idx * v1 + a1 + c
        c = s >> _SHIFT32
        s = idx * v2 + a2 + c
        c = s >> _SHIFT32
        hi = s & _M32
        s = idx * v3 + a3 + c
        hi |= (s & _M32) << _SHIFT32
        return np.minimum(hi, np.uint64(0) - hi)

    def residuals(self, start: int, n: int) -> np.ndarray:
        """uint64 residual array for q = start, start+1, ..., start+n-1."""
        if n <= 0:
            return np.zeros(0, dtype=np.uint64)
        if n >= (1 << 30):
            raise ValueError("single residual block limited to 2**30 entries; use chunks()")
        idx = np.arange(n, dtype=np.uint64)
        out = None
        for step, off in zip(self.steps, self.offsets):
            anchor = (step * start - off) % _MOD
            d = self._coord_dists(step, anchor, idx)
            out = d if out is None else np.maximum(out, d, out=out)
        return out

    def chunks(self, lo: int, hi: int):
        """Yield (start, residual_array) covering q in [lo, hi] inclusive."""
        q = lo
        while q <= hi:
            n = min(CHUNK, hi - q + 1)
            yield q, self.residuals(q, n)
            q += n

    def residuals_at(self, qs: np.ndarray) -> np.ndarray:
        """Residuals for an arbitrary array of nonnegative multipliers.

        The limb products need qs < 2**30 to stay inside uint64; larger
        multipliers should go through residuals()/chunks with a start
        offset instead.
        """
        qs = np.asarray(qs)
        if qs.size == 0:
            return np.zeros(0, dtype=np.uint64)
        if qs.min() < 0 or qs.max() >= (1 << 30):
            raise ValueError("residuals_at needs multipliers in [0, 2**30)")
        idx = qs.astype(np.uint64)
        out = None
        for step, off in zip(self.steps, self.offsets):
            anchor = (-off) % _MOD
            d = self._coord_dists(step, anchor, idx)
            out = d if out is None else np.maximum(out, d, out=out)
        return out


def solutions_in(kernel: ResidualKernel, lo: int, hi: int, eps_u64: int) -> np.ndarray:
    """All q in [lo, hi] with residual <= eps, ascending int64 array."""
    thr = np.uint64(eps_u64)
    found = []
    for start, res in kernel.chunks(lo, hi):
        pos = np.nonzero(res <= thr)[0]
        if len(pos):
            found.append(pos.astype(np.int64) + start)
    if not found:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(found)


def first_solution(kernel: ResidualKernel, lo: int, hi: int, eps_u64: int) -> int | None:
    thr = np.uint64(eps_u64)
    for start, res in kernel.chunks(lo, hi):
        pos = np.nonzero(res <= thr)[0]
        if len(pos):
            return start + int(pos[0])
    return None


def argmin_in(kernel: ResidualKernel, lo: int, hi: int) -> tuple[int, int]:
    """(q, dist_u64) minimizing the residual on [lo, hi]; earliest q wins ties."""
    best_q, best_d = lo, 1 << 64
    for start, res in kernel.chunks(lo, hi):
        i = int(np.argmin(res))
        d = int(res[i])
        if d < best_d:
            best_q, best_d = start + i, d
    return best_q, best_d


def argmin_prefixes(kernel: ResidualKernel, lo: int, checkpoints: list[int]) -> list[tuple[int, int]]:
    """Running argmin over [lo, c] for each checkpoint c (sorted ascending).

    One pass over [lo, max(checkpoints)]; equivalent to argmin_in per
    checkpoint but without rescanning shared prefixes.
    """
    out = []
    best_q, best_d = lo, 1 << 64
    prev = lo
    for c in checkpoints:
        if c >= prev:
            q, d = argmin_in(kernel, prev, c)
            if d < best_d:
                best_q, best_d = q, d
            prev = c + 1
        out.append((best_q, best_d))
    return out


def record_lows(kernel: ResidualKernel, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Strict record lows of the residual over [lo, hi].

    Returns (q values, uint64 dists); the first point is always a record.
    """
    qs, ds = [], []
    best = np.uint64(0xFFFFFFFFFFFFFFFF)
    for start, res in kernel.chunks(lo, hi):
        run = np.minimum.accumulate(res)
        prior = np.empty_like(run)
        prior[0] = best
        np.minimum(run[:-1], best, out=prior[1:])
        mask = res < prior
        pos = np.nonzero(mask)[0]
        if len(pos):
            qs.append(pos.astype(np.int64) + start)
            ds.append(res[pos])
        best = min(best, run[-1])
    if not qs:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint64)
    return np.concatenate(qs), np.concatenate(ds)

"""Solvers and scanners for torus approximation systems.

The scalar problem asks which integers q put q*omega within eps of a
target point, coordinatewise on the torus. This module enumerates those
solutions over windows (gap_scan), measures the largest hole between
them (inclusion_length_ladder), builds near-solutions additively from a
denominator ladder (greedy_almost_period), and generalizes the scan to
integer vectors against an m x n frequency matrix, including the
augmented form whose first block pins real solutions to integers.

Everything reduces residual evaluation to the fixed-point kernel, so a
scan's answer depends only on the stored frequency integers, never on
accumulated float error.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _fixedpoint as fx
from .approx import ConvergentSequence, _kernel_for
from .errors import (
    BudgetExceededError,
    PrecisionBudgetError,
    WindowTooNarrowError,
)
from .torus import (
    DEFAULT_BITS,
    FrequencyTuple,
    PrecisionReal,
    TorusPoint,
    frac_mult,
    frac_to_unit_float,
    torus_norm,
)


@dataclass(frozen=True)
class KroneckerInstance:
    """One system |freq * q - target| <= epsilon, coordinatewise mod 1."""

    frequency: FrequencyTuple
    target: TorusPoint
    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 0.5):
            raise ValueError(
                f"epsilon={self.epsilon} outside (0, 1/2]; at 1/2 every "
                f"integer already solves, beyond it nothing is asked"
            )
        if len(self.target) != len(self.frequency):
            raise ValueError(
                f"target dimension {len(self.target)} != frequency "
                f"dimension {len(self.frequency)}"
            )

    @classmethod
    def homogeneous(cls, freq: FrequencyTuple, epsilon: float) -> "KroneckerInstance":
        return cls(freq, TorusPoint([0.0] * len(freq)), epsilon)


def _guard_window(freq: FrequencyTuple, a: int, b: int):
    if a > b:
        raise ValueError(f"empty window [{a}, {b}]")
    if max(abs(a), abs(b)) > freq.q_max:
        raise PrecisionBudgetError(
            f"window [{a}, {b}] exceeds the declared q_max={freq.q_max}"
        )


def solve_in_interval(inst: KroneckerInstance, a: int, b: int) -> int | None:
    """Smallest integer q in [a, b] solving the instance, or None."""
    a, b = int(a), int(b)
    _guard_window(inst.frequency, a, b)
    if inst.epsilon >= 0.5:
        return a
    kernel = _kernel_for(inst.frequency, inst.target)
    q = fx.first_solution(kernel, a, b, fx.eps_to_u64(inst.epsilon))
    return None if q is None else int(q)


@dataclass(frozen=True)
class GapScan:
    """Complete solution set of an instance over one window.

    l_hat is the largest gap between consecutive solutions, the window
    estimate of the inclusion length. truncated warns that an edge gap
    (before the first or after the last solution) exceeds l_hat, so a
    larger hole may lie just outside the window.
    """

    instance: KroneckerInstance
    window: tuple[int, int]
    solutions: np.ndarray
    gaps: np.ndarray
    l_hat: int
    truncated: bool


def gap_scan(inst: KroneckerInstance, a: int, b: int) -> GapScan:
    a, b = int(a), int(b)
    _guard_window(inst.frequency, a, b)
    if inst.epsilon >= 0.5:
        sols = np.arange(a, b + 1, dtype=np.int64)
    else:
        kernel = _kernel_for(inst.frequency, inst.target)
        sols = fx.solutions_in(kernel, a, b, fx.eps_to_u64(inst.epsilon))
    if len(sols) < 2:
        raise WindowTooNarrowError(
            f"window [{a}, {b}] holds {len(sols)} solution(s) at "
            f"epsilon={inst.epsilon}; widen the window to measure a gap",
            found=len(sols),
        )
    gaps = np.diff(sols)
    l_hat = int(gaps.max())
    truncated = (int(sols[0]) - a) > l_hat or (b - int(sols[-1])) > l_hat
    return GapScan(
        instance=inst,
        window=(a, b),
        solutions=sols,
        gaps=gaps,
        l_hat=l_hat,
        truncated=truncated,
    )


@dataclass(frozen=True)
class WindowPolicy:
    """How inclusion_length_ladder sizes and grows its scan windows.

    The seed covers the expected gap scale eps^-m with a 50x margin;
    doubling continues until the scan is untruncated or the budget is
    reached.
    """

    seed_min: int = 10_000
    seed_factor: float = 50.0
    budget: int = 100_000_000

    def seed(self, epsilon: float, m: int) -> int:
        return max(self.seed_min, math.ceil(self.seed_factor * (1.0 / epsilon) ** m))


@dataclass(frozen=True)
class LadderRow:
    epsilon: float
    l_hat: int
    window: tuple[int, int]
    truncated: bool
    scan: GapScan | None


def inclusion_length_ladder(freq: FrequencyTuple, target: TorusPoint,
                            epsilons, policy: WindowPolicy | None = None) -> list[LadderRow]:
    """Measure l_hat at each epsilon, growing windows until clean.

    Rows are emitted for every epsilon, in order. A row whose window hit
    the budget while still truncated keeps its flag set (and l_hat = 0 if
    not even two solutions were found); nothing is dropped silently.
    """
    if policy is None:
        policy = WindowPolicy()
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("empty epsilon ladder")
    for e in eps_list:
        if not (0.0 < e <= 0.5):
            raise ValueError(f"epsilon={e} outside (0, 1/2]")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilon ladder must be strictly decreasing")

    m = len(freq)
    budget = min(policy.budget, freq.q_max)
    rows = []
    for eps in eps_list:
        inst = KroneckerInstance(freq, target, eps)
        hi = min(policy.seed(eps, m), budget)
        scan = None
        while True:
            try:
                scan = gap_scan(inst, 0, hi)
            except WindowTooNarrowError:
                scan = None
            if scan is not None and not scan.truncated:
                break
            if hi >= budget:
                break
            hi = min(2 * hi, budget)
        if scan is None:
            rows.append(LadderRow(eps, 0, (0, hi), True, None))
        else:
            rows.append(LadderRow(eps, scan.l_hat, scan.window, scan.truncated, scan))
    return rows


def _achieved_differences(solutions: np.ndarray) -> np.ndarray:
    """Distinct positive pairwise differences of a sorted solution array."""
    s = np.asarray(solutions, dtype=np.int64)
    if len(s) * len(s) <= 4_000_000:
        d = np.unique((s[None, :] - s[:, None]).ravel())
        return d[d > 0]
    # indicator autocorrelation; counts are small integers so the FFT
    # round-trip identifies the support exactly
    base = s - s[0]
    width = int(base[-1]) + 1
    ind = np.zeros(width)
    ind[base] = 1.0
    size = 1 << (2 * width - 1).bit_length()
    f = np.fft.rfft(ind, size)
    corr = np.fft.irfft(f * np.conj(f), size)[:width]
    support = np.nonzero(np.rint(corr) > 0)[0].astype(np.int64)
    return support[support > 0]


def max_pair_residual(scan: GapScan) -> float:
    """Worst homogeneous residual over differences of scan solutions.

    Any two solutions are each within eps of the target, so their
    difference is a 2*eps almost period; this computes the observed
    maximum for checking that bound.
    """
    diffs = _achieved_differences(scan.solutions)
    if len(diffs) == 0:
        return 0.0
    kernel = _kernel_for(scan.instance.frequency)
    worst_q, worst_u = int(diffs[0]), -1
    for i in range(0, len(diffs), fx.CHUNK):
        block = diffs[i:i + fx.CHUNK]
        res = kernel.residuals_at(block)
        j = int(np.argmax(res))
        if int(res[j]) > worst_u:
            worst_u, worst_q = int(res[j]), int(block[j])
    return torus_norm(frac_mult(scan.instance.frequency, worst_q))


@dataclass(frozen=True)
class AlmostPeriod:
    """Greedy integer near-hit of a real target, built from ladder levels.

    coefficients[i] is the multiplicity of denominator q_{k0+i} in |tau|;
    the expansion satisfies sum(p * q) = |tau| exactly and |tau - target|
    < q_{k0}. Negative targets mirror the positive construction.
    """

    tau: int
    coefficients: tuple[int, ...]
    k0: int
    top_level: int
    target: float
    residual: float


def greedy_almost_period(seq: ConvergentSequence, target, k0: int) -> AlmostPeriod:
    dens = seq.denominators
    if not 1 <= k0 <= len(dens):
        raise ValueError(f"k0={k0} out of range 1..{len(dens)}")
    goal = Fraction(target)
    sign = -1 if goal < 0 else 1
    mag = abs(goal)
    q_floor = dens[k0 - 1]
    if mag < q_floor:
        return AlmostPeriod(
            tau=0, coefficients=(), k0=k0, top_level=k0 - 1,
            target=float(target),
            residual=0.0,
        )
    top = len(dens)
    while dens[top - 1] > mag:
        top -= 1
    total = 0
    reversed_coeffs = []
    for k in range(top, k0 - 1, -1):
        q = dens[k - 1]
        p = int((mag - total) // q)
        reversed_coeffs.append(p)
        total += p * q
    tau = sign * total
    return AlmostPeriod(
        tau=tau,
        coefficients=tuple(reversed(reversed_coeffs)),
        k0=k0,
        top_level=top,
        target=float(target),
        residual=torus_norm(frac_mult(seq.frequency, tau)),
    )


@dataclass(frozen=True)
class QualityEntry:
    target: float
    tau: int
    residual: float
    reeval_residual: float


@dataclass(frozen=True)
class QualityRecord:
    """Residual quality of greedy periods at one base level k0.

    c2_hat scales the worst residual by q_{k0}^eta / k0, the shape of
    the theoretical ceiling, so sequences and levels can be compared.
    Each residual is re-derived through an independent float path
    (summing the per-level torus points with their multiplicities);
    max_reeval_gap records the worst disagreement.
    """

    k0: int
    nu: float
    eta: float
    entries: tuple[QualityEntry, ...]
    max_residual: float
    c2_hat: float
    max_reeval_gap: float
    consistent: bool


def almost_period_quality(seq: ConvergentSequence, k0: int, sample_targets,
                          nu: float = 0.0) -> QualityRecord:
    if not 1 <= k0 <= len(seq.denominators):
        raise ValueError(f"k0={k0} out of range 1..{len(seq.denominators)}")
    m = len(seq.frequency)
    eta = (1.0 - nu * (m - 1)) / m
    if eta <= 0:
        raise ValueError(
            f"nu={nu} gives a nonpositive exponent eta at m={m}; the "
            f"quality scale needs nu*(m-1) < 1"
        )
    level_points = {
        k: frac_mult(seq.frequency, seq.denominators[k - 1])
        for k in range(k0, len(seq.denominators) + 1)
    }
    entries = []
    worst_gap = 0.0
    for target in sample_targets:
        ap = greedy_almost_period(seq, target, k0)
        coords = []
        for j in range(m):
            acc = math.fsum(
                p * level_points[k0 + i][j] for i, p in enumerate(ap.coefficients)
            )
            coords.append(acc % 1.0)
        reeval = torus_norm(coords)
        entries.append(QualityEntry(
            target=float(target), tau=ap.tau,
            residual=ap.residual, reeval_residual=reeval,
        ))
        worst_gap = max(worst_gap, abs(ap.residual - reeval))
    max_residual = max(e.residual for e in entries) if entries else 0.0
    q_floor = seq.denominators[k0 - 1]
    c2_hat = max_residual * q_floor ** eta / k0
    return QualityRecord(
        k0=k0,
        nu=nu,
        eta=eta,
        entries=tuple(entries),
        max_residual=max_residual,
        c2_hat=c2_hat,
        max_reeval_gap=worst_gap,
        consistent=worst_gap <= 2.0 ** -32,
    )


class FrequencyMatrix:
    """m x n matrix of frozen reals mapping integer vectors to the torus.

    Rows share one precision budget exactly like a FrequencyTuple; q_max
    bounds each coordinate of the integer vectors the matrix may be
    applied to.
    """

    def __init__(self, rows, q_max: int | None = None):
        rows = tuple(tuple(r) for r in rows)
        if not rows or not rows[0]:
            raise ValueError("matrix needs at least one row and one column")
        n = len(rows[0])
        if any(len(r) != n for r in rows):
            raise ValueError("ragged matrix rows")
        bits = rows[0][0].bits
        for r in rows:
            for c in r:
                if c.bits != bits:
                    raise ValueError("all entries must share the same precision")
        if q_max is None:
            q_max = 1 << (bits - 32)
        if q_max > (1 << (bits - 32)):
            raise PrecisionBudgetError(
                f"q_max={q_max} needs more than bits={bits} of precision"
            )
        self.rows = rows
        self.m = len(rows)
        self.n = n
        self.bits = bits
        self.q_max = q_max

    @classmethod
    def parse(cls, text: str, bits: int = DEFAULT_BITS,
              q_max: int | None = None) -> "FrequencyMatrix":
        """Rows separated by ';', entries by ',': e.g. "1,0;0,sqrt(2)"."""
        rows = [
            [PrecisionReal.parse(entry.strip(), bits) for entry in row.split(",")]
            for row in text.split(";")
        ]
        return cls(rows, q_max=q_max)

    def descriptors(self) -> str:
        return ";".join(",".join(c.descriptor for c in row) for row in self.rows)

    def apply(self, vector) -> TorusPoint:
        """Exact image of an integer vector on the torus."""
        vector = [int(v) for v in vector]
        if len(vector) != self.n:
            raise ValueError(f"vector length {len(vector)} != n={self.n}")
        if any(abs(v) > self.q_max for v in vector):
            raise PrecisionBudgetError("vector coordinate exceeds q_max budget")
        unit = 1 << self.bits
        coords = []
        for row in self.rows:
            v = sum(c.scaled * q for c, q in zip(row, vector)) % unit
            coords.append(frac_to_unit_float(v, self.bits))
        return TorusPoint(coords)

    def __repr__(self) -> str:
        return f"FrequencyMatrix({self.descriptors()!r}, bits={self.bits})"


@dataclass(frozen=True)
class ExtendedSystem:
    """The augmented matrix with an identity block stacked on top.

    Real vectors t solving the augmented system must have every |t_i|
    within eps of an integer (the identity rows say so), which is what
    ties the continuous problem back to the integer one.
    """

    a_hat: FrequencyMatrix
    theta_hat: TorusPoint


def build_extended(matrix: FrequencyMatrix, target: TorusPoint) -> ExtendedSystem:
    if len(target) != matrix.m:
        raise ValueError(
            f"target dimension {len(target)} != matrix rows {matrix.m}"
        )
    bits = matrix.bits
    one = PrecisionReal.from_value(1, bits, descriptor="1")
    zero = PrecisionReal.from_value(0, bits, descriptor="0")
    identity = [
        tuple(one if i == j else zero for i in range(matrix.n))
        for j in range(matrix.n)
    ]
    a_hat = FrequencyMatrix(identity + list(matrix.rows), q_max=matrix.q_max)
    theta_hat = TorusPoint((0.0,) * matrix.n + tuple(target))
    return ExtendedSystem(a_hat=a_hat, theta_hat=theta_hat)


def matrix_solution_scan(matrix: FrequencyMatrix, target: TorusPoint, epsilon: float,
                         box, budget: int = 10_000_000) -> list[tuple[int, ...]]:
    """All integer vectors q in the box with |matrix*q - target| <= epsilon.

    The box is one (lo, hi) pair per column. Output is sorted
    lexicographically. Work scales with the box volume; the last axis is
    vectorized through the kernel, the others are enumerated.
    """
    if not (0.0 < epsilon <= 0.5):
        raise ValueError(f"epsilon={epsilon} outside (0, 1/2]")
    if len(target) != matrix.m:
        raise ValueError(f"target dimension {len(target)} != m={matrix.m}")
    box = [(int(lo), int(hi)) for lo, hi in box]
    if len(box) != matrix.n:
        raise ValueError(f"box has {len(box)} axes for n={matrix.n} columns")
    volume = 1
    for lo, hi in box:
        if lo > hi:
            raise ValueError(f"empty box axis [{lo}, {hi}]")
        if max(abs(lo), abs(hi)) > matrix.q_max:
            raise PrecisionBudgetError("box exceeds the q_max budget")
        volume *= hi - lo + 1
    if volume > budget:
        raise BudgetExceededError(
            f"box volume {volume} exceeds the scan budget {budget}"
        )

    unit = 1 << matrix.bits
    last_lo, last_hi = box[-1]
    steps = [fx.step128(row[-1].scaled, matrix.bits) for row in matrix.rows]
    theta_off = [fx.offset128(x) for x in target]
    eps_u64 = fx.eps_to_u64(epsilon)
    out: list[tuple[int, ...]] = []
    prefix_axes = [range(lo, hi + 1) for lo, hi in box[:-1]]
    for prefix in itertools.product(*prefix_axes):
        if epsilon >= 0.5:
            hits = np.arange(last_lo, last_hi + 1, dtype=np.int64)
        else:
            offsets = []
            for j, row in enumerate(matrix.rows):
                pref = sum(row[i].scaled * prefix[i] for i in range(matrix.n - 1)) % unit
                offsets.append((theta_off[j] - fx.step128(pref, matrix.bits)) % (1 << 128))
            kernel = fx.ResidualKernel(steps, offsets)
            hits = fx.solutions_in(kernel, last_lo, last_hi, eps_u64)
        out.extend(prefix + (int(q),) for q in hits)
    return out


GOLDEN_CONJUGATE_STEP = 0.6180339887498949


def orbit_sample(matrix: FrequencyMatrix, lattice: str, count: int,
                 step: float | None = None) -> list[TorusPoint]:
    """Deterministic sample of the matrix image on the torus.

    lattice="integer" walks integer vectors row-major over the smallest
    cube [0, side)^n holding `count` points. lattice="real" walks the
    same index cube scaled by `step`; the default step is the golden
    conjugate, whose multiples equidistribute instead of collapsing onto
    a finite set the way a rational spacing would.
    """
    if lattice not in ("integer", "real"):
        raise ValueError(f"lattice must be 'integer' or 'real', got {lattice!r}")
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    n = matrix.n
    side = max(1, round(count ** (1.0 / n)))
    while side ** n < count:
        side += 1
    while side > 1 and (side - 1) ** n >= count:
        side -= 1
    if lattice == "integer" and side - 1 > matrix.q_max:
        raise PrecisionBudgetError("sample cube exceeds the q_max budget")

    unit = 1 << matrix.bits
    points = []
    if lattice == "integer":
        scaled_rows = [[c.scaled for c in row] for row in matrix.rows]
        for vec in itertools.product(range(side), repeat=n):
            coords = [
                frac_to_unit_float(
                    sum(s * v for s, v in zip(row, vec)) % unit, matrix.bits
                )
                for row in scaled_rows
            ]
            points.append(TorusPoint(coords))
            if len(points) == count:
                break
    else:
        if step is None:
            step = GOLDEN_CONJUGATE_STEP
        st = fx.to_scaled(step, matrix.bits)
        unit2 = 1 << (2 * matrix.bits)
        scaled_rows = [[c.scaled * st for c in row] for row in matrix.rows]
        for vec in itertools.product(range(side), repeat=n):
            coords = [
                frac_to_unit_float(
                    sum(s * v for s, v in zip(row, vec)) % unit2, 2 * matrix.bits
                )
                for row in scaled_rows
            ]
            points.append(TorusPoint(coords))
            if len(points) == count:
                break
    return points

"""Dimension estimation: box counts, log-log slopes, and bound formulas.

The empirical side is deliberately plain. A box count answers "how many
dyadic grid cells does the sample touch" per scale; a fit answers "what
power law explains those counts", with extremal two-point slopes kept
alongside the least-squares value so the caller sees how far the curve
is from an actual power law. The theoretical side evaluates the closed
bound formulas the empirical slopes are compared against.

Finite samples flatten every count curve eventually: once N approaches
the number of distinct sample points (or the finest grid's capacity)
the remaining scales measure the sample, not the set. Those scales are
excluded from fits, never from the reported curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundUndefinedError, InsufficientDataError

SATURATION = 0.98


@dataclass(frozen=True)
class BoxCountCurve:
    """Occupied dyadic cell counts of one point sample, coarse to fine."""

    scales: tuple[float, ...]
    counts: tuple[int, ...]
    points_used: int
    ambient_dim: int


@dataclass(frozen=True)
class DimensionEstimate:
    """A fitted log-log slope with its spread and the data that made it.

    slope is the least-squares value; slope_lower/slope_upper are the
    extremal slopes between consecutive sample pairs, bracketing how
    non-power-law the data is. samples holds the (scale, value) pairs
    fitted, excluded the pairs dropped as saturated.
    """

    slope: float
    slope_lower: float
    slope_upper: float
    fit_residual: float
    samples: tuple[tuple[float, float], ...]
    excluded: tuple[tuple[float, float], ...] = ()


def _check_dyadic(scale: float) -> float:
    j = -math.log2(scale)
    if scale > 0.5 or abs(j - round(j)) > 1e-12:
        raise ValueError(f"scale {scale} is not a dyadic fraction <= 1/2")
    return float(scale)


def box_count(points, scales) -> BoxCountCurve:
    """Count occupied grid cells of side eps for each dyadic eps.

    Cells wrap nothing explicitly: coordinates already live in [0, 1)
    and the dyadic grid tiles the torus exactly, so cell index floor(x / eps)
    is both the Euclidean and the torus assignment.
    """
    arr = np.asarray(list(points), dtype=float)
    if arr.size == 0:
        raise ValueError("empty point set")
    if arr.ndim == 1:
        arr = arr[:, None]
    eps_list = sorted({_check_dyadic(e) for e in scales}, reverse=True)
    if not eps_list:
        raise ValueError("no scales given")
    counts = []
    for eps in eps_list:
        per_axis = int(round(1.0 / eps))
        cells = np.floor(arr * per_axis).astype(np.int64)
        counts.append(len(np.unique(cells, axis=0)))
    distinct = len(np.unique(arr, axis=0))
    return BoxCountCurve(
        scales=tuple(eps_list),
        counts=tuple(counts),
        points_used=distinct,
        ambient_dim=arr.shape[1],
    )


def _loglog_fit(pairs, excluded=()) -> DimensionEstimate:
    x = np.log([1.0 / e for e, _ in pairs])
    y = np.log([v for _, v in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    twopoint = (y[1:] - y[:-1]) / (x[1:] - x[:-1])
    return DimensionEstimate(
        slope=float(slope),
        slope_lower=float(twopoint.min()),
        slope_upper=float(twopoint.max()),
        fit_residual=residual,
        samples=tuple((float(e), float(v)) for e, v in pairs),
        excluded=tuple((float(e), float(v)) for e, v in excluded),
    )


def box_dimension_fit(curve: BoxCountCurve) -> DimensionEstimate:
    """Fit log N against log(1/eps), dropping saturated scales.

    A scale is saturated when its count reaches 98% of the distinct
    sample points, or 98% of the finest grid's cell budget; both mean
    the count has stopped tracking the underlying set.
    """
    if len(curve.scales) < 4:
        raise InsufficientDataError(
            f"need at least 4 scales, got {len(curve.scales)}"
        )
    finest_cells = (1.0 / min(curve.scales)) ** curve.ambient_dim
    kept, dropped = [], []
    for eps, n in zip(curve.scales, curve.counts):
        saturated = (
            n >= SATURATION * curve.points_used
            or n >= SATURATION * finest_cells
        )
        (dropped if saturated else kept).append((eps, n))
    if len(kept) < 2:
        raise InsufficientDataError(
            f"{len(kept)} unsaturated scales of {len(curve.scales)}; the "
            f"sample is too small for these scales"
        )
    return _loglog_fit(kept, dropped)


def _ladder_pairs(ladder) -> list[tuple[float, float]]:
    pairs = []
    for row in ladder:
        if hasattr(row, "epsilon"):
            eps, l_hat, truncated = row.epsilon, row.l_hat, row.truncated
        elif len(row) == 3:
            eps, l_hat, truncated = row
        else:
            eps, l_hat = row
            truncated = False
        if truncated:
            raise ValueError(
                f"truncated row at epsilon={eps}: filter unclean rows "
                f"before fitting, they bias the slope low"
            )
        if l_hat <= 0:
            raise ValueError(f"nonpositive length {l_hat} at epsilon={eps}")
        pairs.append((float(eps), float(l_hat)))
    return pairs


def diophantine_dimension_fit(ladder) -> DimensionEstimate:
    """Fit log l_hat against log(1/eps) over a clean ladder.

    Accepts LadderRow objects or bare (eps, l_hat) / (eps, l_hat,
    truncated) tuples; any truncated row is a hard error.
    """
    pairs = _ladder_pairs(ladder)
    if len(pairs) < 4:
        raise InsufficientDataError(f"need at least 4 clean rows, got {len(pairs)}")
    eps = [e for e, _ in pairs]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon values must be strictly decreasing")
    return _loglog_fit(pairs)


@dataclass(frozen=True)
class BoundBracket:
    """The closed-form dimension bracket for given (m, n, nu, d)."""

    lower: float
    upper: float
    inputs: tuple[float, ...]


def theoretical_bounds(m: int, n: int, nu: float, d: float) -> BoundBracket:
    """Evaluate the bracket lower=(d-n)/n, upper=(1+nu)m/(1-nu(m-1)).

    The upper formula exists only under nu*(m-1) < 1; outside that the
    request is refused rather than returning a negative or infinite
    bound.
    """
    if m < 1 or n < 1:
        raise ValueError(f"need m >= 1 and n >= 1, got m={m}, n={n}")
    if nu < 0:
        raise ValueError(f"order nu must be nonnegative, got {nu}")
    if not 0 <= d <= m + n:
        raise ValueError(f"ambient dimension d={d} outside [0, {m + n}]")
    hypothesis = nu * (m - 1)
    if hypothesis >= 1:
        raise BoundUndefinedError(
            f"upper bound undefined: needs nu*(m-1) < 1, got {hypothesis}"
        )
    lower = (d - n) / n
    upper = (1.0 + nu) * m / (1.0 - hypothesis)
    return BoundBracket(lower=lower, upper=upper, inputs=(m, n, nu, d))


def holder_bound(di_base: float, alpha: float) -> float:
    """Dimension ceiling after composing with an alpha-Holder map."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if di_base < 0:
        raise ValueError(f"base dimension must be nonnegative, got {di_base}")
    return di_base / alpha

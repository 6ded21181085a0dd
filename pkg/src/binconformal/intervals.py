"""Closed intervals, disjoint interval sets, and outcome bins.

Everything here is immutable and pure: construction validates and
normalizes, operations return new values, so all types are safe to share
across threads. These primitives underpin every interval-producing method
in the package.

Bins are numbered from 1. A partition with k breakpoints has k+1 bins,
each left-closed and right-open, with the last bin extending to +inf.
"""

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, DataError

INF = math.inf


@dataclass(frozen=True)
class PredictionInterval:
    """Closed interval [lower, upper] on the outcome axis.

    Degenerate intervals (lower == upper) are allowed. ``upper`` may be
    +inf for intervals unbounded above; ``lower`` may be -inf.
    """

    lower: float
    upper: float

    def __post_init__(self):
        lower = float(self.lower)
        upper = float(self.upper)
        if math.isnan(lower) or math.isnan(upper):
            raise ValueError("interval endpoints must not be NaN")
        if lower > upper:
            raise ValueError(f"invalid interval: lower {lower} > upper {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        """Closed-interval membership: endpoints count as covered."""
        return self.lower <= y <= self.upper

    def intersect(self, other: "PredictionInterval") -> "PredictionInterval | None":
        """Intersection with another closed interval, or None if disjoint."""
        lo = max(self.lower, other.lower)
        hi = min(self.upper, other.upper)
        if lo > hi:
            return None
        return PredictionInterval(lo, hi)


def _merged_segments(
    intervals: Iterable[PredictionInterval],
) -> tuple[PredictionInterval, ...]:
    items = sorted(intervals, key=lambda iv: (iv.lower, iv.upper))
    merged: list[PredictionInterval] = []
    for iv in items:
        if merged and iv.lower <= merged[-1].upper:
            if iv.upper > merged[-1].upper:
                merged[-1] = PredictionInterval(merged[-1].lower, iv.upper)
        else:
            merged.append(iv)
    return tuple(merged)


@dataclass(frozen=True)
class IntervalSet:
    """Ordered union of pairwise-disjoint closed intervals.

    Overlapping or touching inputs are merged on construction, so two sets
    covering the same points always compare equal.
    """

    segments: tuple[PredictionInterval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "segments", _merged_segments(self.segments))

    @property
    def is_empty(self) -> bool:
        return not self.segments

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def contains(self, y: float) -> bool:
        return any(seg.contains(y) for seg in self.segments)

    def total_width(self) -> float:
        """Sum of segment widths; +inf when any segment is unbounded."""
        return sum(seg.width for seg in self.segments) if self.segments else 0.0

    def hull(self) -> PredictionInterval:
        """Single interval spanning the minimum lower and maximum upper endpoint."""
        if not self.segments:
            raise DataError("cannot take the hull of an empty interval set")
        return PredictionInterval(self.segments[0].lower, self.segments[-1].upper)

    def __iter__(self):
        return iter(self.segments)


def union(intervals: Iterable[PredictionInterval]) -> IntervalSet:
    """Minimal sorted disjoint representation of a collection of intervals."""
    return IntervalSet(tuple(intervals))


def hull(interval_set: IntervalSet) -> PredictionInterval:
    """Contiguize an interval set into one interval spanning its endpoints."""
    return interval_set.hull()


@dataclass(frozen=True)
class BinPartition:
    """Contiguous outcome bins defined by ordered breakpoints.

    k breakpoints define k+1 bins numbered 1..k+1, each left-closed and
    right-open: bin i is [b_{i-1}, b_i), the last bin is [b_k, +inf). The
    first bin starts at ``support_min`` (default -inf, i.e. the whole real
    line below the first breakpoint).
    """

    breakpoints: tuple[float, ...] = ()
    support_min: float = -INF

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        smin = float(self.support_min)
        if math.isnan(smin) or smin == INF:
            raise ConfigurationError("support_min must be a real number or -inf")
        for b in bps:
            if not math.isfinite(b):
                raise ConfigurationError(f"breakpoints must be finite, got {b}")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ConfigurationError(f"breakpoints must be strictly increasing: {bps}")
        if bps and bps[0] <= smin:
            raise ConfigurationError(
                f"first breakpoint {bps[0]} must exceed support_min {smin}"
            )
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "support_min", smin)

    @property
    def n_bins(self) -> int:
        return len(self.breakpoints) + 1

    def bin_bounds(self, index: int) -> tuple[float, float]:
        """(lower, upper) of bin ``index``; the bin is [lower, upper).

        ``upper`` is +inf for the last bin.
        """
        if not 1 <= index <= self.n_bins:
            raise ConfigurationError(
                f"bin index {index} out of range 1..{self.n_bins}"
            )
        lo = self.support_min if index == 1 else self.breakpoints[index - 2]
        hi = INF if index == self.n_bins else self.breakpoints[index - 1]
        return lo, hi

    def bin_interval(self, index: int) -> PredictionInterval:
        """Closed cover of bin ``index`` (the right-open edge is closed)."""
        lo, hi = self.bin_bounds(index)
        return PredictionInterval(lo, hi)

    def assign(self, y: float) -> int:
        """Index of the unique bin containing ``y``.

        Values on a breakpoint belong to the bin on the right.
        """
        y = float(y)
        if math.isnan(y):
            raise DataError("cannot assign NaN to a bin")
        if y < self.support_min:
            raise DataError(
                f"value {y} below declared support minimum {self.support_min}"
            )
        return bisect_right(self.breakpoints, y) + 1

    def assign_many(self, y_values) -> np.ndarray:
        """Vectorized :meth:`assign`; returns 1-based bin indices."""
        arr = np.asarray(y_values, dtype=float)
        if np.any(np.isnan(arr)):
            raise DataError("cannot assign NaN to a bin")
        if np.any(arr < self.support_min):
            bad = float(arr[arr < self.support_min][0])
            raise DataError(
                f"value {bad} below declared support minimum {self.support_min}"
            )
        return np.searchsorted(np.asarray(self.breakpoints), arr, side="right") + 1

    def transformed(self, forward) -> "BinPartition":
        """Partition on a monotone-transformed axis (e.g. log1p of counts)."""
        if self.support_min == -INF:
            smin = -INF
        else:
            with np.errstate(divide="ignore"):
                smin = float(forward(self.support_min))
        return BinPartition(tuple(float(forward(b)) for b in self.breakpoints), smin)


def assign_bin(y: float, partition: BinPartition) -> int:
    """Bin index of ``y`` under ``partition`` (left-closed, right-open bins)."""
    return partition.assign(y)


def bins_from_cutpoints(
    cutpoints: Sequence[float], support_min: float
) -> BinPartition:
    """Partition [support_min, +inf) at explicit cutpoints.

    Cutpoints must be strictly increasing and exceed ``support_min``. An
    empty cutpoint sequence yields the single all-support bin.
    """
    return BinPartition(tuple(float(c) for c in cutpoints), float(support_min))


def bins_from_percentiles(
    y_values, k: int, support_min: float = -INF
) -> BinPartition:
    """Partition the outcome axis at empirical (j/k)-quantiles, j = 1..k-1.

    Quantiles use linear order-statistic interpolation (quantile p sits at
    index 1+(n-1)p, one-based). Duplicate breakpoints, and breakpoints not
    above ``support_min``, are dropped with a warning, yielding fewer bins.

    Raises
    ------
    DataError
        Fewer than 2 distinct values (degenerate partition).
    ConfigurationError
        k outside 2..number of distinct values.
    """
    arr = np.asarray(y_values, dtype=float).ravel()
    if arr.size == 0:
        raise DataError("cannot build percentile bins from empty data")
    if np.any(np.isnan(arr)):
        raise DataError("cannot build percentile bins from NaN values")
    n_distinct = np.unique(arr).size
    if n_distinct < 2:
        raise DataError(
            "degenerate partition: need at least 2 distinct values to form bins"
        )
    if not 2 <= k <= n_distinct:
        raise ConfigurationError(
            f"bin count k={k} must be between 2 and the number of "
            f"distinct values ({n_distinct})"
        )
    probs = [j / k for j in range(1, k)]
    raw = np.quantile(arr, probs)
    kept = np.unique(raw[raw > support_min])
    if kept.size < len(probs):
        warnings.warn(
            f"duplicate or out-of-support percentile breakpoints collapsed: "
            f"{k} requested bins reduced to {kept.size + 1}",
            UserWarning,
            stacklevel=2,
        )
    return BinPartition(tuple(float(b) for b in kept), float(support_min))

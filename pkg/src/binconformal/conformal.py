"""Inductive conformal prediction with optional conditioning on outcome bins.

The standard split conformal (SCP) interval for an absolute-error
nonconformity score is ``[y_hat - q, y_hat + q]`` where q is the
finite-sample-corrected quantile of calibration scores. The bin-conditional
variant (BCCP) computes a separate quantile from the calibration records
whose observed outcome falls in each bin, intersects each bin's interval
with the bin itself, and combines the pieces: as the discontiguous union
(BCCPd) or as its contiguized hull (BCCPc). With a single all-support bin
BCCP reduces exactly to SCP.

Conventions, fixed here so results are deterministic:

* The calibration quantile is the ``ceil((n+1)(1-alpha))``-th smallest
  score, +inf when that rank exceeds n (the conservative small-sample
  case). This is what makes the >= 1-alpha coverage guarantee exact.
* p-values count ties as "as large or larger"; no randomized smoothing.
* Per-bin intervals are cut at the right-open bin edge; when segments from
  adjacent bins touch at a breakpoint the union closes the joint. A
  segment that would consist solely of the excluded right edge is empty.
* Predictions below the declared support minimum are clamped to it before
  interval construction.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DataError
from .intervals import BinPartition, IntervalSet, PredictionInterval, union

INF = math.inf


class NonconformityMeasure(Enum):
    """Dissimilarity between an observed and a predicted outcome."""

    ABSOLUTE_ERROR = "absolute_error"

    def score(self, y_true, y_pred):
        scores = np.abs(np.asarray(y_true, dtype=float) - np.asarray(y_pred, dtype=float))
        return float(scores) if np.ndim(scores) == 0 else scores


def _validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be strictly inside (0, 1), got {alpha}")
    return alpha


def finite_sample_quantile(scores, alpha: float) -> float:
    """Finite-sample-corrected upper quantile of nonconformity scores.

    Returns the r-th smallest score with r = ceil((n+1)(1-alpha)), taken
    without interpolation, or +inf when r > n.
    """
    arr = np.asarray(scores, dtype=float).ravel()
    n = arr.size
    if n == 0:
        raise DataError("empty calibration: no nonconformity scores")
    alpha = _validate_alpha(alpha)
    # ceil((n+1)(1-a)) == (n+1) - floor((n+1)a); the floor form avoids the
    # float drift of (1-a) pushing the ceiling up one rank
    rank = n + 1 - math.floor((n + 1) * alpha + 1e-9)
    if rank > n:
        return INF
    return float(np.partition(arr, rank - 1)[rank - 1])


def conformal_pvalue(candidate_score: float, scores) -> float:
    """Proportion of calibration scores at least as large as the candidate,
    with the +1 correction: (1 + #{s >= c}) / (n + 1)."""
    arr = np.asarray(scores, dtype=float).ravel()
    if arr.size == 0:
        raise DataError("empty calibration: no nonconformity scores")
    return (1 + int(np.count_nonzero(arr >= candidate_score))) / (arr.size + 1)


@dataclass(frozen=True, eq=False)
class CalibrationSet:
    """Paired calibration outcomes and predictions with their scores.

    When a partition is attached, ``bin_indices`` follow the observed
    outcome ``y_true``, never the prediction.
    """

    y_true: np.ndarray
    y_pred: np.ndarray
    scores: np.ndarray
    partition: BinPartition | None = None
    bin_indices: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.scores)

    def scores_in_bin(self, index: int) -> np.ndarray:
        if self.partition is None or self.bin_indices is None:
            raise ConfigurationError("calibration set has no bin partition")
        return self.scores[self.bin_indices == index]


@dataclass(frozen=True, eq=False)
class ConformalCalibration:
    """Calibration scores with precomputed global and per-bin quantiles."""

    records: CalibrationSet
    alpha: float
    support_min: float
    quantile: float
    bin_quantiles: dict | None  # 1-based bin index -> per-bin quantile

    @property
    def scores(self) -> np.ndarray:
        return self.records.scores

    @property
    def partition(self) -> BinPartition | None:
        return self.records.partition

    def clamp(self, y_hat: float) -> float:
        return y_hat if y_hat >= self.support_min else self.support_min


def calibrate(
    y_true,
    y_pred,
    alpha: float,
    *,
    partition: BinPartition | None = None,
    support_min: float = -INF,
    allow_empty_bins: bool = False,
    measure: NonconformityMeasure = NonconformityMeasure.ABSOLUTE_ERROR,
) -> ConformalCalibration:
    """Build a conformal calibration from held-out (y_true, y_pred) pairs.

    With a partition, scores are grouped by the bin of the observed
    outcome and a per-bin quantile is stored for each bin. A bin with no
    calibration records raises unless ``allow_empty_bins`` is set, in
    which case its quantile is +inf (the whole-bin fallback).
    """
    alpha = _validate_alpha(alpha)
    yt = np.asarray(y_true, dtype=float).ravel()
    yp = np.asarray(y_pred, dtype=float).ravel()
    if yt.size != yp.size:
        raise DataError(f"y_true ({yt.size}) and y_pred ({yp.size}) lengths differ")
    if yt.size == 0:
        raise DataError("empty calibration: no records")
    if np.any(yt < support_min):
        raise DataError("calibration outcome below the declared support minimum")
    if partition is not None and partition.support_min > support_min and np.any(
        yt < partition.support_min
    ):
        raise DataError("calibration outcome below the partition support minimum")
    scores = measure.score(yt, yp)

    bin_indices = None
    bin_quantiles = None
    if partition is not None:
        bin_indices = partition.assign_many(yt)
        bin_quantiles = {}
        for b in range(1, partition.n_bins + 1):
            bin_scores = scores[bin_indices == b]
            if bin_scores.size == 0:
                if not allow_empty_bins:
                    lo, hi = partition.bin_bounds(b)
                    raise DataError(
                        f"bin {b} [{lo}, {hi}) has no calibration records; "
                        f"widen the bins or enable the whole-bin fallback"
                    )
                bin_quantiles[b] = INF
            else:
                bin_quantiles[b] = finite_sample_quantile(bin_scores, alpha)

    records = CalibrationSet(
        y_true=yt, y_pred=yp, scores=scores,
        partition=partition, bin_indices=bin_indices,
    )
    return ConformalCalibration(
        records=records,
        alpha=alpha,
        support_min=float(support_min),
        quantile=finite_sample_quantile(scores, alpha),
        bin_quantiles=bin_quantiles,
    )


def calibration_from_scores(
    scores, alpha: float, *, support_min: float = -INF
) -> ConformalCalibration:
    """Calibration carrying only global scores (enough for SCP)."""
    arr = np.asarray(scores, dtype=float).ravel()
    if arr.size == 0:
        raise DataError("empty calibration: no nonconformity scores")
    records = CalibrationSet(
        y_true=np.full(arr.size, np.nan), y_pred=np.full(arr.size, np.nan), scores=arr
    )
    return ConformalCalibration(
        records=records,
        alpha=_validate_alpha(alpha),
        support_min=float(support_min),
        quantile=finite_sample_quantile(arr, alpha),
        bin_quantiles=None,
    )


def scp_interval(y_hat: float, calibration: ConformalCalibration) -> PredictionInterval:
    """Split conformal interval [y_hat - q, y_hat + q], clipped to the support."""
    y0 = calibration.clamp(float(y_hat))
    q = calibration.quantile
    lower = max(calibration.support_min, y0 - q)
    return PredictionInterval(lower, y0 + q)


def _require_bins(calibration: ConformalCalibration) -> BinPartition:
    if calibration.partition is None or calibration.bin_quantiles is None:
        raise ConfigurationError("calibration was built without a bin partition")
    return calibration.partition


def bccp_per_bin_interval(
    y_hat: float, bin_index: int, calibration: ConformalCalibration
) -> PredictionInterval | None:
    """One bin's contribution: [y_hat - q_b, y_hat + q_b] cut to the bin.

    Returns None when the intersection is empty. An infinite per-bin
    quantile returns the whole bin. The right-open bin edge is closed in
    the returned segment, except that a segment consisting solely of that
    excluded edge point is empty.
    """
    partition = _require_bins(calibration)
    lo_bin, hi_bin = partition.bin_bounds(bin_index)
    q_b = calibration.bin_quantiles[bin_index]
    if math.isinf(q_b):
        return PredictionInterval(lo_bin, hi_bin)
    y0 = calibration.clamp(float(y_hat))
    lo = max(y0 - q_b, lo_bin)
    hi = min(y0 + q_b, hi_bin)
    if lo > hi:
        return None
    if lo == hi == hi_bin and math.isfinite(hi_bin):
        return None  # only the excluded right edge remains
    return PredictionInterval(lo, hi)


def bccp_discontiguous(y_hat: float, calibration: ConformalCalibration) -> IntervalSet:
    """Union of every bin's interval; non-empty for any in-support y_hat."""
    partition = _require_bins(calibration)
    pieces = []
    for b in range(1, partition.n_bins + 1):
        piece = bccp_per_bin_interval(y_hat, b, calibration)
        if piece is not None:
            pieces.append(piece)
    return union(pieces)


def bccp_contiguous(y_hat: float, calibration: ConformalCalibration) -> PredictionInterval:
    """Contiguized variant: the hull of the discontiguous union."""
    return bccp_discontiguous(y_hat, calibration).hull()


def grid_interval(
    y_hat: float,
    scores,
    y_grid,
    alpha: float,
    measure: NonconformityMeasure = NonconformityMeasure.ABSOLUTE_ERROR,
) -> IntervalSet:
    """Brute-force conformal set: grid points whose p-value exceeds alpha.

    Maximal runs of accepted grid points become closed intervals from the
    first to the last point of the run. This is the slow oracle the
    analytic constructions are checked against; the result can be empty
    for extreme alpha with few scores.
    """
    arr = np.sort(np.asarray(scores, dtype=float).ravel())
    if arr.size == 0:
        raise DataError("empty calibration: no nonconformity scores")
    alpha = _validate_alpha(alpha)
    grid = np.asarray(y_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ConfigurationError("y_grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ConfigurationError("y_grid must be sorted ascending")
    candidate_scores = measure.score(grid, float(y_hat))
    count_ge = arr.size - np.searchsorted(arr, candidate_scores, side="left")
    accepted = (1 + count_ge) / (arr.size + 1) > alpha

    segments = []
    start = None
    for i, ok in enumerate(accepted):
        if ok and start is None:
            start = i
        elif not ok and start is not None:
            segments.append(PredictionInterval(grid[start], grid[i - 1]))
            start = None
    if start is not None:
        segments.append(PredictionInterval(grid[start], grid[-1]))
    return IntervalSet(tuple(segments))


def default_grid(calibration: ConformalCalibration, resolution: int = 4001) -> np.ndarray:
    """Equally spaced hypothetical outcomes spanning the calibration range.

    Runs from the support minimum (or min calibration outcome minus three
    max scores when the support is unbounded below) to the max calibration
    outcome plus three max scores.
    """
    if resolution < 2:
        raise ConfigurationError("grid resolution must be at least 2")
    y = calibration.records.y_true
    if np.any(np.isnan(y)):
        raise ConfigurationError(
            "default grid needs calibration outcomes; this calibration was "
            "built from scores only"
        )
    pad = 3.0 * float(np.max(calibration.scores))
    lo = calibration.support_min
    if not math.isfinite(lo):
        lo = float(np.min(y)) - pad
    hi = float(np.max(y)) + pad
    return np.linspace(lo, hi, int(resolution))

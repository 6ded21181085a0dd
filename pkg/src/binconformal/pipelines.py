"""Interval construction for every supported method, on a declared scale.

One entry point builds test-set intervals from calibration pairs plus test
predictions, handling the scale bookkeeping shared by the CLI and the
replication harness: transform inputs, clamp out-of-support predictions,
construct intervals on the transformed scale, back-transform the
endpoints, and optionally round to the integer count scale.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import baselines
from .conformal import bccp_contiguous, bccp_discontiguous, calibrate, scp_interval
from .errors import ConfigurationError, DataError
from .intervals import BinPartition, IntervalSet, PredictionInterval, union
from .models import OutcomeTransform, round_count_interval

INF = math.inf

METHOD_KINDS = (
    "scp",
    "bccp-d",
    "bccp-c",
    "bootstrap",
    "bootstrap-log",
    "lognormal",
    "poisson",
    "negbinom",
    "quantreg",
)

CONFORMAL_KINDS = ("scp", "bccp-d", "bccp-c")
LOG_FAMILY = (OutcomeTransform.LOG, OutcomeTransform.LOG1P)


@dataclass(frozen=True, eq=False)
class MethodIntervals:
    """Per-test-case interval sets with row flags and method-level notes."""

    sets: list
    flags: list
    notes: tuple = ()


def _clamp_predictions(y_pred, transform, support_min):
    """Clamp raw predictions the transform cannot accept; report which."""
    arr = np.asarray(y_pred, dtype=float).ravel()
    if transform is OutcomeTransform.LOG:
        if np.any(arr <= 0):
            raise DataError(
                "log-scale method needs strictly positive predictions; "
                "use log1p for count-like data"
            )
        return arr, np.zeros(arr.size, dtype=bool)
    floor = max(support_min, transform.support_min)
    if not math.isfinite(floor):
        return arr, np.zeros(arr.size, dtype=bool)
    clamped = arr < floor
    return np.maximum(arr, floor), clamped


def _rounded(interval_set: IntervalSet) -> IntervalSet:
    return union(round_count_interval(seg) for seg in interval_set)


def _finish(segments_per_row, clamped, round_counts, notes=()):
    sets = []
    flags = []
    for row_set, was_clamped in zip(segments_per_row, clamped):
        if round_counts:
            row_set = _rounded(row_set)
        row_flags = []
        if was_clamped:
            row_flags.append("clamped")
        if row_set.total_width() == INF:
            row_flags.append("unbounded")
        sets.append(row_set)
        flags.append(tuple(row_flags))
    return MethodIntervals(sets=sets, flags=flags, notes=tuple(notes))


def make_intervals(
    kind: str,
    y_true_cal,
    y_pred_cal,
    y_pred_test,
    *,
    alpha: float,
    transform: OutcomeTransform = OutcomeTransform.IDENTITY,
    bins: BinPartition | None = None,
    round_counts: bool = False,
    allow_empty_bins: bool = False,
    n_draws: int = 2000,
    rng=None,
    support_min: float | None = None,
    quantreg_design: tuple | None = None,
) -> MethodIntervals:
    """Intervals for each test prediction under one method.

    ``transform`` declares the scale the method operates on: conformal
    scores, bootstrap-log residuals, log-normal dispersions, and quantile
    regressions are computed on transform(y), and interval endpoints are
    mapped back to the raw outcome scale. ``bins`` is a raw-scale
    partition (bcc methods only). ``support_min`` defaults to the
    transform's domain minimum. ``quantreg_design`` optionally supplies
    (train_features, train_y_raw, test_features); without it the quantile
    regression uses the transformed point prediction as its one regressor,
    fit on the calibration pairs.
    """
    if kind not in METHOD_KINDS:
        raise ConfigurationError(
            f"unknown method {kind!r}; expected one of {', '.join(METHOD_KINDS)}"
        )
    smin_raw = transform.support_min if support_min is None else float(support_min)
    yt_cal = np.asarray(y_true_cal, dtype=float).ravel()
    yp_cal, _ = _clamp_predictions(y_pred_cal, transform, smin_raw)
    yp_test, clamped = _clamp_predictions(y_pred_test, transform, smin_raw)
    if yt_cal.size != yp_cal.size:
        raise DataError(
            f"calibration outcomes ({yt_cal.size}) and predictions "
            f"({yp_cal.size}) lengths differ"
        )

    if kind in CONFORMAL_KINDS:
        return _conformal_intervals(
            kind, yt_cal, yp_cal, yp_test, clamped, alpha, transform, bins,
            round_counts, allow_empty_bins, smin_raw,
        )
    if kind in ("bootstrap", "bootstrap-log"):
        return _bootstrap_intervals(
            kind, yt_cal, yp_cal, yp_test, clamped, alpha, transform,
            round_counts, n_draws, rng, smin_raw,
        )
    if kind == "lognormal":
        return _lognormal_intervals(
            yt_cal, yp_cal, yp_test, clamped, alpha, transform, round_counts
        )
    if kind in ("poisson", "negbinom"):
        return _count_intervals(
            kind, yt_cal, yp_cal, yp_test, clamped, alpha, round_counts
        )
    return _quantreg_intervals(
        yt_cal, yp_cal, yp_test, clamped, alpha, transform, round_counts,
        quantreg_design,
    )


def _transformed_support(transform, smin_raw):
    if not math.isfinite(smin_raw):
        return -INF
    if transform is OutcomeTransform.LOG and smin_raw <= 0:
        return -INF
    return float(transform.forward(smin_raw))


def _back_transform(interval_set, transform, snap=None):
    """Map segment endpoints back to the raw scale.

    ``snap`` maps transformed breakpoint values to their exact raw
    counterparts: endpoints that bind at a bin edge must land exactly on
    the raw cutpoint, not a float ulp away from it, or outcomes sitting on
    the cutpoint would drop out of the interval.
    """
    if transform is OutcomeTransform.IDENTITY:
        return interval_set
    snap = snap or {}

    def back(v):
        return snap[v] if v in snap else float(transform.inverse(v))

    return union(
        PredictionInterval(back(seg.lower), back(seg.upper)) for seg in interval_set
    )


def _conformal_intervals(
    kind, yt_cal, yp_cal, yp_test, clamped, alpha, transform, bins,
    round_counts, allow_empty_bins, smin_raw,
):
    if kind in ("bccp-d", "bccp-c") and bins is None:
        raise ConfigurationError(f"method {kind} requires outcome bins")
    if kind == "scp" and bins is not None:
        raise ConfigurationError("bins only apply to the bccp-* methods")
    t_smin = _transformed_support(transform, smin_raw)
    partition = None
    snap = {}
    if bins is not None:
        if transform is OutcomeTransform.IDENTITY:
            partition = bins
        else:
            partition = bins.transformed(transform.forward)
            snap = dict(zip(partition.breakpoints, bins.breakpoints))
            if math.isfinite(partition.support_min):
                snap[partition.support_min] = bins.support_min
    cal = calibrate(
        transform.forward(yt_cal), transform.forward(yp_cal), alpha,
        partition=partition, support_min=t_smin, allow_empty_bins=allow_empty_bins,
    )
    notes = []
    if cal.bin_quantiles and any(math.isinf(q) for q in cal.bin_quantiles.values()):
        notes.append("one or more bins fell back to an infinite quantile")
    p_test_t = transform.forward(yp_test)
    if kind == "scp":
        rows = [IntervalSet((scp_interval(p, cal),)) for p in p_test_t]
    elif kind == "bccp-d":
        rows = [bccp_discontiguous(p, cal) for p in p_test_t]
    else:
        rows = [IntervalSet((bccp_contiguous(p, cal),)) for p in p_test_t]
    rows = [_back_transform(s, transform, snap) for s in rows]
    return _finish(rows, clamped, round_counts, notes)


def _bootstrap_intervals(
    kind, yt_cal, yp_cal, yp_test, clamped, alpha, transform,
    round_counts, n_draws, rng, smin_raw,
):
    if kind == "bootstrap":
        scale = OutcomeTransform.IDENTITY
    else:
        if transform not in LOG_FAMILY:
            raise ConfigurationError(
                "bootstrap-log requires the log or log1p transform"
            )
        scale = transform
    pool = baselines.residual_pool(yt_cal, yp_cal, scale)
    y_hats = scale.forward(yp_test)
    intervals = baselines.bootstrap_intervals(
        y_hats, pool, alpha, n_draws=n_draws, rng=rng, support_min=smin_raw
    )
    rows = [IntervalSet((iv,)) for iv in intervals]
    return _finish(rows, clamped, round_counts)


def _lognormal_intervals(yt_cal, yp_cal, yp_test, clamped, alpha, transform, round_counts):
    if transform not in LOG_FAMILY:
        raise ConfigurationError(
            "the log-normal method requires the log or log1p transform"
        )
    sigma = baselines.residual_sigma(yt_cal, yp_cal, transform)
    if sigma <= 0:
        raise DataError("calibration residuals have zero dispersion")
    z = float(norm.ppf(1 - alpha / 2))
    p_t = transform.forward(yp_test)
    rows = [
        IntervalSet((PredictionInterval(
            transform.inverse(p - z * sigma), transform.inverse(p + z * sigma)
        ),))
        for p in p_t
    ]
    return _finish(rows, clamped, round_counts)


def _count_intervals(kind, yt_cal, yp_cal, yp_test, clamped, alpha, round_counts):
    if np.any(yt_cal < 0):
        raise DataError("count-distribution methods need nonnegative outcomes")
    mus = np.maximum(0.0, yp_test)
    notes = []
    if kind == "negbinom":
        dispersion = baselines.estimate_nb_dispersion(yt_cal, np.maximum(0.0, yp_cal))
        if dispersion is None:
            notes.append("no overdispersion in calibration; using Poisson quantiles")
            intervals = baselines.poisson_intervals(mus, alpha)
        else:
            intervals = baselines.negbinom_intervals(mus, dispersion, alpha)
    else:
        intervals = baselines.poisson_intervals(mus, alpha)
    rows = [IntervalSet((iv,)) for iv in intervals]
    return _finish(rows, clamped, round_counts, notes)


def _quantreg_intervals(
    yt_cal, yp_cal, yp_test, clamped, alpha, transform, round_counts, quantreg_design,
):
    if quantreg_design is not None:
        X_fit, y_fit_raw, X_test = quantreg_design
        y_fit = transform.forward(np.asarray(y_fit_raw, dtype=float).ravel())
    else:
        X_fit = transform.forward(yp_cal)[:, None]
        y_fit = transform.forward(yt_cal)
        X_test = transform.forward(yp_test)[:, None]
    model = baselines.quantreg_pair(X_fit, y_fit, alpha)
    lo_t = model.lower.predict(np.asarray(X_test, dtype=float))
    hi_t = model.upper.predict(np.asarray(X_test, dtype=float))
    crossed = lo_t > hi_t
    lo = transform.inverse(np.minimum(lo_t, hi_t))
    hi = transform.inverse(np.maximum(lo_t, hi_t))
    rows = [IntervalSet((PredictionInterval(l, h),)) for l, h in zip(lo, hi)]
    result = _finish(rows, clamped, round_counts)
    merged_flags = [
        flags + ("crossed",) if was_crossed else flags
        for flags, was_crossed in zip(result.flags, crossed)
    ]
    return MethodIntervals(sets=result.sets, flags=merged_flags, notes=result.notes)

"""Comparison interval methods: residual bootstrap, parametric log-normal,
Poisson and negative-binomial count intervals, and linear quantile
regression.

These are the non-conformal baselines the replication studies evaluate
alongside the conformal constructions. Each is standard; the point of
carrying them is to measure their coverage across the outcome range under
the same harness.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import nbinom, norm, poisson

from .errors import ConfigurationError, DataError, NumericalError
from .intervals import PredictionInterval
from .models import OutcomeTransform

INF = math.inf


# ---------------------------------------------------------------------------
# residual bootstrap


@dataclass(frozen=True, eq=False)
class ResidualPool:
    """Calibration residuals on a declared scale (raw, log, or log1p)."""

    residuals: np.ndarray
    scale: OutcomeTransform = OutcomeTransform.IDENTITY


def residual_pool(
    y_true, y_pred, scale: OutcomeTransform = OutcomeTransform.IDENTITY
) -> ResidualPool:
    """Pool of transform(y_true) - transform(y_pred) over calibration pairs."""
    yt = np.asarray(y_true, dtype=float).ravel()
    yp = np.asarray(y_pred, dtype=float).ravel()
    if yt.size != yp.size:
        raise DataError(f"y_true ({yt.size}) and y_pred ({yp.size}) lengths differ")
    return ResidualPool(residuals=scale.forward(yt) - scale.forward(yp), scale=scale)


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def bootstrap_intervals(
    y_hats,
    pool: ResidualPool,
    alpha: float,
    n_draws: int = 2000,
    rng=None,
    support_min: float = -INF,
) -> list[PredictionInterval]:
    """Bootstrap intervals for many predictions sharing one residual pool.

    ``y_hats`` are on the pool's scale. Each prediction gets ``n_draws``
    residuals resampled with replacement and SUBTRACTED from it (the basic
    reverse-percentile form, which reflects skew in the error pool); the
    interval is the empirical [alpha/2, 1 - alpha/2] quantile range of the
    simulated outcomes, back-transformed to the raw scale and clamped at
    ``support_min``. For symmetric pools this coincides with adding the
    residuals.
    """
    res = pool.residuals
    if res.size == 0:
        raise DataError("empty calibration: residual pool has no records")
    if n_draws < 100:
        raise ConfigurationError(f"bootstrap needs at least 100 draws, got {n_draws}")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be strictly inside (0, 1), got {alpha}")
    y_hats = np.atleast_1d(np.asarray(y_hats, dtype=float))
    rng = _as_rng(rng)
    idx = rng.integers(0, res.size, size=(y_hats.size, n_draws))
    simulated = y_hats[:, None] - res[idx]
    lo, hi = np.quantile(simulated, [alpha / 2, 1 - alpha / 2], axis=1)
    lo = np.maximum(support_min, pool.scale.inverse(lo))
    hi = np.maximum(support_min, pool.scale.inverse(hi))
    return [PredictionInterval(l, h) for l, h in zip(lo, hi)]


def bootstrap_interval(
    y_hat: float,
    pool: ResidualPool,
    alpha: float,
    n_draws: int = 2000,
    rng=None,
    support_min: float = -INF,
) -> PredictionInterval:
    """Single-prediction bootstrap interval; see :func:`bootstrap_intervals`."""
    return bootstrap_intervals(
        [y_hat], pool, alpha, n_draws=n_draws, rng=rng, support_min=support_min
    )[0]


# ---------------------------------------------------------------------------
# parametric intervals


def lognormal_interval(y_hat_log: float, sigma_hat: float, alpha: float) -> PredictionInterval:
    """exp(y_hat_log +/- z_{1-alpha/2} * sigma_hat)."""
    if not sigma_hat > 0:
        raise NumericalError(f"dispersion must be positive, got {sigma_hat}")
    z = norm.ppf(1 - alpha / 2)
    return PredictionInterval(
        math.exp(y_hat_log - z * sigma_hat), math.exp(y_hat_log + z * sigma_hat)
    )


def residual_sigma(y_true, y_pred, scale: OutcomeTransform = OutcomeTransform.LOG) -> float:
    """Sample standard deviation of calibration residuals on ``scale``."""
    pool = residual_pool(y_true, y_pred, scale)
    if pool.residuals.size < 2:
        raise DataError("need at least 2 calibration records to estimate dispersion")
    return float(np.std(pool.residuals, ddof=1))


def poisson_intervals(mus, alpha: float) -> list[PredictionInterval]:
    """Central [alpha/2, 1-alpha/2] Poisson quantile intervals, one per mean."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    if np.any(mus < 0):
        raise DataError("Poisson mean must be nonnegative")
    lo = np.zeros_like(mus)
    hi = np.zeros_like(mus)
    positive = mus > 0
    if np.any(positive):
        lo[positive] = poisson.ppf(alpha / 2, mus[positive])
        hi[positive] = poisson.ppf(1 - alpha / 2, mus[positive])
    return [PredictionInterval(l, h) for l, h in zip(lo, hi)]


def poisson_interval(mu: float, alpha: float) -> PredictionInterval:
    return poisson_intervals([mu], alpha)[0]


def negbinom_intervals(mus, dispersion: float, alpha: float) -> list[PredictionInterval]:
    """Negative-binomial quantile intervals with variance mu + mu^2/dispersion."""
    if not dispersion > 0:
        raise NumericalError(f"dispersion must be positive, got {dispersion}")
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    if np.any(mus < 0):
        raise DataError("negative-binomial mean must be nonnegative")
    lo = np.zeros_like(mus)
    hi = np.zeros_like(mus)
    positive = mus > 0
    if np.any(positive):
        p = dispersion / (dispersion + mus[positive])
        lo[positive] = nbinom.ppf(alpha / 2, dispersion, p)
        hi[positive] = nbinom.ppf(1 - alpha / 2, dispersion, p)
    return [PredictionInterval(l, h) for l, h in zip(lo, hi)]


def negbinom_interval(mu: float, dispersion: float, alpha: float) -> PredictionInterval:
    return negbinom_intervals([mu], dispersion, alpha)[0]


def estimate_nb_dispersion(y_true, y_pred) -> float | None:
    """Method-of-moments dispersion from calibration pairs.

    Solves var(y_true) = mu + mu^2/dispersion with the mean prediction as
    the mu proxy. Returns None when the data are not overdispersed
    (variance <= mean), signalling a Poisson fallback.
    """
    yt = np.asarray(y_true, dtype=float).ravel()
    yp = np.asarray(y_pred, dtype=float).ravel()
    if yt.size < 2:
        raise DataError("need at least 2 calibration records to estimate dispersion")
    mu = float(np.mean(yp))
    var = float(np.var(yt, ddof=1))
    if mu <= 0 or var <= mu:
        return None
    return mu * mu / (var - mu)


# ---------------------------------------------------------------------------
# linear quantile regression


def pinball_loss(residuals, tau: float) -> float:
    """Mean pinball loss rho_tau(u) = u * (tau - 1{u < 0})."""
    u = np.asarray(residuals, dtype=float)
    return float(np.mean(u * (tau - (u < 0))))


@dataclass(frozen=True, eq=False)
class QuantRegFit:
    """One fitted conditional quantile: intercept first, then slopes."""

    tau: float
    coefficients: np.ndarray
    iterations: int
    converged: bool
    loss: float

    def predict(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        X = np.column_stack([np.ones(1 if single else arr.shape[0]),
                             arr[None, :] if single else arr])
        out = X @ self.coefficients
        return float(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class QuantRegModel:
    """Lower and upper conditional-quantile fits for an interval pair."""

    lower: QuantRegFit
    upper: QuantRegFit


def quantreg_fit(
    features,
    y,
    tau: float,
    max_iter: int = 5000,
    tol: float = 1e-8,
    eps: float = 1e-6,
    plateau_window: int = 100,
) -> QuantRegFit:
    """Fit one conditional tau-quantile by iteratively reweighted least
    squares with epsilon-smoothed pinball weights.

    Converges when the coefficient change drops below ``tol``, or when the
    pinball loss has stopped improving for ``plateau_window`` consecutive
    iterations: near the optimum the smoothed fixed-point drift can decay
    too slowly for the coefficient test even though the objective is flat
    to machine precision.

    Raises
    ------
    NumericalError
        Neither convergence test fired within ``max_iter`` iterations (the
        error message carries diagnostics).
    """
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau must be strictly inside (0, 1), got {tau}")
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X = np.column_stack([np.ones(X.shape[0]), X])
    yv = np.asarray(y, dtype=float).ravel()
    if yv.size != X.shape[0]:
        raise DataError(f"feature rows ({X.shape[0]}) and outcomes ({yv.size}) differ")
    if yv.size < X.shape[1]:
        raise DataError("fewer rows than coefficients")

    beta, *_ = np.linalg.lstsq(X, yv, rcond=None)
    change = INF
    best_loss = INF
    stalled = 0
    for iteration in range(1, max_iter + 1):
        u = yv - X @ beta
        loss = pinball_loss(u, tau)
        if loss < best_loss - 1e-12 * (1.0 + abs(loss)):
            best_loss = loss
            stalled = 0
        else:
            stalled += 1
        weights = np.abs(tau - (u < 0)) / np.maximum(np.abs(u), eps)
        w_sqrt = np.sqrt(weights)
        beta_new, *_ = np.linalg.lstsq(X * w_sqrt[:, None], yv * w_sqrt, rcond=None)
        change = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        if change < tol or stalled >= plateau_window:
            return QuantRegFit(
                tau=tau, coefficients=beta, iterations=iteration, converged=True,
                loss=pinball_loss(yv - X @ beta, tau),
            )
    raise NumericalError(
        f"quantile regression (tau={tau}) did not converge: last coefficient "
        f"change {change:.3e} after {max_iter} iterations "
        f"(loss {pinball_loss(yv - X @ beta, tau):.6g})"
    )


def quantreg_pair(features, y, alpha: float, **kwargs) -> QuantRegModel:
    """Fit the (alpha/2, 1 - alpha/2) quantile pair for interval prediction."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError(f"alpha must be strictly inside (0, 1), got {alpha}")
    return QuantRegModel(
        lower=quantreg_fit(features, y, alpha / 2, **kwargs),
        upper=quantreg_fit(features, y, 1 - alpha / 2, **kwargs),
    )


def quantreg_bounds(model: QuantRegModel, x):
    """Raw (lower-tau, upper-tau) predictions; may cross on hard cases."""
    return model.lower.predict(x), model.upper.predict(x)


def quantreg_interval(model: QuantRegModel, x) -> PredictionInterval:
    """Interval between the two quantile predictions, swapped if crossed."""
    lo, hi = quantreg_bounds(model, x)
    if lo > hi:
        lo, hi = hi, lo
    return PredictionInterval(lo, hi)

# src/harness/stats.py

import logging
from typing import NamedTuple
import numpy as np
from sklearn.linear_model import LinearRegression

from src.utils.errors import ArgumentError

logger = logging.getLogger(__name__)

DEFAULT_Z = 3.0


class Estimate(NamedTuple):
    value: float
    stderr: float
    n: int


class LogLogFit(NamedTuple):
    slope: float
    constant: float
    r_squared: float


def pairwise_sum(values, axis=0):
    """Sum along axis by halving, independent of how replicas were batched."""
    values = np.moveaxis(np.asarray(values), axis, 0)
    while values.shape[0] > 1:
        if values.shape[0] % 2:
            values = np.concatenate([values, np.zeros_like(values[:1])])
        values = values[0::2] + values[1::2]
    return values[0] if values.shape[0] else np.zeros(values.shape[1:])


def mean_stderr(samples, axis=0):
    """Sample mean with standard error std/sqrt(n) (ddof = 1) along axis."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[axis]
    if n < 1:
        raise ArgumentError("No samples")
    mean = pairwise_sum(samples, axis) / n
    if n == 1:
        return mean, np.zeros_like(mean), n
    centered = samples - np.expand_dims(mean, axis)
    var = pairwise_sum(centered ** 2, axis) / (n - 1)
    return mean, np.sqrt(var / n), n


def estimate(samples):
    mean, se, n = mean_stderr(np.ravel(samples))
    return Estimate(float(mean), float(se), int(n))


def within(value, target, stderr=0.0, z=DEFAULT_Z, abs_tol=0.0):
    """|value - target| <= max(abs_tol, z stderr)."""
    return bool(np.all(np.abs(np.asarray(value) - target) <= np.maximum(abs_tol, z * np.asarray(stderr))))


def z_score(value, target, stderr):
    stderr = np.asarray(stderr, dtype=np.float64)
    return np.abs(np.asarray(value) - target) / np.where(stderr > 0, stderr, np.inf)


def fit_log_log(x, y):
    """
    Least-squares fit log y = slope log x + log constant.

    Args:
        x (array): Positive abscissae
        y (array): Positive values

    Returns:
        LogLogFit
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ArgumentError("A log-log fit needs at least two positive points")
    lx, ly = np.log(x).reshape(-1, 1), np.log(y)
    model = LinearRegression().fit(lx, ly)
    fit = LogLogFit(float(model.coef_[0]), float(np.exp(model.intercept_)), float(model.score(lx, ly)))
    logger.debug(f"log-log fit slope={fit.slope:.4f} constant={fit.constant:.4g}")
    return fit


def fitted_constant(values, bounds):
    """max value / bound over a table; the smallest constant with values <= C bounds."""
    values, bounds = np.asarray(values, dtype=np.float64), np.asarray(bounds, dtype=np.float64)
    return float(np.max(values / bounds))


def log_fitted_constant(values, bounds):
    """Least-squares C in log value = log C + log bound, i.e. the geometric mean of value / bound."""
    values, bounds = np.asarray(values, dtype=np.float64), np.asarray(bounds, dtype=np.float64)
    ratios = np.ravel(values / bounds)
    if ratios.size < 1 or np.any(ratios <= 0):
        raise ArgumentError("A log-fitted constant needs positive ratios")
    return float(np.exp(np.mean(np.log(ratios))))


def fit_log_linear(x, y):
    """
    Least-squares fit y = slope log x + intercept; `constant` carries the intercept.

    Args:
        x (array): Positive abscissae
        y (array): Values

    Returns:
        LogLogFit
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or np.any(x <= 0):
        raise ArgumentError("A log-linear fit needs at least two positive abscissae")
    lx = np.log(x).reshape(-1, 1)
    model = LinearRegression().fit(lx, y)
    return LogLogFit(float(model.coef_[0]), float(model.intercept_), float(model.score(lx, y)))

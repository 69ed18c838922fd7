"""Test statistics with asymptotic p-values and CLT error bars."""
from __future__ import annotations

import numpy as np
from scipy.stats import kstwobign

from ..errors import ParameterError

MIN_KS_N = 100


def _sample(x, name="samples"):
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError(f"{name} must be nonempty")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{name} must be finite")
    if x.size < MIN_KS_N:
        raise ParameterError(f"{name} has {x.size} points; the asymptotic p-value needs at least {MIN_KS_N}")
    return x


def ks_one_sample(samples, cdf):
    """Kolmogorov-Smirnov distance to ``cdf`` and its asymptotic p-value.

    ``D = max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)``; the p-value is the
    Kolmogorov tail at ``sqrt(n) D``.
    """
    x = np.sort(_sample(samples))
    n = x.size
    F = np.clip(np.asarray(cdf(x), dtype=float), 0.0, 1.0)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    return d, float(kstwobign.sf(np.sqrt(n) * d))


def ks_two_sample(a, b):
    """Two-sample KS distance (ties handled exactly) and its asymptotic p-value."""
    a = np.sort(_sample(a, "a"))
    b = np.sort(_sample(b, "b"))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    en = np.sqrt(a.size * b.size / (a.size + b.size))
    return d, float(kstwobign.sf(en * d))


def empirical_laplace(samples, q: float):
    """``mean(exp(-q x))`` with its CLT standard error."""
    if q < 0:
        raise ParameterError("q must be nonnegative")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("samples must be nonempty")
    if q == 0:
        return 1.0, 0.0
    y = np.exp(-q * x)
    se = float(np.std(y, ddof=1) / np.sqrt(y.size)) if y.size > 1 else 0.0
    return float(y.mean()), se


def mean_with_error(samples):
    x = np.asarray(samples, dtype=float).ravel()
    return float(x.mean()), float(np.std(x, ddof=1) / np.sqrt(x.size))


def z_score(estimate: float, se: float, target: float) -> float:
    if se == 0:
        return 0.0 if estimate == target else float("inf")
    return (estimate - target) / se


def bonferroni(alpha: float, m: int) -> float:
    if m < 1:
        raise ParameterError("m must be positive")
    return alpha / m

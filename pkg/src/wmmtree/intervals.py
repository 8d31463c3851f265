"""Uncertainty intervals for the combined root estimate.

All intervals are reported on the population scale.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm

INTERVAL_TYPES = ("percentile", "var", "cox")


def _z(alpha, conventional):
    # the conventional multipliers (2 for var, 1.96 for cox) apply at 95%
    if math.isclose(alpha, 0.05):
        return conventional
    return float(norm.ppf(1.0 - alpha / 2.0))


def weighted_quantile(x, q, weights=None):
    """Quantile with linear interpolation between order statistics.

    With unit weights this is the usual ``(n - 1) * q`` rule (numpy's
    default).  With general weights, the k-th order statistic sits at
    plotting position ``(S_k - w_k) / (S_n - w_n)`` where ``S`` is the
    cumulative weight.
    """
    x = np.asarray(x, dtype=float)
    if weights is None:
        return np.quantile(x, q)
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    x, w = x[keep], w[keep]
    if x.size == 0:
        raise ValueError("all weights are zero")
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    if x.size == 1:
        return np.full(np.shape(q), x[0]) if np.ndim(q) else x[0]
    cum = np.cumsum(w)
    pos = (cum - w) / (cum[-1] - w[-1])
    return np.interp(q, pos, x)


def weighted_mean_var(x, weights=None):
    """Weighted mean and unbiased (effective-sample-size corrected) variance."""
    x = np.asarray(x, dtype=float)
    if weights is None:
        weights = np.ones_like(x)
    w = np.asarray(weights, dtype=float)
    v1 = w.sum()
    mean = x[0] + np.dot(w, x - x[0]) / v1
    denom = v1 - np.dot(w, w) / v1
    var = np.dot(w, (x - mean) ** 2) / denom if denom > 0 else 0.0
    return float(mean), float(var)


def percentile_interval(estimates, alpha=0.05, weights=None):
    lo, hi = weighted_quantile(estimates, [alpha / 2.0, 1.0 - alpha / 2.0], weights)
    return float(lo), float(hi)


def combined_variance(precision):
    """Variance 1 / (1' P 1) of the optimal combination from a precision matrix.

    A zero sum means the optimal combination has no spread at all.
    """
    P = np.atleast_2d(np.asarray(precision, dtype=float))
    s = float(P.sum())
    return 1.0 / s if s > 0 else 0.0


def var_interval(theta_hat, precision, alpha=0.05, center=None):
    """exp(theta_hat -/+ 2 sqrt(V)) with V from the column precision matrix."""
    if center is None:
        center = math.exp(theta_hat)
    half = _z(alpha, 2.0) * math.sqrt(combined_variance(precision))
    return center * math.exp(-half), center * math.exp(half)


def cox_interval(theta, alpha=0.05, weights=None, center=None):
    """Cox's interval for the mean of a lognormal variable.

    ``center``, if given, is exp(mean(theta)) computed by the caller.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    if n < 2:
        raise ValueError("the cox interval needs at least two samples")
    mean, s2 = weighted_mean_var(theta, weights)
    if center is None:
        center = math.exp(mean)
    half = _z(alpha, 1.96) * math.sqrt(s2 / n + s2**2 / (2.0 * (n - 1)))
    shift = s2 / 2.0
    return center * math.exp(shift - half), center * math.exp(shift + half)


def confidence_interval(
    theta,
    interval_type="percentile",
    alpha=0.05,
    weights=None,
    precision=None,
    theta_hat=None,
    center=None,
    row_estimates=None,
):
    """Dispatch to one of the three interval constructions.

    ``theta`` are the row-combined log estimates.  ``row_estimates`` (their
    exponentials, possibly computed more exactly by the caller) feed the
    percentile interval; ``precision`` is needed for ``var``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    theta = np.asarray(theta, dtype=float)
    if interval_type == "percentile":
        if row_estimates is None:
            row_estimates = np.exp(theta)
        return percentile_interval(row_estimates, alpha, weights)
    if theta.size < 2:
        raise ValueError(f"the {interval_type} interval needs at least two samples")
    if interval_type == "var":
        if precision is None:
            raise ValueError("the var interval needs the column precision matrix")
        if theta_hat is None:
            theta_hat = weighted_mean_var(theta, weights)[0]
        return var_interval(theta_hat, precision, alpha, center)
    if interval_type == "cox":
        return cox_interval(theta, alpha, weights, center)
    raise ValueError(
        f"unknown interval type {interval_type!r}; choose from {INTERVAL_TYPES}"
    )

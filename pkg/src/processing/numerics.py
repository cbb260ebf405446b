"""Numeric kernels shared by every analysis.

Centering, PCA through the SVD of the centered data, the Moore-Penrose
pseudo-inverse, Pearson correlation, the F-distribution survival function and
one-way ANOVA. All functions are pure.
"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import betaln

from src.core.errors import DegenerateInputError

logger = logging.getLogger(__name__)

_CF_MAX_ITER = 10000
_CF_EPS = np.finfo(np.float64).eps
_CF_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Mean, eigenvectors (columns) and non-increasing eigenvalues."""

    mean: np.ndarray
    vectors: np.ndarray
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class FTest:
    """One-way ANOVA result."""

    f_ratio: float
    df_between: float
    df_within: float
    p_value: float
    r_squared: float
    ss_between: float
    ss_within: float

    @property
    def ss_total(self) -> float:
        return self.ss_between + self.ss_within


def center(data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (centered data, column mean)."""
    matrix = np.asarray(data, dtype=np.float64)
    mean = matrix.mean(axis=0)
    return matrix - mean, mean


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation of two equal-length vectors.

    Raises:
        DegenerateInputError: If either input has zero variance
    """
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError(f"pearson needs two vectors of equal length >= 2, got {a.shape} and {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0.0 or sb == 0.0:
        raise DegenerateInputError("pearson: zero-variance input")
    r = float(da @ db) / (sa * sb)
    return max(-1.0, min(1.0, r))


def eigendecompose(data: np.ndarray) -> EigenBasis:
    """PCA of ``data`` (rows are observations) via SVD of the centered matrix.

    Eigenvalues use the N-1 divisor. Each eigenvector is signed so that its
    largest-magnitude component is positive.
    """
    centered, mean = center(data)
    n, d = centered.shape
    if n < 2:
        raise ValueError(f"eigendecompose needs at least 2 rows, got {n}")

    # full_matrices only when N < D, so Vt is always D x D without an N x N U
    _, s, vt = np.linalg.svd(centered, full_matrices=n < d)
    vectors = vt.T
    values = np.zeros(d)
    values[: s.size] = s ** 2 / (n - 1)
    values[values < 0] = 0.0

    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(d)])
    signs[signs == 0] = 1.0
    vectors = vectors * signs

    return EigenBasis(mean=mean, vectors=vectors, values=values)


def pseudo_inverse(matrix: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values at or below ``max(M, N) * eps * s_max`` are treated as zero.
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size == 0:
        return np.zeros(x.shape[::-1])
    cutoff = max(x.shape) * np.finfo(np.float64).eps * s[0]
    inv = np.zeros_like(s)
    keep = s > cutoff
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= _CF_EPS:
            return h
    raise ArithmeticError(f"Incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError(f"Beta parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - float(betaln(a, b))
    # symmetry switch keeps the fraction in its fast-converging region
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_continued_fraction(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_continued_fraction(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper-tail probability P(F > f) of the F(d1, d2) distribution."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError(f"Degrees of freedom must be positive, got d1={d1}, d2={d2}")
    if math.isnan(f):
        raise ValueError("f_sf: statistic is NaN")
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    # P(F > f) = I_{d2/(d2+d1 f)}(d2/2, d1/2)
    x = d2 / (d2 + d1 * f)
    p = regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x)
    return min(1.0, max(0.0, p))


def _group_codes(groups: Sequence) -> Tuple[np.ndarray, int]:
    codes, uniques = pd.factorize(np.asarray(groups, dtype=object), sort=True)
    if (codes < 0).any():
        raise ValueError("Group labels may not be missing")
    return codes, len(uniques)


def _anova_sums(values: np.ndarray, codes: np.ndarray, k: int):
    """Per-column group counts, group means, SS_between, SS_within and residuals."""
    counts = np.bincount(codes, minlength=k).astype(np.float64)
    sums = pd.DataFrame(values).groupby(codes, sort=True).sum().to_numpy()
    group_means = sums / counts[:, None]
    grand_mean = values.mean(axis=0)
    ss_between = (counts[:, None] * (group_means - grand_mean) ** 2).sum(axis=0)
    resid = values - group_means[codes]
    ss_within = (resid ** 2).sum(axis=0)
    return counts, group_means, ss_between, ss_within, resid


def _pooled_test(ss_between: float, ss_within: float, df_b: float, df_w: float) -> FTest:
    ss_total = ss_between + ss_within
    if ss_total <= 0.0:
        raise DegenerateInputError("one_way_anova: all observations identical")
    if ss_within == 0.0:
        f_ratio = math.inf if ss_between > 0 else 0.0
    else:
        f_ratio = (ss_between / df_b) / (ss_within / df_w)
    return FTest(
        f_ratio=float(f_ratio),
        df_between=float(df_b),
        df_within=float(df_w),
        p_value=f_sf(f_ratio, df_b, df_w),
        r_squared=float(min(1.0, max(0.0, ss_between / ss_total))),
        ss_between=float(ss_between),
        ss_within=float(ss_within),
    )


def _welch_test(values: np.ndarray, codes: np.ndarray, counts: np.ndarray,
                group_means: np.ndarray, ss_between: float, ss_within: float,
                resid: np.ndarray) -> FTest:
    """Welch's heteroscedastic one-way test for one column."""
    k = counts.size
    if (counts < 2).any():
        raise DegenerateInputError("Welch ANOVA needs at least 2 observations per group")
    group_ss = np.bincount(codes, weights=resid ** 2, minlength=k)
    variances = group_ss / (counts - 1)
    if (variances <= 0).any():
        raise DegenerateInputError("Welch ANOVA needs non-zero variance in every group")
    weights = counts / variances
    total_w = weights.sum()
    weighted_mean = (weights * group_means).sum() / total_w
    a = (weights * (group_means - weighted_mean) ** 2).sum() / (k - 1)
    lam = ((1 - weights / total_w) ** 2 / (counts - 1)).sum()
    b = 1 + 2 * (k - 2) / (k ** 2 - 1) * lam
    f_ratio = a / b
    df_w = (k ** 2 - 1) / (3 * lam)
    ss_total = ss_between + ss_within
    return FTest(
        f_ratio=float(f_ratio),
        df_between=float(k - 1),
        df_within=float(df_w),
        p_value=f_sf(float(f_ratio), k - 1, float(df_w)),
        r_squared=float(ss_between / ss_total),
        ss_between=float(ss_between),
        ss_within=float(ss_within),
    )


def one_way_anova(values: Sequence[float], groups: Sequence, pooled_error: bool = True) -> FTest:
    """One-way ANOVA of ``values`` grouped by ``groups``.

    With ``pooled_error`` (the default) the within-group sums of squares are
    pooled over groups; singleton groups add to SS_between only. Without it,
    Welch's test is used (real-valued within df).

    Raises:
        DegenerateInputError: If every observation is identical
    """
    column = np.asarray(values, dtype=np.float64)
    if column.ndim != 1:
        raise ValueError("one_way_anova expects a 1-D vector of values")
    return anova_columns(column[:, None], groups, pooled_error=pooled_error)[0]


def anova_columns(matrix: np.ndarray, groups: Sequence, pooled_error: bool = True) -> list:
    """Column-wise :func:`one_way_anova`; degenerate columns yield ``None``.

    A single-column call raises instead of returning ``None``.
    """
    values = np.asarray(matrix, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("anova_columns expects an N x K matrix")
    codes, k = _group_codes(groups)
    n = values.shape[0]
    if codes.size != n:
        raise ValueError(f"Got {codes.size} group labels for {n} observations")
    counts = np.bincount(codes, minlength=k)
    if k < 2:
        raise DegenerateInputError("one_way_anova needs at least 2 groups")
    if counts.max() < 2:
        raise DegenerateInputError("one_way_anova needs a group with at least 2 observations")

    counts_f, group_means, ss_between, ss_within, resid = _anova_sums(values, codes, k)
    df_b = k - 1
    df_w = n - k
    # rounding noise of a constant column stays below this
    noise_floor = n * (8 * np.finfo(np.float64).eps * np.abs(values).max(axis=0)) ** 2

    results = []
    for j in range(values.shape[1]):
        try:
            if ss_between[j] + ss_within[j] <= noise_floor[j]:
                raise DegenerateInputError("one_way_anova: all observations identical")
            if pooled_error:
                results.append(_pooled_test(ss_between[j], ss_within[j], df_b, df_w))
            else:
                if ss_between[j] + ss_within[j] <= 0.0:
                    raise DegenerateInputError("one_way_anova: all observations identical")
                results.append(_welch_test(values[:, j], codes, counts_f, group_means[:, j],
                                           ss_between[j], ss_within[j], resid[:, j]))
        except DegenerateInputError:
            if values.shape[1] == 1:
                raise
            logger.debug(f"Column {j} is degenerate; skipped")
            results.append(None)
    return results


__all__ = [
    'EigenBasis', 'FTest', 'center', 'pearson', 'eigendecompose', 'pseudo_inverse',
    'regularized_incomplete_beta', 'f_sf', 'one_way_anova', 'anova_columns'
]

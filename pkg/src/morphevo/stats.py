"""Statistical helpers used by the experiment harness.

Self-contained on purpose: the two-sample t test (with its incomplete-
beta p-value) and the Pearson correlation are implemented here rather
than pulled from scipy, so experiment outputs do not drift with library
versions.  The test suite cross-checks both against naive reference
implementations and (where available) scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "TTestMethod",
    "TTestReport",
    "t_test",
    "pearson",
    "ci95",
    "threshold_crossings",
    "regularized_incomplete_beta",
]

# Pooled-variance Student's t assumes comparable variances; beyond this
# max/min sample-variance ratio we fall back to Welch's unequal-variance
# form and flag the report.
VARIANCE_RATIO_LIMIT = 4.0

# Two-sided 95% normal quantile, used by ci95 (normal approximation).
_Z95 = 1.96


class TTestMethod(Enum):
    STUDENT_POOLED = "student_pooled"
    WELCH = "welch"


@dataclass(frozen=True)
class TTestReport:
    """Outcome of a two-sample t test.

    Attributes:
        t_statistic: signed statistic for ``mean(a) - mean(b)``.
        p_value: two-sided p.
        df: degrees of freedom (integer-valued for the pooled form,
            fractional for Welch).
        variance_ratio: max/min of the two sample variances (``inf`` when
            one variance is zero, ``1.0`` when both are).
        method: which statistic was computed; Welch implies the variance
            comparability assumption failed.
        degenerate: True when both sample variances are zero, in which
            case ``t``/``p`` are the limiting values (0/1 for equal
            means, ``+-inf``/0 otherwise).
    """

    t_statistic: float
    p_value: float
    df: float
    variance_ratio: float
    method: TTestMethod
    degenerate: bool = False


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz).

    Evaluates the even/odd-term continued fraction that multiplies the
    prefactor in the standard series; converges in a few dozen terms for
    the t-test arguments used here (df up to ~1000).
    """
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise RuntimeError(f"incomplete beta continued fraction failed for a={a} b={b} x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].

    Uses the symmetry split at ``x = (a + 1) / (a + b + 2)`` so the
    continued fraction is always evaluated in its fast-converging regime.
    Absolute accuracy is ~1e-14 for the argument ranges the t test needs.
    """
    if not (a > 0.0 and b > 0.0):
        raise ValueError("incomplete beta requires a > 0 and b > 0")
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"incomplete beta requires x in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _student_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value for a t statistic via the incomplete beta."""
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(0.5 * df, 0.5, x)


def _check_sample(name: str, arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 1 or a.size < 2:
        raise ValueError(f"{name} must be a 1-D sample with at least 2 values")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def t_test(a: np.ndarray, b: np.ndarray) -> TTestReport:
    """Two-sample t test for a difference in means.

    Uses the pooled-variance Student form when the sample variances are
    comparable (max/min ratio below :data:`VARIANCE_RATIO_LIMIT`) and
    falls back to Welch's statistic with Welch-Satterthwaite degrees of
    freedom otherwise; the report's ``method`` field says which was used.

    Args:
        a, b: 1-D samples, each with at least two finite values.

    Returns:
        :class:`TTestReport`.  Swapping the samples flips the sign of
        ``t`` and leaves ``p`` unchanged.
    """
    xa = _check_sample("a", a)
    xb = _check_sample("b", b)
    na, nb = xa.size, xb.size
    ma = float(np.mean(xa))
    mb = float(np.mean(xb))
    va = float(np.var(xa, ddof=1))
    vb = float(np.var(xb, ddof=1))

    lo, hi = min(va, vb), max(va, vb)
    if hi == 0.0:
        # Both samples constant: no within-group variability at all.
        ratio = 1.0
        df = float(na + nb - 2)
        if ma == mb:
            return TTestReport(0.0, 1.0, df, ratio, TTestMethod.STUDENT_POOLED, degenerate=True)
        t = math.inf if ma > mb else -math.inf
        return TTestReport(t, 0.0, df, ratio, TTestMethod.STUDENT_POOLED, degenerate=True)
    ratio = math.inf if lo == 0.0 else hi / lo

    if ratio < VARIANCE_RATIO_LIMIT:
        df = float(na + nb - 2)
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
        method = TTestMethod.STUDENT_POOLED
    else:
        wa, wb = va / na, vb / nb
        se = math.sqrt(wa + wb)
        df = (wa + wb) ** 2 / (wa**2 / (na - 1) + wb**2 / (nb - 1))
        method = TTestMethod.WELCH
    t = (ma - mb) / se
    return TTestReport(t, _student_two_sided_p(t, df), df, ratio, method)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson product-moment correlation.

    Returns NaN when either input has zero variance (the coefficient is
    undefined there); callers that aggregate correlations are expected to
    skip NaNs and count them separately.  The result is clamped to
    ``[-1, 1]`` to absorb last-bit rounding.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1 or xa.size < 2:
        raise ValueError("pearson requires two 1-D arrays of equal length >= 2")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValueError("pearson requires finite values")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def ci95(samples_by_repeat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean curve with a normal-approximation 95% band.

    Args:
        samples_by_repeat: (repeats, points) matrix, one row per repeat.
            Needs at least 2 repeats.

    Returns:
        ``(mean, lower, upper)`` arrays of length ``points`` where the
        band half-width is ``1.96 * sd / sqrt(repeats)`` (sd with
        ``ddof=1``).
    """
    m = np.asarray(samples_by_repeat, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("ci95 needs a (repeats, points) matrix with >= 2 repeats")
    mean = m.mean(axis=0)
    half = _Z95 * m.std(axis=0, ddof=1) / math.sqrt(m.shape[0])
    return mean, mean - half, mean + half


def threshold_crossings(series: np.ndarray, thresholds: list[float]) -> list[int | None]:
    """First index at which ``series`` reaches each threshold.

    Args:
        series: 1-D array (e.g. best fitness per generation).
        thresholds: values to test with ``>=``.

    Returns:
        One entry per threshold: the first index ``i`` with
        ``series[i] >= threshold``, or ``None`` if never reached.
    """
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1:
        raise ValueError("series must be 1-D")
    out: list[int | None] = []
    for thr in thresholds:
        hit = np.nonzero(s >= thr)[0]
        out.append(int(hit[0]) if hit.size else None)
    return out

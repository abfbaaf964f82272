"""Student-t tail probabilities and the one-tailed paired t-test.

The t CDF is computed through the regularized incomplete beta function
(continued-fraction evaluation, absolute accuracy well below 1e-10), which
keeps the significance machinery self-contained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MAX_CF_ITERATIONS = 300
_CF_EPS = 1e-15
_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz evaluation of the continued fraction for I_x(a, b)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError(f"beta parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """Upper-tail probability P(T_df >= t)."""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t >= 0 else 1.0 - tail


@dataclass(frozen=True)
class TTestResult:
    """One-tailed paired test of mean(a) > mean(b)."""

    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    alternative: str = "mean(a) > mean(b)"
    degenerate: bool = False


def paired_t_test_one_tailed(a, b) -> TTestResult:
    """t = mean(d) / (sd(d) / sqrt(n)) for d = a - b, sample sd (n-1), with
    the upper-tail p-value at df = n - 1.

    All-zero differences leave the statistic undefined and raise; zero
    spread around a nonzero mean yields a degenerate result with p of 0 or
    1 by direction.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must be equal-length vectors, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError(f"paired t-test needs at least 2 pairs, got {n}")
    d = a - b
    mean_d = float(np.mean(d))
    sd_d = float(np.std(d, ddof=1))
    df = n - 1
    if sd_d == 0.0:
        if mean_d == 0.0:
            raise ValueError("t statistic undefined: all paired differences are zero")
        t = math.inf if mean_d > 0 else -math.inf
        return TTestResult(t, df, 0.0 if mean_d > 0 else 1.0, degenerate=True)
    t = mean_d / (sd_d / math.sqrt(n))
    return TTestResult(t, df, student_t_sf(t, df))

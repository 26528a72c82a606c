"""
One-way ANOVA with p-values from the regularized incomplete beta function,
plus the Student-t quantile used for confidence intervals.
"""
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MAX_ITERATIONS = 300
TOLERANCE = 1e-12
TINY = 1e-300


class ConvergenceError(ArithmeticError):
    pass


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < TOLERANCE:
            return h
    raise ConvergenceError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        value = front * _beta_continued_fraction(a, b, x) / a
    else:
        value = 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b
    return min(max(value, 0.0), 1.0)


def f_sf(f_value: float, df_between: float, df_within: float) -> float:
    """P(F > f_value) for an F(df_between, df_within) variable."""
    if f_value <= 0.0:
        return 1.0
    if math.isinf(f_value):
        return 0.0
    x = df_within / (df_within + df_between * f_value)
    return reg_inc_beta(df_within / 2.0, df_between / 2.0, x)


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t >= 0 else tail


def t_quantile(p: float, df: float) -> float:
    """Inverse Student-t CDF by bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AnovaResult:
    f_value: float
    p_value: float
    df_between: int
    df_within: int


def anova(groups: Iterable[Sequence[float]]) -> AnovaResult:
    samples = [np.asarray(getattr(group, "values", group), dtype=np.float64) for group in groups]
    if len(samples) < 2:
        raise ValueError("anova needs at least two groups")
    if any(len(values) < 2 for values in samples):
        raise ValueError("every group needs at least two samples")
    total = sum(len(values) for values in samples)
    df_between = len(samples) - 1
    df_within = total - len(samples)
    grand = np.concatenate(samples).mean()
    means = [values.mean() for values in samples]
    ss_between = float(sum(len(values) * (mean - grand) ** 2 for values, mean in zip(samples, means)))
    ss_within = float(sum(((values - mean) ** 2).sum() for values, mean in zip(samples, means)))
    if ss_within == 0.0:
        if ss_between == 0.0:
            return AnovaResult(0.0, 1.0, df_between, df_within)
        return AnovaResult(math.inf, 0.0, df_between, df_within)
    f_value = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(f_value, f_sf(f_value, df_between, df_within), df_between, df_within)

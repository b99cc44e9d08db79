"""Statistical primitives: incomplete beta, ANOVA, Pearson, distances.

p-values come from the F and t distributions through a regularized
incomplete beta evaluated with the Lentz continued fraction, accurate to
better than 1e-8 over the degrees of freedom used here.
"""

import math

import numpy as np

SCALE_FLOOR = 1e-8


def _beta_cf(a, b, x):
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 500):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
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
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        - (math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_sf(f, df1, df2):
    """Survival function P(F' >= f) of the F distribution."""
    if df1 <= 0 or df2 <= 0:
        raise ValueError("degrees of freedom must be positive")
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return reg_inc_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def t_sf_two_sided(t, df):
    """Two-sided p-value P(|T| >= |t|) of Student's t distribution."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))


def anova_oneway(groups):
    """One-way ANOVA: F statistic and p-value across >= 2 groups."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    if any(g.size < 2 for g in groups):
        raise ValueError("each group needs at least 2 samples")
    k = len(groups)
    n_total = sum(g.size for g in groups)
    grand = sum(g.sum() for g in groups) / n_total
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    df1, df2 = k - 1, n_total - k
    if ss_within <= 0.0:
        if ss_between <= 1e-300:
            return 0.0, 1.0
        raise ValueError("degenerate groups: zero within-group variance with unequal means")
    f = (ss_between / df1) / (ss_within / df2)
    return float(f), f_sf(f, df1, df2)


def pearson(x, y):
    """Sample Pearson correlation with a t-test two-sided p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.dot(xc, xc))
    sy = float(np.dot(yc, yc))
    if sx <= 0.0 or sy <= 0.0:
        raise ValueError("zero variance input")
    rho = float(np.dot(xc, yc) / math.sqrt(sx * sy))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, t_sf_two_sided(t, n - 2)


def standardized_euclidean(a, b, scale):
    """sqrt(sum(((a - b) / scale)^2)) with per-feature scales floored at 1e-8."""
    a = np.asarray(getattr(a, "as_array", lambda: a)(), dtype=np.float64)
    b = np.asarray(getattr(b, "as_array", lambda: b)(), dtype=np.float64)
    scale = np.maximum(np.asarray(scale, dtype=np.float64), SCALE_FLOOR)
    if a.shape != b.shape or a.shape != scale.shape:
        raise ValueError("a, b and scale must share one shape")
    return float(np.sqrt((((a - b) / scale) ** 2).sum()))

"""Statistical kernels: Pearson correlation, Shapiro-Wilk, Breusch-Pagan."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import chi2, norm


def pearson(x, y) -> float:
    """Sample Pearson coefficient; NaN when either series has zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two equally long 1-D series")
    if x.size < 3:
        raise ValueError("pearson needs at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return math.nan
    # separate roots: the product of two tiny sums can underflow to zero
    r = float(dx @ dy) / (math.sqrt(sxx) * math.sqrt(syy))
    return max(-1.0, min(1.0, r))


# polynomial approximations for the coefficients and the W -> z transform
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _poly(c, u):
    return sum(ci * u**i for i, ci in enumerate(c))


def shapiro_wilk(x):
    """``(W, p)`` of the Shapiro-Wilk normality test for 3 <= n <= 5000.

    Coefficients and p-values use the polynomial approximations of Royston's
    algorithm; tied values are kept in sorted order.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    if not 3 <= n <= 5000:
        raise ValueError(f"shapiro_wilk needs 3 <= n <= 5000, got {n}")
    if x[-1] - x[0] == 0.0:
        raise ValueError("shapiro_wilk is undefined for a constant sample")
    if n == 3:
        a = np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    else:
        m = norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
        mm = float(m @ m)
        u = 1.0 / math.sqrt(n)
        c = m / math.sqrt(mm)
        a = np.empty(n)
        an = c[-1] + _poly(_C1, u)
        if n > 5:
            an1 = c[-2] + _poly(_C2, u)
            phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * an**2 - 2 * an1**2)
            a[2:-2] = m[2:-2] / math.sqrt(phi)
            a[-2], a[1] = an1, -an1
        else:
            phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * an**2)
            a[1:-1] = m[1:-1] / math.sqrt(phi)
        a[-1], a[0] = an, -an
    xc = x - x.mean()
    w = float(a @ x) ** 2 / float(xc @ xc)
    w = min(w, 1.0)
    return w, _sw_pvalue(w, n)


def _sw_pvalue(w, n):
    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        return max(p, 0.0)
    if w >= 1.0:
        return 1.0
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        arg = gamma - math.log1p(-w)
        if arg <= 0:
            return 0.0
        z = (-math.log(arg) - mu) / sigma
    else:
        ln = math.log(n)
        mu = 0.0038915 * ln**3 - 0.083751 * ln**2 - 0.31082 * ln - 1.5861
        sigma = math.exp(0.0030302 * ln**2 - 0.082676 * ln - 0.4803)
        z = (math.log1p(-w) - mu) / sigma
    return float(norm.sf(z))


def _ols(design, y):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef, y - design @ coef


def breusch_pagan(x, y):
    """``(LM, p)``: regress squared OLS residuals of ``y ~ x`` on ``x``; LM = n * R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("breusch_pagan needs two equally long 1-D series")
    n = x.size
    if n < 4:
        raise ValueError("breusch_pagan needs at least 4 observations")
    design = np.column_stack([np.ones(n), x])
    if np.linalg.matrix_rank(design) < 2:
        raise ValueError("singular regression: predictor is constant")
    _, resid = _ols(design, y)
    e2 = resid**2
    _, r_aux = _ols(design, e2)
    sst = float(((e2 - e2.mean()) ** 2).sum())
    # constant squared residuals leave nothing to explain
    scale = max(float(np.abs(e2).max()), 1e-300)
    if sst <= (1e-12 * scale) ** 2 * n:
        r2 = 0.0
    else:
        r2 = max(0.0, 1.0 - float(r_aux @ r_aux) / sst)
    lm = n * r2
    return lm, float(chi2.sf(lm, 1))

"""F distribution CDF and quantile.

The CDF goes through the regularized incomplete beta function; the quantile
inverts it with a bracketed Newton iteration.  Upper-tail probabilities are
solved on the complementary beta so that 1 - x never cancels.
"""
from __future__ import annotations

import math

from scipy import special

from .errors import ConvergenceError, InputError

MAX_ITER = 200


def f_cdf(x: float, d1: float, d2: float) -> float:
    if x <= 0.0:
        return 0.0
    if d1 * x > d2:
        return 1.0 - f_sf(x, d1, d2)
    return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


def f_sf(x: float, d1: float, d2: float) -> float:
    if x <= 0.0:
        return 1.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2)))


def _beta_inverse(q: float, a: float, b: float) -> float:
    """Solve I_y(a, b) = q for y in (0, 1)."""
    lo, hi = 0.0, 1.0
    lnorm = special.betaln(a, b)
    y = a / (a + b)
    for _ in range(MAX_ITER):
        err = float(special.betainc(a, b, y)) - q
        if err == 0.0:
            return y
        if err > 0.0:
            hi = y
        else:
            lo = y
        logpdf = (a - 1.0) * math.log(y) + (b - 1.0) * math.log1p(-y) - lnorm
        pdf = math.exp(min(logpdf, 700.0))
        nxt = y - err / pdf if pdf > 0.0 else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - y) <= 1e-15 * max(y, 1e-300) or hi - lo <= 1e-300:
            return nxt
        y = nxt
    raise ConvergenceError(f"incomplete beta inversion did not converge (q={q}, a={a}, b={b})")


def f_quantile(prob: float, d1: float, d2: float) -> float:
    """Value x with P(F <= x) = prob for F ~ F(d1, d2)."""
    if not 0.0 < prob < 1.0:
        raise InputError(f"probability must lie in (0, 1), got {prob}")
    if d1 < 1 or d2 < 1:
        raise InputError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if prob <= 0.5:
        y = _beta_inverse(prob, d1 / 2.0, d2 / 2.0)
        return d2 * y / (d1 * (1.0 - y))
    # P(F > x) = I_w(d2/2, d1/2) with w = d2 / (d1 x + d2)
    w = _beta_inverse(1.0 - prob, d2 / 2.0, d1 / 2.0)
    return d2 * (1.0 - w) / (d1 * w)

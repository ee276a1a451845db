"""Scalar special-function numerics: regularized incomplete beta and log-binomials.

The incomplete beta function is evaluated with the classical continued-fraction
expansion (modified Lentz iteration), switching to the symmetric form
``I_x(a, b) = 1 - I_{1-x}(b, a)`` when ``x > (a + 1)/(a + b + 2)`` so the
fraction converges fast on either side. Binomial coefficients are always taken
in log space through ``lgamma``; factorials overflow long before the sample
sizes used here.
"""

from __future__ import annotations

import math

_CF_EPS = 1e-15
_CF_MAX_ITER = 500
_FPMIN = 1e-300


def log_binomial(n: int, k: int) -> float:
    """log C(n, k) via log-gamma."""
    if k < 0 or k > n:
        raise ValueError(f"k={k} outside [0, {n}]")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta integral (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise RuntimeError(f"incomplete beta continued fraction failed to converge "
                       f"for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, front * _beta_cf(a, b, x) / a)
    return max(0.0, 1.0 - front * _beta_cf(b, a, 1.0 - x) / b)


def beta_interval_mass(a: float, b: float, lo: float, hi: float) -> float:
    """Probability mass a Beta(a, b) variable places on [lo, hi] ∩ [0, 1]."""
    lo = max(lo, 0.0)
    hi = min(hi, 1.0)
    if hi <= lo:
        return 0.0
    return max(0.0, regularized_incomplete_beta(a, b, hi)
               - regularized_incomplete_beta(a, b, lo))


def binomial_tail(n: int, k: int, p: float) -> float:
    """Lower binomial tail P(X <= k) for X ~ Binomial(n, p), summed in log space."""
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if p < 0.0 or p > 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if k == n or p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    total = 0.0
    for i in range(k + 1):
        total += math.exp(log_binomial(n, i) + i * log_p + (n - i) * log_q)
    return min(total, 1.0)

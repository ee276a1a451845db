"""Generalization-bound numerics.

Two families of bounds share this module:

* the preferent sample-compression bound
  ``eps = 1 - (delta / C(n, k))**(1/(n-k))``,
  which bounds the probability mass on which a hypothesis trained through a
  stable compression of size ``k`` out of ``n`` samples can still err, with
  confidence ``1 - delta``;
* scenario-optimization bounds for level-set calibration baselines: the
  zero-violation closed form ``1 - beta**(1/N)`` and its relaxed variant that
  admits ``k`` violations by inverting the lower binomial tail.

Everything is evaluated in log space; binomial coefficients never go through
factorials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .special import binomial_tail, log_binomial

_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class BoundQuery:
    """A (dataset size, compression-or-violation count, confidence) triple."""

    n: int
    k: int
    confidence_param: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need at least one sample, got n={self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"k={self.k} outside [0, {self.n}]")
        if not 0.0 < self.confidence_param < 1.0:
            raise ValueError(
                f"confidence parameter {self.confidence_param} outside (0, 1)")


def _validate(n: int, k: int, confidence: float) -> None:
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside [0, {n}]")
    if not 0.0 < confidence <= 1.0:
        raise ValueError(f"confidence parameter {confidence} outside (0, 1]")


def compression_bound(n: int, k: int, delta: float) -> float:
    """Preferent-compression generalization bound, clamped to [0, 1].

    Parameters
    ----------
    n : int
        Number of IID samples the compression was selected from.
    k : int
        Size of the compression set.
    delta : float
        Confidence parameter in (0, 1]; the bound holds with probability
        ``1 - delta`` over the dataset draw.
    """
    _validate(n, k, delta)
    if k == n:
        return 1.0
    log_ratio = (math.log(delta) - log_binomial(n, k)) / (n - k)
    return min(1.0, max(0.0, -math.expm1(log_ratio)))


def scenario_bound_zero_violation(n: int, beta: float) -> float:
    """Scenario bound for a zero-violation calibration: ``1 - beta**(1/N)``."""
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta={beta} outside (0, 1]")
    return -math.expm1(math.log(beta) / n)


def scenario_bound_with_violations(n: int, k: int, beta: float) -> float:
    """Smallest eps in (0, 1) with ``P(Binomial(n, eps) <= k) <= beta``.

    The lower binomial tail is monotone decreasing in eps, so the root is
    isolated by bisection to ``1e-10``. ``k = 0`` reproduces the closed form
    of :func:`scenario_bound_zero_violation`; ``k = n`` returns the vacuous
    bound 1.
    """
    _validate(n, k, beta)
    if k == n:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if binomial_tail(n, k, mid) <= beta:
            hi = mid
        else:
            lo = mid
    return hi

"""Split-conformal calibration of acquisition scores into approximate errors.

Given the binary error e_h(z) of the current hypothesis on a held-out
calibration set C, the nonconformity score of each calibration sample is

    s(z) = |e_h(z) - a(z_x)| / mu(z_x),

and lambda is the ceil((1-alpha)(n_C+1))-th smallest score. The calibrated
approximate error

    e_hat(x) = a(x) + lambda * mu(x) + sigma(x)

then upper-bounds e_h on a fresh sample with probability at least 1 - alpha
over the draw of C (marginally). sigma is the strictly positive tie-break
perturbation, so e_hat > a + lambda*mu pointwise.

``size_calibration_set`` picks n_C so that empirical coverage concentrates:
the coverage attained by the split-conformal quantile over random calibration
draws follows a Beta distribution, and n_C is the smallest size placing
1 - beta of that mass within eps_alpha of the nominal level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .acquisition import AcquisitionState, acquire, heuristic_mu, tiebreak_sigma
from .gp import GpModel, sign_errors
from .systems import LabeledSample, OracleMeter, SystemSpec, label_states, sample_states

_MAX_NC_SCAN = 10 ** 7


class CalibrationSetTooSmallError(ValueError):
    """The conformal quantile index exceeds the calibration-set size."""

    def __init__(self, n_c: int, alpha: float, minimum: int):
        super().__init__(
            f"calibration set of size {n_c} cannot support alpha={alpha}; "
            f"need at least {minimum} samples")
        self.minimum = minimum


class InfeasibleToleranceError(RuntimeError):
    """No calibration-set size up to the scan cap meets the mass target."""


@dataclass(frozen=True)
class CalibrationSet:
    """Held-out labeled samples z^C, IID uniform over the sliced subspace."""

    samples: tuple

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        if not samples:
            raise ValueError("calibration set must be nonempty")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "states",
                           np.array([s.x for s in samples], dtype=float))
        object.__setattr__(self, "values",
                           np.array([s.value for s in samples], dtype=float))

    @property
    def n_c(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ConformalBand:
    """The calibrated multiplier lambda at miscoverage level alpha."""

    lam: float
    alpha: float

    def __post_init__(self) -> None:
        if self.lam < 0.0:
            raise ValueError("lambda must be nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha={self.alpha} outside (0, 1)")


def min_calibration_size(alpha: float) -> int:
    """Smallest n_C for which the quantile index is attainable."""
    return math.ceil(1.0 / alpha) - 1


def quantile_index(alpha: float, n_c: int) -> int:
    """1-indexed order statistic k = ceil((1-alpha)(n_C+1)), validated."""
    k = math.ceil(round((1.0 - alpha) * (n_c + 1), 10))
    if k > n_c:
        raise CalibrationSetTooSmallError(n_c, alpha, min_calibration_size(alpha))
    return k


def draw_calibration_set(system: SystemSpec, n_c: int, rng: np.random.Generator,
                         meter: Optional[OracleMeter] = None) -> CalibrationSet:
    """Sample and label n_C fresh IID states (separate stream from D)."""
    xs = sample_states(system, n_c, rng)
    vals = label_states(system, xs, meter=meter)
    return CalibrationSet(samples=tuple(
        LabeledSample(x=xs[i], value=float(vals[i])) for i in range(n_c)))


def scores(model: GpModel, acq: AcquisitionState, cal: CalibrationSet,
           norm_xs: Optional[np.ndarray] = None) -> np.ndarray:
    """Nonconformity scores of the calibration samples under (h, eta)."""
    e = sign_errors(model, cal.states, cal.values)
    a = acquire(acq, model, cal.states, norm_xs=norm_xs)
    mu = heuristic_mu(acq, a)
    return np.abs(e - a) / mu


def calibrate_lambda(score_values: np.ndarray, alpha: float) -> ConformalBand:
    """lambda = the k-th smallest score, k = ceil((1-alpha)(n_C+1))."""
    s = np.sort(np.asarray(score_values, dtype=float))
    k = quantile_index(alpha, s.size)
    return ConformalBand(lam=float(s[k - 1]), alpha=alpha)


def approx_error(model: GpModel, acq: AcquisitionState, band: ConformalBand,
                 xs: np.ndarray, norm_xs: Optional[np.ndarray] = None) -> np.ndarray:
    """Calibrated approximate error e_hat = a + lambda*mu + sigma, elementwise."""
    a = acquire(acq, model, xs, norm_xs=norm_xs)
    mu = heuristic_mu(acq, a)
    sigma = tiebreak_sigma(acq, xs)
    return a + band.lam * mu + sigma


def coverage_window_mass(n: int, alpha: float, eps_alpha: float) -> float:
    """Beta-law mass of empirical coverage within eps_alpha of 1 - alpha.

    For a calibration set of size n the coverage of the split-conformal
    quantile is distributed Beta(n + 1 - l, l) with l = floor((n+1) alpha);
    l = 0 degenerates to coverage exactly 1, which lies in the window only
    when 1 <= 1 - alpha + eps_alpha.
    """
    from .special import beta_interval_mass

    lo = 1.0 - alpha - eps_alpha
    hi = 1.0 - alpha + eps_alpha
    l = math.floor((n + 1) * alpha)
    if l == 0:
        return 1.0 if lo <= 1.0 <= hi else 0.0
    return beta_interval_mass(n + 1 - l, l, max(lo, 0.0), min(hi, 1.0))


def size_calibration_set(alpha: float, eps_alpha: float, beta: float) -> int:
    """Smallest n_C whose coverage law puts >= 1-beta mass in the window.

    Scans upward from the smallest feasible size, fast-forwarded by
    exponential bracketing; the returned n satisfies the mass condition
    while n - 1 (when scanned) does not.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    if not 0.0 < eps_alpha < min(alpha, 1.0 - alpha):
        raise ValueError(
            f"eps_alpha={eps_alpha} outside (0, min(alpha, 1-alpha))")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta={beta} outside (0, 1)")
    target = 1.0 - beta
    n0 = max(min_calibration_size(alpha), 1)
    # Exponential probes to find a satisfying bracket end.
    probe = n0
    last_fail = n0 - 1
    hit = None
    while probe <= _MAX_NC_SCAN:
        if coverage_window_mass(probe, alpha, eps_alpha) >= target:
            hit = probe
            break
        last_fail = probe
        probe *= 2
    if hit is None:
        raise InfeasibleToleranceError(
            f"no calibration size up to {_MAX_NC_SCAN} places {target} mass "
            f"within ±{eps_alpha} of {1 - alpha}")
    for n in range(last_fail + 1, hit):
        if coverage_window_mass(n, alpha, eps_alpha) >= target:
            return n
    return hit

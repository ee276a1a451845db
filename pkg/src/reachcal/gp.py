"""Gaussian-process value-function model with a prior mean hook.

The model regresses residuals ``label - prior_mean(x)`` under a squared
exponential kernel with per-dimension length scales, so the posterior mean
reverts to the prior far from data. The sign of the posterior mean is the
current reach-avoid set estimate; ``error``/``sign_errors`` implement the
binary misclassification indicator

    e_h(z) = 1  iff  h(x) * value <= 0 and h(x) != value,

i.e. the hypothesis errs when it disagrees with the sign of the ground-truth
value (with an escape clause when both are identical, covering the 0/0 case).

Fitting is a dense Cholesky solve; models are immutable after construction
and safe to share for prediction. On a numerically non-positive-definite Gram
matrix the fit escalates diagonal jitter from 1e-10 to 1e-4 before giving up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

from .systems import LabeledSample

_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


class IllConditionedKernelError(RuntimeError):
    """Cholesky factorization failed even at the maximum jitter."""


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential kernel hyperparameters."""

    length_scales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self) -> None:
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ls)
        if np.any(ls <= 0) or not np.all(np.isfinite(ls)):
            raise ValueError("length scales must be positive and finite")
        if self.signal_variance <= 0:
            raise ValueError("signal variance must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")


def default_kernel_config(system, initial_values: np.ndarray) -> KernelConfig:
    """Kernel defaults: length scale 0.25x the per-dimension range, signal
    variance from the initial labels (floored away from zero), noise 1e-6."""
    ranges = np.array([hi - lo for lo, hi in system.state_bounds])
    ls = np.maximum(0.25 * ranges, 1e-8)
    values = np.asarray(initial_values, dtype=float)
    var = float(np.var(values)) if values.size else 0.0
    return KernelConfig(length_scales=ls, signal_variance=max(var, 1e-4),
                        noise_variance=1e-6)


def _scaled(xs: np.ndarray, ls: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(xs, dtype=float)) / ls[None, :]


def _kernel(cfg: KernelConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    d2 = cdist(_scaled(xs, cfg.length_scales), _scaled(ys, cfg.length_scales),
               metric="sqeuclidean")
    return cfg.signal_variance * np.exp(-0.5 * d2)


@dataclass(frozen=True)
class GpModel:
    """An immutable fitted GP posterior over the value function."""

    kernel: KernelConfig
    prior_mean: Callable[[np.ndarray], np.ndarray]
    train_x: np.ndarray
    residuals: np.ndarray
    chol_lower: Optional[np.ndarray]
    alpha: Optional[np.ndarray]
    jitter: float

    @property
    def n_train(self) -> int:
        return self.train_x.shape[0]


def fit(prior_mean: Callable[[np.ndarray], np.ndarray],
        samples: Sequence[LabeledSample], hyper: KernelConfig) -> GpModel:
    """Exact GP posterior on residuals ``value - prior_mean(x)``.

    Duplicate states with identical values are collapsed; duplicates with
    conflicting values are rejected. An empty sample list yields the prior
    itself (mean = prior, variance = signal variance).
    """
    seen: dict = {}
    xs, vals = [], []
    for s in samples:
        key = np.asarray(s.x, dtype=float).tobytes()
        if key in seen:
            if seen[key] != s.value:
                raise ValueError("duplicate training state with conflicting values")
            continue
        seen[key] = s.value
        xs.append(np.asarray(s.x, dtype=float))
        vals.append(float(s.value))
    if not xs:
        return GpModel(kernel=hyper, prior_mean=prior_mean,
                       train_x=np.empty((0, hyper.length_scales.size)),
                       residuals=np.empty(0), chol_lower=None, alpha=None,
                       jitter=0.0)
    X = np.array(xs)
    if X.shape[1] != hyper.length_scales.size:
        raise ValueError("state dimension does not match kernel length scales")
    resid = np.array(vals) - np.asarray(prior_mean(X), dtype=float)
    K = _kernel(hyper, X, X)
    base = K + hyper.noise_variance * np.eye(X.shape[0])
    for jitter in _JITTERS:
        try:
            L = cholesky(base + jitter * np.eye(X.shape[0]), lower=True,
                         check_finite=False)
        except np.linalg.LinAlgError:
            continue
        alpha = cho_solve((L, True), resid, check_finite=False)
        return GpModel(kernel=hyper, prior_mean=prior_mean, train_x=X,
                       residuals=resid, chol_lower=L, alpha=alpha,
                       jitter=jitter)
    raise IllConditionedKernelError(
        f"Cholesky failed for {X.shape[0]} points even at jitter {_JITTERS[-1]}")


def predict(model: GpModel, xs: np.ndarray):
    """Posterior (mean, std) at each query row; prior mean added back."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    prior = np.asarray(model.prior_mean(xs), dtype=float)
    if model.n_train == 0:
        std = np.full(xs.shape[0], np.sqrt(model.kernel.signal_variance))
        return prior, std
    k_star = _kernel(model.kernel, xs, model.train_x)
    mean = prior + k_star @ model.alpha
    v = solve_triangular(model.chol_lower, k_star.T, lower=True,
                         check_finite=False)
    var = model.kernel.signal_variance - np.sum(v * v, axis=0)
    return mean, np.sqrt(np.maximum(var, 0.0))


def predict_mean(model: GpModel, xs: np.ndarray) -> np.ndarray:
    """Posterior mean only (skips the variance solve)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    prior = np.asarray(model.prior_mean(xs), dtype=float)
    if model.n_train == 0:
        return prior
    return prior + _kernel(model.kernel, xs, model.train_x) @ model.alpha


def predict_one(model: GpModel, x: np.ndarray):
    mean, std = predict(model, np.asarray(x, dtype=float)[None, :])
    return float(mean[0]), float(std[0])


def error(model: GpModel, sample: LabeledSample) -> int:
    """Binary sign-misclassification indicator e_h(z)."""
    h = predict_mean(model, sample.x[None, :])[0]
    return int(h * sample.value <= 0.0 and h != sample.value)


def sign_errors(model: GpModel, xs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Vectorized e_h over (states, values); returns a 0/1 integer array."""
    h = predict_mean(model, xs)
    values = np.asarray(values, dtype=float)
    return ((h * values <= 0.0) & (h != values)).astype(int)


def model_to_json(model: GpModel) -> str:
    """Serialize everything except the prior-mean callable."""
    doc = {
        "length_scales": model.kernel.length_scales.tolist(),
        "signal_variance": model.kernel.signal_variance,
        "noise_variance": model.kernel.noise_variance,
        "train_x": model.train_x.tolist(),
        "residuals": model.residuals.tolist(),
        "jitter": model.jitter,
    }
    return json.dumps(doc, sort_keys=True)


def model_from_json(doc: str, prior_mean: Callable[[np.ndarray], np.ndarray]) -> GpModel:
    """Rebuild a fitted model from its JSON document and the prior callable."""
    d = json.loads(doc)
    hyper = KernelConfig(length_scales=np.array(d["length_scales"]),
                         signal_variance=d["signal_variance"],
                         noise_variance=d["noise_variance"])
    X = np.array(d["train_x"], dtype=float).reshape(-1, hyper.length_scales.size)
    resid = np.array(d["residuals"], dtype=float)
    if X.shape[0] == 0:
        return GpModel(kernel=hyper, prior_mean=prior_mean, train_x=X,
                       residuals=resid, chol_lower=None, alpha=None, jitter=0.0)
    K = _kernel(hyper, X, X) + (hyper.noise_variance + d["jitter"]) * np.eye(X.shape[0])
    L = cholesky(K, lower=True, check_finite=False)
    alpha = cho_solve((L, True), resid, check_finite=False)
    return GpModel(kernel=hyper, prior_mean=prior_mean, train_x=X,
                   residuals=resid, chol_lower=L, alpha=alpha,
                   jitter=d["jitter"])

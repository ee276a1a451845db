"""Acquisition scores a_{h,eta}(x), their heuristic scale mu, and tie-break noise.

Two strategies are provided. ``boundary`` scores states by closeness of the
hypothesis mean to zero, ``1 - |h(x)| / max|h|``, so the next sample is drawn
from the least-certain region of the current level-set estimate. ``random``
scores by a uniform draw per (iteration, state). Both are decayed by
``zeta**iteration`` so scores eventually sink below any fixed threshold and
the surrounding loop must terminate.

All randomness is content-keyed: the random strategy's u(x) and the tie-break
sigma(x) are hashes of the state's bytes plus the run seed (and, for u, the
iteration counter), never of evaluation order. The same state therefore always
receives the same score within an iteration, which makes the induced order
over the state space a genuine total order and runs exactly replayable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import seeding
from .gp import GpModel, predict_mean

STRATEGIES = ("boundary", "random")


@dataclass(frozen=True)
class AcquisitionState:
    """Strategy plus the per-run randomness eta and the decay schedule."""

    strategy: str
    iteration: int = 0
    zeta: float = 0.95
    eta_seed: int = 0
    mu_floor: float = 1e-6
    sigma_scale: float = 1e-9

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy {self.strategy!r} not in {STRATEGIES}")
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError(f"zeta={self.zeta} outside [0, 1]")
        if self.iteration < 0:
            raise ValueError("iteration must be nonnegative")
        if self.mu_floor <= 0.0:
            raise ValueError("mu_floor must be positive")
        if self.sigma_scale <= 0.0:
            raise ValueError("sigma_scale must be positive")


def advance(state: AcquisitionState) -> AcquisitionState:
    """The eta-advance of the loop: bump the iteration counter."""
    return replace(state, iteration=state.iteration + 1)


def acquire(state: AcquisitionState, model: GpModel, xs: np.ndarray,
            norm_xs: Optional[np.ndarray] = None) -> np.ndarray:
    """Acquisition scores for each row of ``xs``, decayed by zeta**iteration.

    ``norm_xs`` optionally supplies the normalization reference set for the
    boundary strategy (the unlabeled dataset D); by default ``xs`` itself is
    the reference. Scores are clamped to [0, 1] before the decay, so the
    maximum achievable score at iteration i is zeta**i.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise ValueError("acquire needs at least one state")
    decay = state.zeta ** state.iteration
    if state.strategy == "boundary":
        abs_h = np.abs(predict_mean(model, xs))
        ref = abs_h if norm_xs is None else np.abs(predict_mean(model, norm_xs))
        max_abs = float(np.max(ref))
        if max_abs == 0.0:
            raw = np.ones(xs.shape[0])  # every point sits on the boundary
        else:
            raw = 1.0 - abs_h / max_abs
        return decay * np.clip(raw, 0.0, 1.0)
    u = seeding.content_hash_units(xs, "acq-random", state.eta_seed, state.iteration)
    return decay * u


def heuristic_mu(state: AcquisitionState, a_values: np.ndarray) -> np.ndarray:
    """Score scale mu(x) = max(0.1 * a(x), mu_floor); strictly positive."""
    a = np.asarray(a_values, dtype=float)
    return np.maximum(0.1 * a, state.mu_floor)


def tiebreak_sigma(state: AcquisitionState, xs: np.ndarray) -> np.ndarray:
    """Deterministic per-state noise in (0, sigma_scale].

    Keyed by (state bytes, run seed) only — not the iteration — so the
    perturbation is constant across the run and the order it induces over
    the state space never changes.
    """
    u = seeding.content_hash_units(np.atleast_2d(xs), "tiebreak", state.eta_seed)
    return state.sigma_scale * (1.0 - u)

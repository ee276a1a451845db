"""Scenario-optimization baselines over level sets of a scalar score function.

Both baselines take a score function ``h`` (typically an uncalibrated prior
or a fitted posterior mean) and certify a super-level set ``{x : h(x) >= l}``
from IID oracle-labeled samples:

* ``lb_iterative`` raises the level until no drawn sample violates it, then
  attaches the zero-violation scenario bound ``1 - beta**(1/n)``.
* ``lb_robust_sweep`` keeps the whole (n, level) grid, counting violations in
  each cell and inverting the binomial tail for the epsilon that the observed
  violation count supports at confidence ``1 - beta``.

A violation is a drawn sample claimed by the level set whose ground-truth
reach-avoid value is nonpositive. Selection rules condense a sweep into a
single cell for downstream comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bounds import scenario_bound_with_violations, scenario_bound_zero_violation
from .metrics import RateReport, TruthGrid, fpr_fnr
from .seeding import stream
from .systems import OracleMeter, SystemSpec, label_states, sample_states

DEFAULT_LEVELS = (0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 0.9, 1.0)
DEFAULT_SWEEP_NS = (50, 200, 250, 300, 350, 500, 750, 1000)
SELECTION_RULES = ("min-eps", "min-n", "min-level", "median-eps")


@dataclass(frozen=True)
class IterativeResult:
    """Outcome of the iterative level search on one drawn sample set."""

    level: float
    epsilon: float
    violations: int
    achieved_zero: bool
    n: int
    beta: float


@dataclass(frozen=True)
class SweepCell:
    """One (sample count, level) cell of a robust sweep."""

    n: int
    level: float
    violations: int
    epsilon_lb: float
    fpr: float
    fnr: float


@dataclass(frozen=True)
class LevelSweepResult:
    beta: float
    cells: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ValueError("a sweep needs at least one cell")

    def cell(self, n: int, level: float) -> SweepCell:
        for c in self.cells:
            if c.n == n and c.level == level:
                return c
        raise KeyError(f"no sweep cell (n={n}, level={level})")


def _count_violations(scores: np.ndarray, values: np.ndarray, level: float) -> int:
    return int(np.sum((scores >= level) & (values <= 0.0)))


def lb_iterative(system: SystemSpec,
                 score_fn: Callable[[np.ndarray], np.ndarray],
                 n: int,
                 beta: float,
                 seed: int,
                 levels: Sequence[float] = DEFAULT_LEVELS,
                 meter: Optional[OracleMeter] = None) -> IterativeResult:
    """Smallest level whose set excludes every unsafe drawn sample.

    If even the largest level keeps an unsafe sample, that level is returned
    with ``achieved_zero=False`` and its violation count; the attached
    zero-violation epsilon is then not a valid certificate for the set.
    """
    if n < 1:
        raise ValueError("sample count must be positive")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie strictly between 0 and 1")
    lvls = sorted(float(l) for l in levels)
    if not lvls:
        raise ValueError("need at least one candidate level")
    rng = stream(seed, "lb-iterative", n)
    xs = sample_states(system, n, rng)
    values = label_states(system, xs, meter=meter)
    scores = np.asarray(score_fn(xs), dtype=float)
    epsilon = scenario_bound_zero_violation(n, beta)
    for level in lvls:
        k = _count_violations(scores, values, level)
        if k == 0:
            return IterativeResult(level=level, epsilon=epsilon, violations=0,
                                   achieved_zero=True, n=n, beta=beta)
    top = lvls[-1]
    return IterativeResult(level=top, epsilon=epsilon,
                           violations=_count_violations(scores, values, top),
                           achieved_zero=False, n=n, beta=beta)


def lb_robust_sweep(system: SystemSpec,
                    score_fn: Callable[[np.ndarray], np.ndarray],
                    grid: TruthGrid,
                    beta: float,
                    seed: int,
                    ns: Sequence[int] = DEFAULT_SWEEP_NS,
                    levels: Sequence[float] = DEFAULT_LEVELS,
                    meter: Optional[OracleMeter] = None) -> LevelSweepResult:
    """Violation counts, epsilon bounds, and grid error rates per (n, level).

    Each sample count gets a fresh IID draw keyed by (seed, n), shared across
    levels so violation counts are nonincreasing in the level for a fixed n.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie strictly between 0 and 1")
    ns = tuple(int(v) for v in ns)
    lvls = tuple(sorted(float(l) for l in levels))
    if not ns or not lvls:
        raise ValueError("need at least one sample count and one level")
    if any(v < 1 for v in ns):
        raise ValueError("sample counts must be positive")
    grid_scores = np.asarray(score_fn(grid.points), dtype=float)
    cells = []
    for n in ns:
        rng = stream(seed, "lb-robust", n)
        xs = sample_states(system, n, rng)
        values = label_states(system, xs, meter=meter)
        scores = np.asarray(score_fn(xs), dtype=float)
        for level in lvls:
            k = _count_violations(scores, values, level)
            eps = scenario_bound_with_violations(n, k, beta)
            rates = fpr_fnr(grid, lambda pts, lv=level: grid_scores >= lv)
            cells.append(SweepCell(n=n, level=level, violations=k,
                                   epsilon_lb=eps, fpr=rates.fpr,
                                   fnr=rates.fnr))
    return LevelSweepResult(beta=beta, cells=tuple(cells))


def _tie_key(indexed_cell) -> tuple:
    idx, c = indexed_cell
    return (c.epsilon_lb, c.n, c.level, idx)


def select_cell(result: LevelSweepResult, rule: str) -> SweepCell:
    """Condense a sweep to one cell.

    ``min-eps`` takes the globally smallest epsilon; ``min-n`` / ``min-level``
    restrict to the smallest sample count / level first; ``median-eps`` takes
    the lower median by epsilon. All ties break toward smaller n, then
    smaller level, then first occurrence.
    """
    if rule not in SELECTION_RULES:
        raise ValueError(f"unknown selection rule {rule!r}; "
                         f"choose one of {SELECTION_RULES}")
    pool = list(enumerate(result.cells))
    if rule == "min-n":
        n_min = min(c.n for _, c in pool)
        pool = [(i, c) for i, c in pool if c.n == n_min]
    elif rule == "min-level":
        l_min = min(c.level for _, c in pool)
        pool = [(i, c) for i, c in pool if c.level == l_min]
    if rule == "median-eps":
        ordered = sorted(pool, key=_tie_key)
        return ordered[(len(ordered) - 1) // 2][1]
    return min(pool, key=_tie_key)[1]

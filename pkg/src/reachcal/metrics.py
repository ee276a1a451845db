"""Ground-truth lattices and FPR/FNR scoring of candidate reach-avoid sets.

A truth grid is a regular lattice over the free slice dimensions with the
oracle's sign at every point (+1 in the reach-avoid set, -1 outside; the
boundary value V = 0 counts as outside, consistent with the strict super-zero
level-set convention used by the baselines' violation count). Grids are
cached on disk keyed by the system configuration hash and the resolution, so
repeated experiment invocations pay the rollout cost once.

FPR is the fraction of truly-unsafe points the candidate set claims, FNR the
fraction of truly-safe points it misses.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .systems import (OracleMeter, RolloutDivergenceError, SystemSpec,
                      embed_free, label_states)

_LABEL_CHUNK = 16384
_CACHE_VERSION = "truth-grid-v1"


class GridLabelingError(RuntimeError):
    """Oracle rollout failure during grid labeling, located on the lattice."""

    def __init__(self, grid_index: int, step: int):
        self.grid_index = int(grid_index)
        self.step = int(step)
        super().__init__(f"oracle rollout diverged at step {step} "
                         f"while labeling grid index {grid_index}")


@dataclass(frozen=True)
class TruthGrid:
    """Lattice points (full states), oracle signs, and lattice geometry."""

    points: np.ndarray
    truth_sign: np.ndarray
    axes: tuple
    shape: tuple

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        signs = np.asarray(self.truth_sign, dtype=np.int8)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "truth_sign", signs)
        object.__setattr__(self, "axes", tuple(np.asarray(a, dtype=float)
                                               for a in self.axes))
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if signs.shape != (pts.shape[0],):
            raise ValueError("one sign per lattice point required")
        if not np.all(np.isin(signs, (-1, 1))):
            raise ValueError("signs must be +1 or -1")
        if int(np.prod(self.shape)) != pts.shape[0]:
            raise ValueError("lattice shape does not match point count")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class RateReport:
    """FPR/FNR plus flags marking degenerate (empty) truth classes."""

    fpr: float
    fnr: float
    empty_negative: bool = False
    empty_positive: bool = False


def _resolutions(system: SystemSpec, resolution: Union[int, Sequence[int]]) -> tuple:
    n_free = len(system.free_dims)
    if np.isscalar(resolution):
        res = (int(resolution),) * n_free
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != n_free:
        raise ValueError(f"need one resolution per free dimension ({n_free})")
    if any(r < 2 for r in res):
        raise ValueError("resolution must be at least 2 per free dimension")
    return res


def _cache_key(system: SystemSpec, res: tuple) -> str:
    blob = json.dumps([_CACHE_VERSION, system.config_dict(), list(res)],
                      sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def build_truth_grid(system: SystemSpec,
                     resolution: Union[int, Sequence[int]],
                     cache_dir: Optional[str] = None,
                     meter: Optional[OracleMeter] = None) -> TruthGrid:
    """Label a regular lattice over the free slice dimensions.

    With ``cache_dir`` set, a previously built grid for the same (system,
    resolution) key is loaded instead of relabeled.
    """
    res = _resolutions(system, resolution)
    axes = tuple(np.linspace(lo, hi, r)
                 for (lo, hi), r in zip(system.free_bounds, res))
    cache_path = None
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        cache_path = os.path.join(cache_dir, f"{_cache_key(system, res)}.npz")
        if os.path.exists(cache_path):
            with np.load(cache_path) as doc:
                signs = doc["signs"]
            points = embed_free(system, _lattice(axes))
            return TruthGrid(points=points, truth_sign=signs, axes=axes,
                             shape=res)
    free = _lattice(axes)
    points = embed_free(system, free)
    signs = np.empty(points.shape[0], dtype=np.int8)
    for start in range(0, points.shape[0], _LABEL_CHUNK):
        chunk = points[start:start + _LABEL_CHUNK]
        try:
            values = label_states(system, chunk, meter=meter)
        except RolloutDivergenceError as exc:
            raise _locate_failure(system, chunk, start, exc) from exc
        signs[start:start + _LABEL_CHUNK] = np.where(values > 0.0, 1, -1)
    if cache_path is not None:
        np.savez(cache_path, signs=signs)
    return TruthGrid(points=points, truth_sign=signs, axes=axes, shape=res)


def _lattice(axes: tuple) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _locate_failure(system: SystemSpec, chunk: np.ndarray, offset: int,
                    batch_exc: RolloutDivergenceError) -> GridLabelingError:
    """Re-run a failed chunk point-by-point to name the offending index."""
    for j in range(chunk.shape[0]):
        try:
            label_states(system, chunk[j:j + 1])
        except RolloutDivergenceError as exc:
            return GridLabelingError(offset + j, exc.step)
    return GridLabelingError(offset, batch_exc.step)


def fpr_fnr(grid: TruthGrid,
            set_membership: Callable[[np.ndarray], np.ndarray]) -> RateReport:
    """Score a candidate set (vectorized membership callable) on the grid.

    An empty truth class produces rate 0 with the corresponding flag set,
    rather than a division by zero.
    """
    member = np.asarray(set_membership(grid.points), dtype=bool)
    if member.shape != (grid.n_points,):
        raise ValueError("membership must return one boolean per grid point")
    positive = grid.truth_sign > 0
    negative = ~positive
    n_pos = int(positive.sum())
    n_neg = int(negative.sum())
    fpr = float(np.sum(member & negative) / n_neg) if n_neg else 0.0
    fnr = float(np.sum(~member & positive) / n_pos) if n_pos else 0.0
    return RateReport(fpr=fpr, fnr=fnr, empty_negative=(n_neg == 0),
                      empty_positive=(n_pos == 0))


def export_grid_csv(grid: TruthGrid,
                    set_membership: Callable[[np.ndarray], np.ndarray],
                    path) -> None:
    """Per-point (state, truth, membership) rows for external analysis."""
    member = np.asarray(set_membership(grid.points), dtype=bool)
    dim = grid.points.shape[1]
    header = ",".join(f"x{i}" for i in range(dim)) + ",truth,member"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row, t, m in zip(grid.points, grid.truth_sign, member):
            coords = ",".join(repr(float(v)) for v in row)
            fh.write(f"{coords},{int(t)},{int(m)}\n")

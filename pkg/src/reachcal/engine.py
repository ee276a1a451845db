"""The approximate pick-to-learn loop over the calibrated error e_hat.

``run`` implements the active-learning loop: starting from the prior-plus-
initial-samples hypothesis, it repeatedly picks the unlabeled state with the
largest calibrated approximate error e_hat = a + lambda*mu + sigma, labels it
through the rollout oracle, appends it to the ordered compression set Q,
refits, advances the acquisition iteration (which decays a by zeta), and
recalibrates lambda on the fixed calibration set. It stops when every
remaining state has e_hat below the threshold omega, or declares failure at
the iteration cap.

The loop's selections depend on the hypothesis only through the total order
induced by e_hat, and the tie-break sigma makes that order strict. This is
what makes the scheme a (empirically) preferent compression:
``check_compression_stability`` validates on small instances that rerunning
the algorithm on Q plus one extra sample that the final e_hat already puts
below omega reselects exactly Q — the property that lets |Q| plug into the
compression generalization bound.

Everything is deterministic given (system, prior, dataset, calibration set,
params, seed); reruns are bit-for-bit identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import seeding
from .acquisition import AcquisitionState, acquire, advance, heuristic_mu
from .conformal import CalibrationSet, ConformalBand, approx_error, calibrate_lambda, scores
from .gp import GpModel, KernelConfig, default_kernel_config, fit, sign_errors
from .systems import LabeledSample, OracleMeter, SystemSpec, label_states, sample_states

STATUS_CONVERGED = "converged"
STATUS_CAP = "iteration-cap-failure"

_MASK_DTYPE = bool


class DatasetExhaustedError(RuntimeError):
    """The unlabeled dataset is empty, so no argmax state exists."""


@dataclass(frozen=True)
class UnlabeledDataset:
    """The pool D of unlabeled states plus per-state selection flags."""

    states: np.ndarray
    selected_mask: np.ndarray

    def __post_init__(self) -> None:
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        mask = np.asarray(self.selected_mask, dtype=_MASK_DTYPE)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "selected_mask", mask)
        if mask.shape != (states.shape[0],):
            raise ValueError("mask length must equal the number of states")
        if not np.all(np.isfinite(states)):
            raise ValueError("dataset states must be finite")

    @property
    def n_d(self) -> int:
        return self.states.shape[0]


def draw_unlabeled(system: SystemSpec, n_d: int, rng: np.random.Generator) -> UnlabeledDataset:
    """Draw n_D IID uniform states over the sliced subspace, none selected."""
    xs = sample_states(system, n_d, rng)
    return UnlabeledDataset(states=xs, selected_mask=np.zeros(n_d, dtype=_MASK_DTYPE))


@dataclass(frozen=True)
class CompressionSet:
    """The ordered labeled set Q with source indices into D."""

    entries: tuple
    source_indices: tuple

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        idx = tuple(int(i) for i in self.source_indices)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "source_indices", idx)
        if len(entries) != len(idx):
            raise ValueError("entries and source indices must align")
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate source index in compression set")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def states(self) -> np.ndarray:
        if not self.entries:
            return np.empty((0, 0))
        return np.array([e.x for e in self.entries], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=float)


@dataclass(frozen=True)
class IterationRecord:
    """One selection step of the loop, captured before labeling/refitting."""

    iteration: int
    chosen_index: int
    a_chosen: float
    mu_chosen: float
    lam: float
    max_e_hat: float
    cal_error_count: int
    q_size: int

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "chosen_index": self.chosen_index,
            "a_chosen": self.a_chosen,
            "mu_chosen": self.mu_chosen,
            "lambda": self.lam,
            "max_e_hat": self.max_e_hat,
            "cal_error_count": self.cal_error_count,
            "q_size": self.q_size,
        }


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration records plus terminal status and accounting."""

    records: tuple
    status: str
    final_max_e_hat: Optional[float]
    final_lambda: float
    n_d: int
    n_c: int
    n_init: int
    omega: float

    @property
    def sample_complexity(self) -> int:
        return len(self.records) + self.n_c + self.n_init


@dataclass(frozen=True)
class EngineParams:
    """Loop parameters; defaults follow the reference configuration."""

    omega: float = 0.3
    zeta: float = 0.95
    alpha: float = 0.1
    cap: int = 70
    n_init: int = 40
    strategy: str = "boundary"
    mu_floor: float = 1e-6
    sigma_scale: float = 1e-9
    kernel: Optional[KernelConfig] = None

    def __post_init__(self) -> None:
        from .acquisition import STRATEGIES

        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega={self.omega} outside (0, 1)")
        if self.cap < 1:
            raise ValueError("iteration cap must be at least 1")
        if self.n_init < 0:
            raise ValueError("initial sample count must be nonnegative")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy {self.strategy!r} not in {STRATEGIES}")


@dataclass(frozen=True)
class RunResult:
    """Final hypothesis, compression set, trace, and replay ingredients."""

    model: GpModel
    q: CompressionSet
    trace: RunTrace
    dataset: UnlabeledDataset
    band: ConformalBand
    acq_state: AcquisitionState
    init_samples: tuple


def run(system: SystemSpec, prior: Callable[[np.ndarray], np.ndarray],
        dataset: UnlabeledDataset, cal: CalibrationSet, params: EngineParams,
        seed: int, meter: Optional[OracleMeter] = None,
        norm_reference: Optional[np.ndarray] = None) -> RunResult:
    """Execute the calibrated active-learning loop.

    ``norm_reference`` optionally fixes the boundary-acquisition
    normalization set; by default the dataset's own states are used. The
    stability check passes the original dataset here so that a replay on a
    reduced dataset scores states identically to the original run.

    The incoming dataset's mask is ignored; the returned dataset carries the
    final selection flags. Raises :class:`DatasetExhaustedError` for an empty
    dataset; an exhausted pool mid-run terminates the loop vacuously (there
    is no remaining state whose e_hat could exceed omega).
    """
    if dataset.n_d == 0:
        raise DatasetExhaustedError("unlabeled dataset is empty")
    D = dataset.states
    norm_xs = D if norm_reference is None else np.atleast_2d(
        np.asarray(norm_reference, dtype=float))

    init_xs = sample_states(system, params.n_init, seeding.stream(seed, "init-fit"))
    init_vals = (label_states(system, init_xs, meter=meter)
                 if params.n_init else np.empty(0))
    init_samples = tuple(LabeledSample(x=init_xs[i], value=float(init_vals[i]))
                         for i in range(params.n_init))
    hyper = params.kernel or default_kernel_config(system, init_vals)

    acq_state = AcquisitionState(strategy=params.strategy, iteration=0,
                                 zeta=params.zeta, eta_seed=seed,
                                 mu_floor=params.mu_floor,
                                 sigma_scale=params.sigma_scale)
    model = fit(prior, list(init_samples), hyper)

    def recalibrate(m: GpModel, a_state: AcquisitionState):
        cal_scores = scores(m, a_state, cal, norm_xs=norm_xs)
        band = calibrate_lambda(cal_scores, params.alpha)
        errs = int(np.sum(sign_errors(m, cal.states, cal.values)))
        a_all = acquire(a_state, m, D, norm_xs=norm_xs)
        mu_all = heuristic_mu(a_state, a_all)
        e_hat = approx_error(m, a_state, band, D, norm_xs=norm_xs)
        return band, errs, a_all, mu_all, e_hat

    band, cal_errs, a_all, mu_all, e_hat = recalibrate(model, acq_state)

    mask = np.zeros(dataset.n_d, dtype=_MASK_DTYPE)
    q_entries: list = []
    q_indices: list = []
    records: list = []

    while True:
        remaining = np.flatnonzero(~mask)
        if remaining.size == 0:
            status, final_max = STATUS_CONVERGED, None
            break
        local = int(np.argmax(e_hat[remaining]))  # first max: lowest index
        x_bar = int(remaining[local])
        max_e_hat = float(e_hat[x_bar])
        if max_e_hat < params.omega:
            status, final_max = STATUS_CONVERGED, max_e_hat
            break
        if len(records) >= params.cap:
            status, final_max = STATUS_CAP, max_e_hat
            break
        records.append(IterationRecord(
            iteration=acq_state.iteration, chosen_index=x_bar,
            a_chosen=float(a_all[x_bar]), mu_chosen=float(mu_all[x_bar]),
            lam=band.lam, max_e_hat=max_e_hat, cal_error_count=cal_errs,
            q_size=len(q_entries) + 1))
        value = float(label_states(system, D[x_bar][None, :], meter=meter)[0])
        q_entries.append(LabeledSample(x=D[x_bar], value=value))
        q_indices.append(x_bar)
        mask[x_bar] = True
        model = fit(prior, list(init_samples) + q_entries, hyper)
        acq_state = advance(acq_state)
        band, cal_errs, a_all, mu_all, e_hat = recalibrate(model, acq_state)

    trace = RunTrace(records=tuple(records), status=status,
                     final_max_e_hat=final_max, final_lambda=band.lam,
                     n_d=dataset.n_d, n_c=cal.n_c, n_init=params.n_init,
                     omega=params.omega)
    q = CompressionSet(entries=tuple(q_entries), source_indices=tuple(q_indices))
    final_dataset = UnlabeledDataset(states=D, selected_mask=mask)
    return RunResult(model=model, q=q, trace=trace, dataset=final_dataset,
                     band=band, acq_state=acq_state, init_samples=init_samples)


def check_compression_stability(system: SystemSpec,
                                prior: Callable[[np.ndarray], np.ndarray],
                                cal: CalibrationSet, params: EngineParams,
                                seed: int, q: CompressionSet,
                                z: LabeledSample,
                                norm_reference: Optional[np.ndarray] = None) -> bool:
    """Does adding ``z`` leave the compression unchanged?

    Reruns the algorithm on the set-union Q ∪ {z} (a duplicate z collapses
    into Q) with the original run's normalization reference, and reports
    whether the rerun selects exactly Q's states in Q's order and converges.
    """
    q_states = [e.x for e in q.entries]
    is_dup = any(np.array_equal(z.x, qx) for qx in q_states)
    states = q_states if is_dup else q_states + [np.asarray(z.x, dtype=float)]
    if not states:
        states = [np.asarray(z.x, dtype=float)]
    pool = UnlabeledDataset(states=np.array(states, dtype=float),
                            selected_mask=np.zeros(len(states), dtype=_MASK_DTYPE))
    result = run(system, prior, pool, cal, params, seed,
                 norm_reference=norm_reference)
    if result.trace.status != STATUS_CONVERGED:
        return False
    picked = [e.x for e in result.q.entries]
    if len(picked) != len(q_states):
        return False
    return all(np.array_equal(p, qx) for p, qx in zip(picked, q_states))


# ---------------------------------------------------------------------------
# trace serialization


def save_trace(trace: RunTrace, path) -> None:
    """One JSON record per selection iteration, then a terminal summary line."""
    with open(path, "w") as fh:
        for rec in trace.records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
        fh.write(json.dumps({
            "status": trace.status,
            "final_max_e_hat": trace.final_max_e_hat,
            "final_lambda": trace.final_lambda,
            "n_d": trace.n_d, "n_c": trace.n_c, "n_init": trace.n_init,
            "omega": trace.omega,
            "sample_complexity": trace.sample_complexity,
        }, sort_keys=True) + "\n")


def load_trace(path) -> dict:
    """Parse a trace file back into (records, summary) dictionaries."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    return {"records": lines[:-1], "summary": lines[-1]}


def save_q(q: CompressionSet, path) -> None:
    doc = [{"index": idx, "x": e.x.tolist(), "value": e.value}
           for idx, e in zip(q.source_indices, q.entries)]
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def load_q(path) -> CompressionSet:
    with open(path) as fh:
        doc = json.load(fh)
    entries = tuple(LabeledSample(x=np.array(d["x"], dtype=float),
                                  value=float(d["value"])) for d in doc)
    return CompressionSet(entries=entries,
                          source_indices=tuple(d["index"] for d in doc))

"""Multi-seed campaign orchestration: runs, baselines, metrics, and reports.

For every seed the harness runs the calibrated active-learning loop, the
iterative and robust level-set baselines, attaches generalization bounds, and
scores each resulting set on a shared ground-truth grid. Per-seed artifacts
(trace, compression set, sweep table, JSON report) land in
``<outdir>/<name>/<seed>/``; campaign-level tables (aggregate CSV, per-seed
rows, boundary polylines, chosen-point lists) under ``<outdir>/<name>/``.

Everything is keyed by (config, seed): rerunning an identical campaign
reproduces every output byte. A seed whose pipeline raises is recorded as an
errored seed and the campaign continues; aggregates cover only seeds whose
method succeeded.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .baselines import lb_iterative, lb_robust_sweep, select_cell
from .bounds import compression_bound
from .config import ExperimentConfig
from .conformal import draw_calibration_set, size_calibration_set
from .engine import (STATUS_CONVERGED, EngineParams, RunResult, draw_unlabeled,
                     run, save_q, save_trace)
from .gp import predict_mean
from .metrics import TruthGrid, build_truth_grid, fpr_fnr
from .plotdata import (boundary_polylines, write_polylines_csv,
                       write_q_points_csv)
from .prior import build_prior
from .seeding import stream
from .systems import OracleMeter, SystemSpec

METHODS = ("ours", "prior", "lb-iterative", "lb-robust-min-eps",
           "lb-robust-min-n", "lb-robust-min-level", "lb-robust-median-eps")

_SELECTION_RULES = {
    "lb-robust-min-eps": "min-eps",
    "lb-robust-min-n": "min-n",
    "lb-robust-min-level": "min-level",
    "lb-robust-median-eps": "median-eps",
}

STATUS_ERROR = "error"


@dataclass(frozen=True)
class MethodRow:
    """One method's outcome on one seed."""

    method: str
    samples: int
    epsilon: Optional[float]
    fpr: float
    fnr: float
    success: bool


@dataclass(frozen=True)
class SeedReport:
    """Everything recorded for a single seed."""

    seed: int
    status: str
    error: Optional[str]
    q_size: int
    final_lambda: Optional[float]
    final_max_e_hat: Optional[float]
    epsilon_bar: Optional[float]
    oracle_calls: int
    rows: tuple

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(f"no row for method {method!r}")


@dataclass(frozen=True)
class AggregateRow:
    """Lower-median summary of one method over its successful seeds."""

    method: str
    successes: int
    seeds: int
    samples: Optional[int]
    epsilon: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]
    fpr_plus_fnr: Optional[float]


@dataclass(frozen=True)
class CampaignReport:
    name: str
    campaign_dir: str
    seed_reports: tuple
    aggregate: tuple

    @property
    def all_failed(self) -> bool:
        return all(r.status == STATUS_ERROR for r in self.seed_reports)


def run_campaign(config: ExperimentConfig) -> CampaignReport:
    """Execute every seed, then aggregate and emit campaign tables."""
    system = config.system()
    n_d = config.effective_n_d()
    n_c = size_calibration_set(config.alpha, config.eps_alpha, config.beta)
    campaign_dir = os.path.join(config.outdir, config.name)
    plot_dir = os.path.join(campaign_dir, "plotdata")
    os.makedirs(plot_dir, exist_ok=True)
    grid = build_truth_grid(system, config.effective_grid_resolution(),
                            cache_dir=os.path.join(config.outdir, "gridcache"))
    prior_fn = build_prior(system, resolution=config.prior_resolution,
                           bias_amplitude=config.bias_amplitude,
                           bias_frequency=config.bias_frequency,
                           seed=config.bias_seed)
    _write_json(os.path.join(campaign_dir, "config.json"),
                {"n_c": n_c, "n_d": n_d, **asdict(config)})

    reports = []
    for seed in config.seeds:
        seed_dir = os.path.join(campaign_dir, str(seed))
        os.makedirs(seed_dir, exist_ok=True)
        try:
            report = _run_seed(config, system, prior_fn, grid, n_d, n_c,
                               seed, seed_dir, plot_dir)
        except Exception as exc:  # record the seed's failure, keep going
            report = SeedReport(seed=seed, status=STATUS_ERROR,
                                error=f"{type(exc).__name__}: {exc}",
                                q_size=0, final_lambda=None,
                                final_max_e_hat=None, epsilon_bar=None,
                                oracle_calls=0, rows=())
            _write_json(os.path.join(seed_dir, "report.json"),
                        _report_doc(report))
        reports.append(report)

    reports = tuple(sorted(reports, key=lambda r: r.seed))
    aggregate = _aggregate(reports, len(config.seeds))
    _write_aggregate_csv(os.path.join(campaign_dir, "aggregate.csv"), aggregate)
    _write_per_seed_csv(os.path.join(plot_dir, "per_seed.csv"), reports)
    if len(system.free_dims) == 2:
        _write_boundary(os.path.join(plot_dir, "boundary_truth.csv"), grid,
                        grid.truth_sign.astype(float))
        _write_boundary(os.path.join(plot_dir, "boundary_prior.csv"), grid,
                        prior_fn(grid.points))
    return CampaignReport(name=config.name, campaign_dir=campaign_dir,
                          seed_reports=reports, aggregate=aggregate)


def _run_seed(config: ExperimentConfig, system: SystemSpec, prior_fn,
              grid: TruthGrid, n_d: int, n_c: int, seed: int,
              seed_dir: str, plot_dir: str) -> SeedReport:
    meter = OracleMeter()
    dataset = draw_unlabeled(system, n_d, stream(seed, "dataset"))
    cal = draw_calibration_set(system, n_c, stream(seed, "calibration"), meter)
    params = EngineParams(omega=config.omega, zeta=config.zeta,
                          alpha=config.alpha, cap=config.cap,
                          n_init=config.n_init, strategy=config.strategy)
    result = run(system, prior_fn, dataset, cal, params, seed, meter=meter)
    trace = result.trace
    converged = trace.status == STATUS_CONVERGED
    q_size = len(result.q.entries)
    assert trace.sample_complexity == q_size + n_c + config.n_init
    eps_bar = compression_bound(n_d, q_size, config.delta)

    rows = [_scored_row("ours", trace.sample_complexity, eps_bar, grid,
                        lambda pts: predict_mean(result.model, pts) > 0.0,
                        success=converged),
            _scored_row("prior", 0, None, grid,
                        lambda pts: np.asarray(prior_fn(pts)) > 0.0,
                        success=True)]

    n_iter = config.iterative_n or trace.sample_complexity
    iterative = lb_iterative(system, prior_fn, n_iter, config.beta, seed,
                             levels=config.sweep_levels, meter=meter)
    rows.append(_scored_row(
        "lb-iterative", n_iter, iterative.epsilon, grid,
        lambda pts: np.asarray(prior_fn(pts)) >= iterative.level,
        success=iterative.achieved_zero))

    sweep = lb_robust_sweep(system, prior_fn, grid, config.beta, seed,
                            ns=config.sweep_ns, levels=config.sweep_levels,
                            meter=meter)
    write_sweep_csv(os.path.join(seed_dir, "sweep.csv"), sweep)
    for method, rule in _SELECTION_RULES.items():
        cell = select_cell(sweep, rule)
        rows.append(MethodRow(method=method, samples=cell.n,
                              epsilon=cell.epsilon_lb, fpr=cell.fpr,
                              fnr=cell.fnr, success=True))

    report = SeedReport(seed=seed, status=trace.status, error=None,
                        q_size=q_size, final_lambda=trace.final_lambda,
                        final_max_e_hat=trace.final_max_e_hat,
                        epsilon_bar=eps_bar, oracle_calls=meter.count,
                        rows=tuple(rows))
    save_trace(trace, os.path.join(seed_dir, "trace.jsonl"))
    save_q(result.q, os.path.join(seed_dir, "q.json"))
    _write_json(os.path.join(seed_dir, "report.json"), _report_doc(report))
    write_q_points_csv(os.path.join(plot_dir, f"q_points_seed{seed}.csv"),
                       system, result.q)
    if len(system.free_dims) == 2:
        _write_boundary(os.path.join(plot_dir, f"boundary_ours_seed{seed}.csv"),
                        grid, predict_mean(result.model, grid.points))
    return report


def _scored_row(method: str, samples: int, epsilon: Optional[float],
                grid: TruthGrid, membership, success: bool) -> MethodRow:
    rates = fpr_fnr(grid, membership)
    return MethodRow(method=method, samples=samples, epsilon=epsilon,
                     fpr=rates.fpr, fnr=rates.fnr, success=success)


def _lower_median(values: List[float]) -> Optional[float]:
    if not values:
        return None
    return sorted(values)[(len(values) - 1) // 2]


def _aggregate(reports: tuple, n_seeds: int) -> tuple:
    rows = []
    for method in METHODS:
        pool = [r.row(method) for r in reports if r.status != STATUS_ERROR]
        pool = [row for row in pool if row.success]
        eps = [row.epsilon for row in pool if row.epsilon is not None]
        rows.append(AggregateRow(
            method=method, successes=len(pool), seeds=n_seeds,
            samples=_lower_median([row.samples for row in pool]),
            epsilon=_lower_median(eps) if eps else None,
            fpr=_lower_median([row.fpr for row in pool]),
            fnr=_lower_median([row.fnr for row in pool]),
            fpr_plus_fnr=_lower_median([row.fpr + row.fnr for row in pool])))
    return tuple(rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_aggregate_csv(path, aggregate: tuple) -> None:
    with open(path, "w") as fh:
        fh.write("method,successes,seeds,samples,epsilon,fpr,fnr,"
                 "fpr_plus_fnr\n")
        for row in aggregate:
            fh.write(",".join(_fmt(v) for v in (
                row.method, row.successes, row.seeds, row.samples,
                row.epsilon, row.fpr, row.fnr, row.fpr_plus_fnr)) + "\n")


def _write_per_seed_csv(path, reports: tuple) -> None:
    with open(path, "w") as fh:
        fh.write("seed,method,success,samples,epsilon,fpr,fnr,fpr_plus_fnr\n")
        for report in reports:
            if report.status == STATUS_ERROR:
                continue
            for row in report.rows:
                fh.write(",".join(_fmt(v) for v in (
                    report.seed, row.method, row.success, row.samples,
                    row.epsilon, row.fpr, row.fnr,
                    row.fpr + row.fnr)) + "\n")


def write_sweep_csv(path, sweep) -> None:
    with open(path, "w") as fh:
        fh.write("n,level,violations,epsilon_lb,fpr,fnr\n")
        for c in sweep.cells:
            fh.write(",".join(_fmt(v) for v in (
                c.n, c.level, c.violations, c.epsilon_lb, c.fpr, c.fnr))
                + "\n")


def _write_boundary(path, grid: TruthGrid, values: np.ndarray) -> None:
    field = np.asarray(values, dtype=float).reshape(grid.shape)
    write_polylines_csv(path, boundary_polylines(grid.axes[0], grid.axes[1],
                                                 field))


def _report_doc(report: SeedReport) -> dict:
    doc = {"seed": report.seed, "status": report.status,
           "error": report.error, "q_size": report.q_size,
           "final_lambda": report.final_lambda,
           "final_max_e_hat": report.final_max_e_hat,
           "epsilon_bar": report.epsilon_bar,
           "oracle_calls": report.oracle_calls,
           "methods": {row.method: {
               "samples": row.samples, "epsilon": row.epsilon,
               "fpr": row.fpr, "fnr": row.fnr, "success": row.success}
               for row in report.rows}}
    return doc


def _write_json(path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)

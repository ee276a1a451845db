import hashlib
import json
import os
import shutil

import numpy as np
import pytest

import reachcal.harness as harness_mod
from reachcal.baselines import lb_robust_sweep
from reachcal.bounds import compression_bound
from reachcal.config import build_config
from reachcal.conformal import size_calibration_set
from reachcal.harness import (METHODS, STATUS_ERROR, load_report,
                              run_campaign)
from reachcal.metrics import build_truth_grid, fpr_fnr
from reachcal.plotdata import read_polylines_csv
from reachcal.prior import build_prior

SWEEP_NS = (50, 200, 500)
SWEEP_LEVELS = (0.0, 0.1, 0.3, 0.5, 1.0)


def campaign_doc(outdir, name="camp", seeds=(0, 1)):
    return {
        "campaign": {"name": name, "seeds": list(seeds), "outdir": outdir},
        "system": {"preset": "di1d"},
        "algorithm": {"alpha": 0.05, "eps_alpha": 0.03, "n_d": 400},
        "prior": {"bias_amplitude": 0.5},
        "baselines": {"ns": list(SWEEP_NS), "levels": list(SWEEP_LEVELS)},
        "metrics": {"resolution": 41},
    }


@pytest.fixture(scope="module")
def campaign(tmp_path_factory):
    outdir = str(tmp_path_factory.mktemp("campaign"))
    config = build_config(campaign_doc(outdir))
    report = run_campaign(config)
    return config, report


def campaign_files(campaign_dir, seeds):
    files = ["config.json", "aggregate.csv", "plotdata/per_seed.csv",
             "plotdata/boundary_truth.csv", "plotdata/boundary_prior.csv"]
    for seed in seeds:
        files += [f"{seed}/trace.jsonl", f"{seed}/q.json",
                  f"{seed}/report.json", f"{seed}/sweep.csv",
                  f"plotdata/q_points_seed{seed}.csv",
                  f"plotdata/boundary_ours_seed{seed}.csv"]
    return files


def test_all_declared_files_emitted(campaign):
    config, report = campaign
    for rel in campaign_files(report.campaign_dir, config.seeds):
        assert os.path.exists(os.path.join(report.campaign_dir, rel)), rel


def test_seed_reports_and_aggregate_shape(campaign):
    config, report = campaign
    assert {r.seed for r in report.seed_reports} == set(config.seeds)
    assert all(r.status == "converged" for r in report.seed_reports)
    assert [row.method for row in report.aggregate] == list(METHODS)
    for row in report.aggregate:
        assert row.seeds == len(config.seeds)
        assert 0 <= row.successes <= row.seeds


def test_report_json_accounting(campaign):
    config, report = campaign
    n_c = size_calibration_set(config.alpha, config.eps_alpha, config.beta)
    for seed_report in report.seed_reports:
        doc = load_report(os.path.join(report.campaign_dir,
                                       str(seed_report.seed), "report.json"))
        assert set(doc["methods"]) == set(METHODS)
        ours = doc["methods"]["ours"]
        assert ours["samples"] == doc["q_size"] + n_c + config.n_init
        assert doc["epsilon_bar"] == compression_bound(
            400, doc["q_size"], config.delta)
        assert ours["epsilon"] == doc["epsilon_bar"]
        assert doc["status"] == "converged" and doc["error"] is None


def test_prior_row_matches_direct_scoring(campaign):
    config, report = campaign
    system = config.system()
    grid = build_truth_grid(system, 41)
    prior_fn = build_prior(system, resolution=config.prior_resolution,
                           bias_amplitude=config.bias_amplitude,
                           bias_frequency=config.bias_frequency,
                           seed=config.bias_seed)
    direct = fpr_fnr(grid, lambda pts: prior_fn(pts) > 0.0)
    for seed_report in report.seed_reports:
        row = seed_report.row("prior")
        assert row.fpr == direct.fpr and row.fnr == direct.fnr
        assert row.samples == 0 and row.epsilon is None and row.success


def test_sweep_csv_roundtrip_matches_recompute(campaign):
    config, report = campaign
    system = config.system()
    grid = build_truth_grid(system, 41)
    prior_fn = build_prior(system, resolution=config.prior_resolution,
                           bias_amplitude=config.bias_amplitude,
                           bias_frequency=config.bias_frequency,
                           seed=config.bias_seed)
    for seed in config.seeds:
        sweep = lb_robust_sweep(system, prior_fn, grid, config.beta, seed,
                                ns=SWEEP_NS, levels=SWEEP_LEVELS)
        raw = np.genfromtxt(os.path.join(report.campaign_dir, str(seed),
                                         "sweep.csv"),
                            delimiter=",", names=True)
        assert raw.dtype.names == ("n", "level", "violations", "epsilon_lb",
                                   "fpr", "fnr")
        for row, cell in zip(raw, sweep.cells):
            assert (int(row["n"]), float(row["level"])) == (cell.n, cell.level)
            assert int(row["violations"]) == cell.violations
            assert float(row["epsilon_lb"]) == cell.epsilon_lb
            assert float(row["fpr"]) == cell.fpr
            assert float(row["fnr"]) == cell.fnr


def test_aggregate_csv_schema_and_trend(campaign):
    config, report = campaign
    raw = np.genfromtxt(os.path.join(report.campaign_dir, "aggregate.csv"),
                        delimiter=",", names=True, dtype=None,
                        encoding="utf-8")
    assert raw.dtype.names == ("method", "successes", "seeds", "samples",
                               "epsilon", "fpr", "fnr", "fpr_plus_fnr")
    by_method = {row["method"]: row for row in raw}
    assert set(by_method) == set(METHODS)
    # the calibrated set should beat the biased prior on this fixture
    assert (by_method["ours"]["fpr_plus_fnr"]
            < by_method["prior"]["fpr_plus_fnr"])
    ours = by_method["ours"]
    n_c = size_calibration_set(config.alpha, config.eps_alpha, config.beta)
    assert int(ours["samples"]) >= n_c + config.n_init


def test_per_seed_csv_rows(campaign):
    config, report = campaign
    raw = np.genfromtxt(os.path.join(report.campaign_dir, "plotdata",
                                     "per_seed.csv"),
                        delimiter=",", names=True, dtype=None,
                        encoding="utf-8")
    assert raw.dtype.names == ("seed", "method", "success", "samples",
                               "epsilon", "fpr", "fnr", "fpr_plus_fnr")
    assert len(raw) == len(config.seeds) * len(METHODS)
    np.testing.assert_allclose(raw["fpr_plus_fnr"], raw["fpr"] + raw["fnr"])
    for row in raw:
        match = [r.row(row["method"]) for r in report.seed_reports
                 if r.seed == row["seed"]]
        assert match and match[0].fpr == row["fpr"]


def test_q_points_and_boundary_files(campaign):
    config, report = campaign
    system = config.system()
    for seed_report in report.seed_reports:
        raw = np.genfromtxt(os.path.join(report.campaign_dir, "plotdata",
                                         f"q_points_seed{seed_report.seed}.csv"),
                            delimiter=",", names=True)
        raw = np.atleast_1d(raw)
        assert len(raw) == seed_report.q_size
        lo = [b[0] for b in system.free_bounds]
        hi = [b[1] for b in system.free_bounds]
        pts = np.column_stack([raw["x0"], raw["x1"]])
        assert np.all(pts >= lo) and np.all(pts <= hi)
        lines = read_polylines_csv(
            os.path.join(report.campaign_dir, "plotdata",
                         f"boundary_ours_seed{seed_report.seed}.csv"))
        assert lines and all(len(l) >= 2 for l in lines)
    truth_lines = read_polylines_csv(
        os.path.join(report.campaign_dir, "plotdata", "boundary_truth.csv"))
    assert truth_lines


def test_config_json_records_derived_sizes(campaign):
    config, report = campaign
    doc = json.loads(open(os.path.join(report.campaign_dir,
                                       "config.json")).read())
    assert doc["n_d"] == 400
    assert doc["n_c"] == size_calibration_set(config.alpha, config.eps_alpha,
                                              config.beta)
    assert doc["name"] == config.name and doc["seeds"] == list(config.seeds)


def _tree_digest(root):
    digest = {}
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            digest[rel] = hashlib.sha256(open(path, "rb").read()).hexdigest()
    return digest


def test_rerun_is_byte_identical(tmp_path):
    outdir = str(tmp_path / "out")
    doc = campaign_doc(outdir, name="det", seeds=(0,))
    doc["metrics"]["resolution"] = 21
    doc["baselines"]["ns"] = [50]
    config = build_config(doc)
    report = run_campaign(config)
    first = _tree_digest(report.campaign_dir)
    assert first
    shutil.rmtree(report.campaign_dir)
    report2 = run_campaign(config)
    assert _tree_digest(report2.campaign_dir) == first


def test_seed_errors_are_contained(tmp_path, monkeypatch):
    outdir = str(tmp_path / "out")
    doc = campaign_doc(outdir, name="errs", seeds=(0, 1))
    doc["metrics"]["resolution"] = 21
    doc["baselines"]["ns"] = [50]
    config = build_config(doc)

    real_run = harness_mod.run

    def flaky_run(system, prior, dataset, cal, params, seed, **kwargs):
        if seed == 1:
            raise RuntimeError("synthetic failure")
        return real_run(system, prior, dataset, cal, params, seed, **kwargs)

    monkeypatch.setattr(harness_mod, "run", flaky_run)
    report = run_campaign(config)
    by_seed = {r.seed: r for r in report.seed_reports}
    assert by_seed[0].status == "converged"
    assert by_seed[1].status == STATUS_ERROR
    assert "synthetic failure" in by_seed[1].error
    assert not report.all_failed

    # the errored seed still gets a report file, and aggregation skips it
    doc1 = load_report(os.path.join(report.campaign_dir, "1", "report.json"))
    assert doc1["status"] == STATUS_ERROR and doc1["methods"] == {}
    for row in report.aggregate:
        assert row.successes <= 1
    per_seed = open(os.path.join(report.campaign_dir, "plotdata",
                                 "per_seed.csv")).read()
    assert "\n1," not in per_seed

    monkeypatch.setattr(harness_mod, "run",
                        lambda *a, **k: (_ for _ in ()).throw(
                            RuntimeError("total failure")))
    config_all = build_config(campaign_doc(outdir, name="allfail",
                                           seeds=(0, 1)))
    report_all = run_campaign(config_all)
    assert report_all.all_failed
    assert all(r.status == STATUS_ERROR for r in report_all.seed_reports)

"""End-to-end acceptance checks for the calibrated reachable-set pipeline.

Each test validates one numbered claim about the system — oracle arithmetic,
conformal coverage, bound numerics, the active-learning contract, trend
reproduction, compression stability, baseline integrity, and determinism —
and records a single [PASS]/[FAIL] verdict line through the shared
``criterion`` fixture (see conftest).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import wilcoxon

from reachcal.acquisition import AcquisitionState, acquire, heuristic_mu
from reachcal.baselines import lb_robust_sweep, select_cell
from reachcal.bounds import (compression_bound, scenario_bound_with_violations,
                             scenario_bound_zero_violation)
from reachcal.config import build_config
from reachcal.conformal import (CalibrationSet, approx_error, calibrate_lambda,
                                draw_calibration_set, quantile_index, scores,
                                size_calibration_set)
from reachcal.engine import (STATUS_CONVERGED, EngineParams,
                             check_compression_stability, draw_unlabeled, run)
from reachcal.gp import default_kernel_config, fit, predict_mean, sign_errors
from reachcal.harness import run_campaign
from reachcal.metrics import build_truth_grid, fpr_fnr
from reachcal.prior import build_prior
from reachcal.seeding import stream
from reachcal.systems import (LabeledSample, RewardConstraintEval, Trajectory,
                              label_states, make_system, reach_avoid_value,
                              reach_avoid_value_batch, sample_states)

OMEGA, ZETA = 0.3, 0.95
ALPHA_2D, EPS_ALPHA_2D = 0.05, 0.03
BETA, DELTA = 0.1, 1e-4
N_D, SEEDS = 400, tuple(range(10))


def _lower_median(values):
    return sorted(values)[(len(values) - 1) // 2]


def _params(strategy):
    return EngineParams(omega=OMEGA, zeta=ZETA, alpha=ALPHA_2D, cap=70,
                        n_init=40, strategy=strategy)


def _campaign(system, prior, grid, strategy, n_c):
    """Ten seeded loop runs plus grid error rates, as the harness would run."""
    t0 = time.monotonic()
    params = _params(strategy)
    runs = []
    for seed in SEEDS:
        dataset = draw_unlabeled(system, N_D, stream(seed, "dataset"))
        cal = draw_calibration_set(system, n_c, stream(seed, "calibration"))
        result = run(system, prior, dataset, cal, params, seed)
        rates = fpr_fnr(grid, lambda pts: predict_mean(result.model, pts) > 0.0)
        runs.append({"seed": seed, "result": result,
                     "converged": result.trace.status == STATUS_CONVERGED,
                     "q_size": len(result.q.entries),
                     "samples": result.trace.sample_complexity,
                     "rate_sum": rates.fpr + rates.fnr})
    return {"runs": runs, "seconds": time.monotonic() - t0}


@pytest.fixture(scope="module")
def di1d_setup():
    system = make_system("di1d")
    prior = build_prior(system, resolution=7, bias_amplitude=0.5, seed=0)
    grid = build_truth_grid(system, 101)
    n_c = size_calibration_set(ALPHA_2D, EPS_ALPHA_2D, BETA)
    camp = _campaign(system, prior, grid, "boundary", n_c)
    return {"system": system, "prior": prior, "grid": grid, "n_c": n_c, **camp}


@pytest.fixture(scope="module")
def drone_setup():
    system = make_system("drone-race-lite", "slice1")
    prior = build_prior(system, resolution=7, bias_amplitude=0.12, seed=0)
    grid = build_truth_grid(system, 101)
    n_c = size_calibration_set(ALPHA_2D, EPS_ALPHA_2D, BETA)
    return {"system": system, "prior": prior, "grid": grid, "n_c": n_c,
            "boundary": _campaign(system, prior, grid, "boundary", n_c),
            "random": _campaign(system, prior, grid, "random", n_c)}


# ---------------------------------------------------------------------------
# 1. value-oracle equivalence


def _brute_force_value(dr, dc):
    """O(T^2) reference: max over t' of min(dr[t'], min(dc[0..t']))."""
    best = -math.inf
    for t_prime in range(len(dr)):
        m = dr[t_prime]
        for s in range(t_prime + 1):
            m = min(m, dc[s])
        best = max(best, m)
    return best


def test_criterion_01_value_oracle_equivalence(criterion):
    rng = np.random.default_rng(1)
    t0 = time.monotonic()
    mismatches = 0
    for _ in range(1000):
        horizon = int(rng.integers(1, 21))
        length = horizon + 1
        r = rng.uniform(-2.0, 2.0, length)
        c = rng.uniform(-2.0, 2.0, length)
        gamma = float(rng.uniform(0.5, 0.999))
        disc = np.power(gamma, np.arange(length, dtype=float))
        expect = _brute_force_value(disc * r, disc * c)
        traj = Trajectory(states=np.zeros((length, 1)))
        one_pass = reach_avoid_value(traj, RewardConstraintEval(r, c), gamma)
        batch = float(reach_avoid_value_batch(r, c, gamma)[0])
        if not (one_pass == expect and batch == expect):
            mismatches += 1
    elapsed = time.monotonic() - t0
    passed = mismatches == 0 and elapsed < 5.0
    criterion(1, "one-pass reach-avoid value equals O(T^2) brute force "
                 "bitwise on 1000 random (r, c, gamma, T<=20) instances",
              passed, f"{1000 - mismatches}/1000 exact, {elapsed:.2f}s < 5s")
    assert passed, f"{mismatches} mismatches, {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. conformal coverage under calibration redraws


def test_criterion_02_conformal_coverage(criterion):
    t_start = time.monotonic()
    system = make_system("di1d")
    prior = build_prior(system, resolution=7, bias_amplitude=0.5, seed=0)
    train_x = sample_states(system, 30, stream(42, "acc2-train"))
    train_v = label_states(system, train_x)
    model = fit(prior,
                [LabeledSample(x=train_x[i], value=float(train_v[i]))
                 for i in range(30)],
                default_kernel_config(system, train_v))
    state = AcquisitionState(strategy="boundary", iteration=3, zeta=ZETA,
                             eta_seed=7)

    pool_x = sample_states(system, 20000, stream(42, "acc2-pool"))
    pool_v = label_states(system, pool_x)
    e = sign_errors(model, pool_x, pool_v).astype(float)
    a = acquire(state, model, pool_x, norm_xs=pool_x)
    mu = heuristic_mu(state, a)
    s = np.abs(e - a) / mu

    alpha = 0.1
    n_c = size_calibration_set(alpha, 0.05, BETA)
    k = quantile_index(alpha, n_c)

    # one redraw routed through the library path must agree with the
    # vectorized pool formula (up to batch-shape float noise)
    idx = stream(42, "acc2-xcheck").choice(20000, n_c, replace=False)
    cal = CalibrationSet(samples=tuple(
        LabeledSample(x=pool_x[i], value=float(pool_v[i])) for i in idx))
    lib_scores = scores(model, state, cal, norm_xs=pool_x)
    band = calibrate_lambda(lib_scores, alpha)
    lam_mine = float(np.partition(s[idx], k - 1)[k - 1])
    cross_ok = (np.allclose(np.sort(lib_scores), np.sort(s[idx]),
                            rtol=1e-9, atol=1e-12)
                and abs(band.lam - lam_mine) <= 1e-9)

    trials = 10 ** 4
    mc = stream(42, "acc2-mc")
    hits = 0
    for _ in range(trials):
        pick = mc.choice(20000, n_c + 1, replace=False)
        lam = np.partition(s[pick[:n_c]], k - 1)[k - 1]
        z = pick[n_c]
        hits += bool(e[z] <= a[z] + lam * mu[z])
    coverage = hits / trials
    elapsed = time.monotonic() - t_start
    passed = coverage >= 0.88 and cross_ok and elapsed < 120.0
    criterion(2, "conformal band covers fresh-state errors over 10^4 "
                 "calibration redraws at alpha=0.1",
              passed, f"coverage {coverage:.4f} >= 0.88, n_C={n_c}, "
                      f"{elapsed:.1f}s < 120s")
    assert passed, (coverage, cross_ok, elapsed)


# ---------------------------------------------------------------------------
# 3. Beta-law calibration sizing


def test_criterion_03_beta_sizing_validity(criterion):
    alpha, eps_alpha = 0.1, 0.05
    n_c = size_calibration_set(alpha, eps_alpha, BETA)
    k = quantile_index(alpha, n_c)
    # with continuous scores the band's true coverage is the k-th order
    # statistic of n_C uniforms (probability integral transform)
    u = np.random.default_rng(3).random((10 ** 4, n_c))
    coverage = np.partition(u, k - 1, axis=1)[:, k - 1]
    mass = float(np.mean((coverage >= 0.85) & (coverage <= 0.95)))
    passed = mass >= 0.88
    criterion(3, "size_calibration_set(0.1, 0.05, 0.1) concentrates "
                 "empirical coverage in [0.85, 0.95]",
              passed, f"n_C={n_c}, k={k}, mass {mass:.4f} >= 0.88")
    assert passed, mass


# ---------------------------------------------------------------------------
# 4. bound numerics


def test_criterion_04_bound_numerics(criterion):
    comp = compression_bound(1000, 0, DELTA)
    zero = scenario_bound_zero_violation(100, BETA)
    ok_comp = abs(comp - 0.009168) <= 1e-6
    ok_zero = abs(zero - 0.022763) <= 1e-6
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 2001))
        beta = float(rng.uniform(1e-6, 0.999))
        worst = max(worst, abs(scenario_bound_with_violations(n, 0, beta)
                               - scenario_bound_zero_violation(n, beta)))
    ok_match = worst <= 1e-9
    passed = ok_comp and ok_zero and ok_match
    criterion(4, "compression and scenario bounds match closed forms",
              passed, f"compression(1000,0,1e-4)={comp:.6f}, "
                      f"scenario0(100,0.1)={zero:.6f}, "
                      f"k=0 bisection vs closed form max diff {worst:.2e}")
    assert passed, (comp, zero, worst)


# ---------------------------------------------------------------------------
# 5. active-learning loop contract


def test_criterion_05_loop_contract(di1d_setup, criterion):
    t0 = time.monotonic()
    converged = [r for r in di1d_setup["runs"] if r["converged"]]
    residual_max = -math.inf
    violating_seeds = []
    for entry in converged:
        res = entry["result"]
        remaining = res.dataset.states[~res.dataset.selected_mask]
        e_hat = approx_error(res.model, res.acq_state, res.band, remaining,
                             norm_xs=res.dataset.states)
        if e_hat.size:
            residual_max = max(residual_max, float(e_hat.max()))
        if not bool(np.all(e_hat < OMEGA)):
            violating_seeds.append(entry["seed"])
    total = di1d_setup["seconds"] + (time.monotonic() - t0)
    passed = (len(converged) >= 8 and not violating_seeds and total < 300.0)
    criterion(5, "10-seed di1d runs terminate with e_hat < omega on all of "
                 "D\\Q and >= 8/10 converge within 70 iterations",
              passed, f"{len(converged)}/10 converged, residual e_hat max "
                      f"{residual_max:.3f} < {OMEGA}, {total:.1f}s < 300s")
    assert passed, (len(converged), violating_seeds, total)


# ---------------------------------------------------------------------------
# 6. calibration beats the uncalibrated prior and the min-N scenario baseline


def _comparison(setup, runs):
    converged = [r for r in runs if r["converged"]]
    ours = _lower_median([r["rate_sum"] for r in converged])
    samples = _lower_median([r["samples"] for r in converged])
    prior_rates = fpr_fnr(setup["grid"],
                          lambda pts: np.asarray(setup["prior"](pts)) > 0.0)
    sweep = lb_robust_sweep(setup["system"], setup["prior"], setup["grid"],
                            BETA, 0, ns=(50, 200, 250, 500),
                            levels=(0.0, 0.05, 0.1, 0.2, 0.5, 1.0))
    cell = select_cell(sweep, "min-n")
    return {"ours": ours, "samples": samples,
            "prior": prior_rates.fpr + prior_rates.fnr,
            "min_n": cell.fpr + cell.fnr, "min_n_samples": cell.n}


def test_criterion_06_calibration_improves_accuracy(di1d_setup, drone_setup,
                                                    criterion):
    di = _comparison(di1d_setup, di1d_setup["runs"])
    dr = _comparison(drone_setup, drone_setup["boundary"]["runs"])
    passed = all(c["ours"] < c["prior"] and c["ours"] < c["min_n"]
                 for c in (di, dr))
    criterion(6, "median FPR+FNR of the calibrated set beats the biased "
                 "prior and the minimal-N scenario baseline on di1d and the "
                 "drone 2D slice",
              passed,
              f"di1d {di['ours']:.3f} < prior {di['prior']:.3f} and "
              f"min-N {di['min_n']:.3f}; slice1 {dr['ours']:.3f} < prior "
              f"{dr['prior']:.3f} and min-N {dr['min_n']:.3f} "
              f"(samples {di['samples']}/{dr['samples']} vs N="
              f"{di['min_n_samples']}/{dr['min_n_samples']})")
    assert passed, (di, dr)


# ---------------------------------------------------------------------------
# 7. boundary-vs-random acquisition trend


def test_criterion_07_boundary_vs_random(drone_setup, criterion):
    boundary = drone_setup["boundary"]["runs"]
    rand = drone_setup["random"]["runs"]
    conv_b = [r for r in boundary if r["converged"]]
    conv_r = [r for r in rand if r["converged"]]
    med_b = _lower_median([r["rate_sum"] for r in conv_b])
    med_r = _lower_median([r["rate_sum"] for r in conv_r])
    q_b = _lower_median([r["q_size"] for r in conv_b])
    q_r = _lower_median([r["q_size"] for r in conv_r])
    diffs = np.array([b["rate_sum"] - r["rate_sum"]
                      for b, r in zip(boundary, rand)
                      if b["converged"] and r["converged"]])
    w = wilcoxon(diffs, alternative="less")
    passed = med_b <= med_r
    criterion(7, "boundary acquisition matches or beats random at "
                 "statistically similar |Q| over 10 drone-slice seeds",
              passed, f"median FPR+FNR {med_b:.4f} (boundary) <= {med_r:.4f} "
                      f"(random), |Q| medians {q_b} vs {q_r}, "
                      f"Wilcoxon(less) p={w.pvalue:.3g}")
    assert passed, (med_b, med_r, w)


# ---------------------------------------------------------------------------
# 8. preferent-compression stability


def test_criterion_08_compression_stability(criterion):
    system = make_system("di1d")
    prior = build_prior(system, resolution=7, bias_amplitude=0.5, seed=0)
    n_c = size_calibration_set(ALPHA_2D, EPS_ALPHA_2D, BETA)
    params = _params("boundary")
    seed = 0
    dataset = draw_unlabeled(system, 50, stream(seed, "dataset"))
    cal = draw_calibration_set(system, n_c, stream(seed, "calibration"))
    res = run(system, prior, dataset, cal, params, seed)
    assert res.trace.status == STATUS_CONVERGED

    candidates = sample_states(system, 400, stream(seed, "stability-fresh"))
    values = label_states(system, candidates)
    e_hat = approx_error(res.model, res.acq_state, res.band, candidates,
                         norm_xs=dataset.states)
    qualifying = np.flatnonzero(e_hat < params.omega)
    assert qualifying.size >= 100, qualifying.size
    exceptions = []
    for i in qualifying[:100]:
        z = LabeledSample(x=candidates[i], value=float(values[i]))
        if not check_compression_stability(system, prior, cal, params, seed,
                                           res.q, z,
                                           norm_reference=dataset.states):
            exceptions.append(int(i))
    stable = 100 - len(exceptions)
    passed = stable >= 99
    detail = f"{stable}/100 additions left Q unchanged"
    if exceptions:
        detail += f", exceptions at candidate indices {exceptions}"
    criterion(8, "adding any fresh sample already under the error threshold "
                 "leaves the selected compression set unchanged",
              passed, detail)
    assert passed, exceptions


# ---------------------------------------------------------------------------
# 9. baseline sweep integrity


def _exact_tail_le(n, k, eps, beta):
    """Exact rational test of P(Binomial(n, eps) <= k) <= beta.

    Floats are rationals, so the lower tail at the exact float ``eps`` is a
    finite sum of fractions — no rounding anywhere.
    """
    p = Fraction(eps)
    q = 1 - p
    total = sum(math.comb(n, i) * p ** i * q ** (n - i) for i in range(k + 1))
    return total <= Fraction(beta)


def test_criterion_09_sweep_integrity(di1d_setup, criterion):
    system, prior, grid = (di1d_setup["system"], di1d_setup["prior"],
                           di1d_setup["grid"])
    ns = (50, 200, 500, 1000)
    sweep = lb_robust_sweep(system, prior, grid, BETA, 0, ns=ns)
    discrepancies = []
    for n in ns:
        draw = sample_states(system, n, stream(0, "lb-robust", n))
        truth = label_states(system, draw)
        level_scores = np.asarray(prior(draw))
        for level in sorted({c.level for c in sweep.cells}):
            cell = sweep.cell(n, level)
            k = int(np.sum((level_scores >= level) & (truth <= 0.0)))
            if k != cell.violations:
                discrepancies.append((n, level, "violation-count"))
                continue
            if k == n:
                if cell.epsilon_lb != 1.0:
                    discrepancies.append((n, level, "vacuous-bound"))
                continue
            if not _exact_tail_le(n, k, cell.epsilon_lb, BETA):
                discrepancies.append((n, level, "eps-not-valid"))
            lower = cell.epsilon_lb - 1e-6
            if lower > 0.0 and _exact_tail_le(n, k, lower, BETA):
                discrepancies.append((n, level, "eps-not-tight"))
    passed = not discrepancies
    criterion(9, "every sweep cell's violation count recounts identically "
                 "and its epsilon passes an exact binomial-tail revalidation",
              passed, f"{len(sweep.cells)} cells checked, "
                      f"{len(discrepancies)} discrepancies")
    assert passed, discrepancies


# ---------------------------------------------------------------------------
# 10. end-to-end determinism


def test_criterion_10_campaign_determinism(tmp_path, criterion):
    doc = {"campaign": {"name": "det", "seeds": [0, 1]},
           "system": {"preset": "di1d"},
           "algorithm": {"n_d": 200},
           "prior": {"bias_amplitude": 0.5},
           "baselines": {"ns": [50], "levels": [0.0, 0.5, 1.0]},
           "metrics": {"resolution": 21}}
    payloads = []
    for tag in ("a", "b"):
        campaign = dict(doc["campaign"], outdir=str(tmp_path / tag))
        report = run_campaign(build_config({**doc, "campaign": campaign}))
        root = tmp_path / tag / report.name
        payloads.append(((root / "aggregate.csv").read_bytes(),
                         (root / "plotdata" / "per_seed.csv").read_bytes()))
    agg_equal = payloads[0][0] == payloads[1][0]
    per_equal = payloads[0][1] == payloads[1][1]
    passed = agg_equal and per_equal
    criterion(10, "rerunning an identical campaign config reproduces "
                  "byte-identical aggregate CSVs",
              passed, f"aggregate.csv {len(payloads[0][0])} bytes and "
                      f"per_seed.csv {len(payloads[0][1])} bytes identical")
    assert passed, (agg_equal, per_equal)

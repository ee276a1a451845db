"""
Scoring calibrated sets against scenario-optimization baselines
===============================================================

Every method in the comparison outputs a set of states claimed safe;
a dense ground-truth grid scores them all with the same yardstick:
FPR = fraction of truly-unsafe grid points inside the set, FNR =
fraction of truly-safe points left out. This script builds the grid,
scores the biased prior as-is, runs the two scenario baselines that
calibrate a superlevel set of that prior, and contrasts them with the
actively learned hypothesis.
"""

import numpy as np

from reachcal import (EngineParams, build_prior, build_truth_grid,
                      draw_calibration_set, draw_unlabeled, fpr_fnr,
                      lb_iterative, lb_robust_sweep, make_system,
                      predict_mean, run, select_cell, size_calibration_set,
                      stream)

system = make_system("di1d")
prior = build_prior(system, resolution=7, bias_amplitude=0.5, seed=0)

# the yardstick: a 101x101 lattice over the free subspace, each point
# labeled by the rollout oracle (cache_dir would persist it to disk)
grid = build_truth_grid(system, 101)
truly_safe = np.mean(grid.truth_sign > 0)
print(f"truth grid: {grid.n_points} points, {truly_safe:.3f} truly safe")


def report(name, membership):
    rates = fpr_fnr(grid, membership)
    print(f"  {name:28s} FPR {rates.fpr:.4f}  FNR {rates.fnr:.4f}  "
          f"sum {rates.fpr + rates.fnr:.4f}")


print("\nuncalibrated prior (superlevel set at 0):")
report("prior > 0", lambda pts: np.asarray(prior(pts)) > 0.0)

# LB Iterative: raise the level until a fresh batch of N draws shows
# zero violations; epsilon is the zero-violation closed form
n_iter = 200
it = lb_iterative(system, prior, n_iter, 0.1, seed=0)
print(f"\nLB Iterative with N = {n_iter}:")
print(f"  clean level {it.level}, achieved zero violations: "
      f"{it.achieved_zero}, eps_LB {it.epsilon:.4f}")
report(f"prior >= {it.level}", lambda pts: np.asarray(prior(pts)) >= it.level)

# LB Robust: a full (N, level) sweep with per-cell violation counts and
# binomial-tail epsilons; four selection rules pick the reported cell
sweep = lb_robust_sweep(system, prior, grid, 0.1, seed=0,
                        ns=(50, 200, 500, 1000))
print(f"\nLB Robust sweep: {len(sweep.cells)} cells")
for rule in ("min-eps", "min-n", "min-level", "median-eps"):
    cell = select_cell(sweep, rule)
    print(f"  {rule:11s} -> N {cell.n:5d}  level {cell.level:.2f}  "
          f"violations {cell.violations:3d}  eps_LB {cell.epsilon_lb:.4f}  "
          f"FPR+FNR {cell.fpr + cell.fnr:.4f}")

# the actively learned hypothesis, for contrast: spends its labels
# where the boundary is uncertain instead of on blanket level shifts
n_c = size_calibration_set(0.05, 0.03, 0.1)
dataset = draw_unlabeled(system, 2000, stream(0, "dataset"))
cal = draw_calibration_set(system, n_c, stream(0, "calibration"))
result = run(system, prior, dataset, cal,
             EngineParams(omega=0.3, zeta=0.95, alpha=0.05), seed=0)
print(f"\nactively learned set ({result.trace.sample_complexity} labels, "
      f"status {result.trace.status}):")
report("calibrated hypothesis > 0",
       lambda pts: predict_mean(result.model, pts) > 0.0)

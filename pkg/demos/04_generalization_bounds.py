"""
Generalization bounds: compression versus scenario optimization
===============================================================

Two bound families certify a calibrated set. The sample-compression
bound eps_bar = 1 - (delta / C(n, k))^(1/(n-k)) charges only the k
samples the learner actually kept out of n, and bounds the total
misclassification mass of the learned hypothesis. The scenario bounds
charge every sample and bound only the violation probability of a
level-set calibration: 1 - beta^(1/N) with zero violations, and a
binomial-tail inversion when k violations are tolerated. This script
tabulates both families and shows why keeping |Q| small is the whole
game for the compression route.
"""

from reachcal import (binomial_tail, compression_bound,
                      scenario_bound_with_violations,
                      scenario_bound_zero_violation)

# the compression bound as the compression set grows: at n = 2000
# samples and delta = 1e-4, every extra kept sample costs bound mass
n, delta = 2000, 1e-4
print(f"compression bound, n = {n}, delta = {delta}")
print("   k    eps_bar")
for k in (0, 10, 25, 37, 70, 200, 1000, 2000):
    print(f"  {k:4d}   {compression_bound(n, k, delta):.4f}")

# scenario zero-violation closed form: the price of calibrating with
# plain IID draws and no learning
print("\nzero-violation scenario bound, beta = 0.1")
print("     N    eps_LB")
for big_n in (45, 100, 250, 1000, 5000):
    print(f"  {big_n:5d}   {scenario_bound_zero_violation(big_n, 0.1):.4f}")

# tolerating violations: invert P(Binomial(N, eps) <= k) <= beta; the
# returned eps is the smallest valid bound, and k = N is vacuous
print("\nscenario bound with violations, N = 250, beta = 0.1")
print("   k    eps_LB   tail at eps_LB")
for k in (0, 5, 20, 100, 250):
    eps = scenario_bound_with_violations(250, k, 0.1)
    tail = binomial_tail(250, k, eps)
    print(f"  {k:3d}   {eps:.4f}   {tail:.4f}")

# side by side at matched sample budgets; the raw numbers favor the
# scenario route, but they certify different things: eps_LB only bounds
# the chance that a set built from a FIXED score function still contains
# an unsafe state, while eps_bar bounds the total misclassification of
# the hypothesis the loop actually learned — including the false
# negatives that make robust scenario calibrations so conservative
print("\nmatched budgets (delta = 1e-4 vs beta = 0.1):")
for budget, q in ((200, 37), (500, 37), (2000, 37)):
    comp = compression_bound(budget, q, delta)
    scen = scenario_bound_zero_violation(budget, 0.1)
    print(f"  n = N = {budget:4d}: compression(|Q|={q}) {comp:.4f}   "
          f"scenario(0 violations) {scen:.4f}")

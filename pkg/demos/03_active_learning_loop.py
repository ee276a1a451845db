"""
The calibrated active-learning loop end to end
==============================================

Starting from a biased prior plus 40 initial labels, the loop
repeatedly labels the unlabeled state with the largest calibrated
error e_hat = a + lambda*mu + sigma, refits, decays the acquisition by
zeta, and recalibrates. It stops once every remaining state sits below
the threshold omega; the states it actually labeled form the ordered
compression set Q, whose size plugs straight into the generalization
bound. This script runs the loop on the double integrator and walks
through the trace.
"""

import numpy as np

from reachcal import (EngineParams, build_prior, compression_bound,
                      draw_calibration_set, draw_unlabeled, label_states,
                      make_system, predict_mean, run, size_calibration_set,
                      stream)

system = make_system("di1d")
prior = build_prior(system, resolution=7, bias_amplitude=0.5, seed=0)

# experiment-scale ingredients: n_D unlabeled states, a sized
# calibration set, and the reference parameter schedule
n_d = 2000
n_c = size_calibration_set(0.05, 0.03, 0.1)
seed = 0
dataset = draw_unlabeled(system, n_d, stream(seed, "dataset"))
cal = draw_calibration_set(system, n_c, stream(seed, "calibration"))
params = EngineParams(omega=0.3, zeta=0.95, alpha=0.05, cap=70, n_init=40,
                      strategy="boundary")
print(f"n_D = {n_d}, n_C = {n_c}, omega = {params.omega}, "
      f"zeta = {params.zeta}")

result = run(system, prior, dataset, cal, params, seed)
trace = result.trace

# the trace records every selection: watch max e_hat shrink as the
# acquisition decays and the hypothesis improves
print("\n iter  chosen a    lambda   max e_hat   |Q|")
records = trace.records
shown = list(records[:5]) + list(records[-3:])
for rec in records:
    if rec in shown:
        print(f"  {rec.iteration:3d}   {rec.a_chosen:7.4f}  {rec.lam:7.3f} "
              f"  {rec.max_e_hat:9.4f}  {rec.q_size:4d}")
    elif rec is records[5]:
        print("   ...")

print(f"\nstatus: {trace.status}")
print(f"|Q| = {len(result.q.entries)} labels selected out of {n_d}")
print(f"sample complexity |Q| + n_C + n_init = {trace.sample_complexity}")
print(f"final lambda = {trace.final_lambda:.4f}, "
      f"final max e_hat = {trace.final_max_e_hat:.4f}")

# the compression bound certifies the final hypothesis: with confidence
# 1 - delta it misclassifies at most eps_bar of the state distribution
delta = 1e-4
eps_bar = compression_bound(n_d, len(result.q.entries), delta)
print(f"\ncompression bound eps_bar(|Q|={len(result.q.entries)}, "
      f"delta={delta}) = {eps_bar:.4f}")

# sanity: how often does the final hypothesis actually err?
holdout = draw_unlabeled(system, 4000, stream(seed, "holdout")).states
truth = label_states(system, holdout)
pred = predict_mean(result.model, holdout)
err = np.mean(((pred > 0.0) & (truth <= 0.0)) | ((pred <= 0.0) & (truth > 0.0)))
print(f"holdout misclassification rate: {err:.4f} (bound {eps_bar:.4f})")

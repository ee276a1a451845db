"""
Conformal calibration of the acquisition into an error band
===========================================================

The acquisition score a(x) is a heuristic guess at where the current
hypothesis is wrong. Split conformal prediction turns it into a
statistically valid error bound: score each calibration sample by
|e - a| / mu, take the ceil((1-alpha)(n_C+1))-th smallest score as
lambda, and the inflated band e_hat = a + lambda*mu + sigma then covers
the true misclassification indicator on fresh states with probability
at least 1 - alpha. This script sizes the calibration set from the
coverage-concentration requirement, calibrates a frozen hypothesis, and
checks the band's coverage empirically.
"""

import numpy as np

from reachcal import (AcquisitionState, LabeledSample, acquire, approx_error,
                      build_prior, calibrate_lambda, coverage_window_mass,
                      default_kernel_config, draw_calibration_set, fit,
                      heuristic_mu, label_states, make_system, quantile_index,
                      sample_states, scores, sign_errors, size_calibration_set,
                      stream)

# how many calibration samples? enough that empirical coverage
# concentrates within eps_alpha of its 1 - alpha target: the k-th
# uniform order statistic is Beta-distributed, and n_C is the smallest
# size putting 1 - beta of that Beta's mass inside the window
alpha, eps_alpha, beta = 0.1, 0.05, 0.1
n_c = size_calibration_set(alpha, eps_alpha, beta)
k = quantile_index(alpha, n_c)
mass = coverage_window_mass(n_c, alpha, eps_alpha)
print(f"alpha={alpha} eps_alpha={eps_alpha} beta={beta}")
print(f"  -> n_C = {n_c}, lambda = {k}-th smallest score, "
      f"window mass {mass:.4f} >= {1 - beta}")

# freeze a deliberately imperfect hypothesis: a GP fit on 30 labels of
# the double integrator around a biased prior mean
system = make_system("di1d")
prior = build_prior(system, resolution=7, bias_amplitude=0.5, seed=0)
train_x = sample_states(system, 30, stream(7, "demo-train"))
train_v = label_states(system, train_x)
model = fit(prior,
            [LabeledSample(x=train_x[i], value=float(train_v[i]))
             for i in range(30)],
            default_kernel_config(system, train_v))
acq = AcquisitionState(strategy="boundary", iteration=3, zeta=0.95, eta_seed=7)

# the normalization reference fixes the acquisition as one function
# over the state space, shared by calibration and fresh states
norm_xs = sample_states(system, 400, stream(7, "demo-norm"))

# calibrate: score the calibration samples, take the order statistic
cal = draw_calibration_set(system, n_c, stream(7, "demo-cal"))
s = scores(model, acq, cal, norm_xs=norm_xs)
band = calibrate_lambda(s, alpha)
print(f"\ncalibration scores: min {s.min():.3f}, max {s.max():.3f}")
print(f"lambda = {band.lam:.4f}")

# check the band on fresh states: the misclassification indicator
# e(z) should fall below a + lambda*mu at rate >= 1 - alpha
fresh = sample_states(system, 5000, stream(7, "demo-fresh"))
fresh_v = label_states(system, fresh)
e = sign_errors(model, fresh, fresh_v).astype(float)
a = acquire(acq, model, fresh, norm_xs=norm_xs)
mu = heuristic_mu(acq, a)
covered = np.mean(e <= a + band.lam * mu)
print(f"\nraw hypothesis error rate on fresh states: {e.mean():.4f}")
print(f"band coverage of the error indicator: {covered:.4f} "
      f"(target >= {1 - alpha})")

# the engine consumes the same band through approx_error, which adds
# the deterministic tie-break term sigma on top
e_hat = approx_error(model, acq, band, fresh, norm_xs=norm_xs)
print(f"e_hat range on fresh states: [{e_hat.min():.4f}, {e_hat.max():.4f}]")
print(f"states still above the omega=0.3 threshold: "
      f"{np.mean(e_hat >= 0.3):.3f}")

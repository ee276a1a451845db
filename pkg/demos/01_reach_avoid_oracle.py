"""
Labeling states with the reach-avoid rollout oracle
===================================================

A state belongs to the ground-truth reach-avoid set exactly when its
rollout value is positive: the closed-loop trajectory attains positive
discounted reward at some step while the discounted constraint stays
positive up to that step. This script rolls out the 2D double
integrator, unpacks the discounted sup-min value of one trajectory by
hand, and then labels a batch of states with the same oracle.
"""

import numpy as np

from reachcal import (evaluate_trajectory, label_states, make_system,
                      reach_avoid_value, rollout, sample_states, stream)

# build the 2D double integrator: position/velocity state, a PID-style
# policy that brakes toward the target band while avoiding the obstacle
system = make_system("di1d")
print("system:", system.kind)
print("state bounds:")
for lo, hi in system.state_bounds:
    print(f"  [{lo:+.1f}, {hi:+.1f}]")
print("horizon:", system.horizon, " discount gamma:", system.gamma)

# roll out a single state and evaluate reward/constraint along the path
x0 = np.array([-0.2, 0.8])
traj = rollout(system, x0)
evals = evaluate_trajectory(system, traj)
print("\ntrajectory length:", len(traj), "states")
print("first rewards:    ", np.round(evals.r_values[:6], 3))
print("first constraints:", np.round(evals.c_values[:6], 3))

# the value is max over t' of min(gamma^t' r(t'), min_{s<=t'} gamma^s c(s)):
# reward must turn positive before the running constraint minimum does not
value = reach_avoid_value(traj, evals, system.gamma)
disc = system.gamma ** np.arange(len(traj), dtype=float)
running_c = np.minimum.accumulate(disc * evals.c_values)
by_hand = np.max(np.minimum(disc * evals.r_values, running_c))
print(f"\nreach-avoid value V({x0}) = {value:+.4f}")
print("matches the unrolled sup-min:", value == by_hand)
print("state is in the reach-avoid set:", value > 0.0)

# the same oracle labels whole batches; this is the expensive call that
# the active learner tries to spend as sparingly as possible
states = sample_states(system, 2000, stream(0, "demo-oracle"))
values = label_states(system, states)
print(f"\nlabeled {len(states)} IID states")
print(f"member fraction (V > 0): {np.mean(values > 0.0):.3f}")
print(f"value range: [{values.min():+.3f}, {values.max():+.3f}]")

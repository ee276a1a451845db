"""
Drone-race slices and set-boundary plot data
============================================

The drone-race system lives in a 12D state space; experiments fix most
dimensions to slice constants and study the reach-avoid set over the
2-4 that remain free. For 2D slices the package emits plot-ready
boundary polylines: marching squares over a field on the truth grid,
chained into ordered vertex lists and written as plain CSV. Rendering
is deliberately out of scope — any plotting tool can consume the files.
"""

import pathlib
import tempfile

import numpy as np

from reachcal import (DRONE_SLICES, boundary_polylines, build_prior,
                      build_truth_grid, make_system, read_polylines_csv,
                      write_polylines_csv)

# the named slice presets: which dimensions stay free, which are pinned
print("drone-race slice presets:")
for name in sorted(DRONE_SLICES):
    system = make_system("drone-race-lite", name)
    print(f"  {name}: free dims {system.free_dims}, "
          f"{len(system.slice_values)} pinned")

# slice1 frees the lateral/vertical position at the gate approach
system = make_system("drone-race-lite", "slice1")
grid = build_truth_grid(system, 101)
print(f"\nslice1 truth grid: {grid.n_points} points, "
      f"member fraction {np.mean(grid.truth_sign > 0):.3f}")

# marching squares on the sign field: the true set boundary as polylines
truth_field = grid.truth_sign.astype(float).reshape(grid.shape)
truth_lines = boundary_polylines(grid.axes[0], grid.axes[1], truth_field)
print(f"truth boundary: {len(truth_lines)} polyline(s), "
      f"{sum(len(p) for p in truth_lines)} vertices")

# the biased prior's zero level set, for visual comparison
prior = build_prior(system, resolution=7, bias_amplitude=0.12, seed=0)
prior_field = np.asarray(prior(grid.points)).reshape(grid.shape)
prior_lines = boundary_polylines(grid.axes[0], grid.axes[1], prior_field)
print(f"prior boundary: {len(prior_lines)} polyline(s)")

# CSV round trip: polyline id, vertex order, x, y
outdir = pathlib.Path(tempfile.mkdtemp(prefix="reachcal-demo-"))
path = outdir / "boundary_truth.csv"
write_polylines_csv(path, truth_lines)
again = read_polylines_csv(path)
identical = (len(again) == len(truth_lines)
             and all(np.array_equal(a, b)
                     for a, b in zip(again, truth_lines)))
print(f"\nwrote {path.name}; round trip identical: {identical}")
print("first vertices of the truth boundary:")
for x, y in truth_lines[0][:4]:
    print(f"  ({x:+.4f}, {y:+.4f})")

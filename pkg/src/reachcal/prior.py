"""Synthetic stand-in for a learned value function, used as the GP prior mean.

The prior is the ground-truth oracle evaluated on a coarse lattice over the
free slice dimensions, interpolated multilinearly, then perturbed by a smooth
sinusoidal bias field. The bias amplitude emulates the error of a learned
model in less-visited regions: amplitude 0 gives an accurate prior, larger
amplitudes progressively corrupt the level-set boundary that downstream
calibration must repair.

The returned callable maps full states (n, d) to values (n,) and is a pure
deterministic function of (system, resolution, amplitude, frequency, seed),
so experiment runs can reconstruct it from config alone.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import seeding
from .systems import OracleMeter, SystemSpec, embed_free, free_of, label_states


def build_prior(system: SystemSpec, resolution: int = 7,
                bias_amplitude: float = 0.0, bias_frequency: float = 1.5,
                seed: int = 0,
                meter: Optional[OracleMeter] = None) -> Callable[[np.ndarray], np.ndarray]:
    """Coarse-grid oracle interpolant plus a smooth bias field.

    Parameters
    ----------
    system : SystemSpec
        The sliced system; the lattice spans its free bounds.
    resolution : int
        Lattice points per free dimension (>= 2).
    bias_amplitude : float
        Peak magnitude of the additive bias field; 0 disables it.
    bias_frequency : float
        Oscillations of the bias across each dimension's range.
    seed : int
        Seeds the bias field's phases only; the interpolant is deterministic.
    meter : OracleMeter, optional
        Counts the lattice labeling calls (offline cost, kept separate from
        the run's sample-complexity accounting).
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2 per free dimension")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in system.free_bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.ravel() for m in mesh], axis=1)
    values = label_states(system, embed_free(system, lattice), meter=meter)
    interp = RegularGridInterpolator(
        axes, values.reshape([resolution] * len(axes)), method="linear",
        bounds_error=False, fill_value=None)

    rng = seeding.stream(seed, "prior-bias")
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(axes))
    lo = np.array([b[0] for b in system.free_bounds])
    span = np.array([b[1] - b[0] for b in system.free_bounds])

    def prior_mean(states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        u = free_of(system, states)
        base = interp(u)
        if bias_amplitude == 0.0:
            return np.asarray(base, dtype=float)
        t = 2.0 * np.pi * bias_frequency * (u - lo[None, :]) / span[None, :]
        waves = np.sin(t + phases[None, :])
        bias = bias_amplitude * np.mean(waves, axis=1)
        return np.asarray(base + bias, dtype=float)

    return prior_mean

"""Dynamical systems, policies, and the ground-truth reach-avoid value oracle.

A system is a discrete-time double integrator per spatial axis,
``p' = p + v*dt,  v' = v + u*dt``, with accelerations clamped to a box. The
ground truth for a state ``x`` is the discounted reach-avoid value of the
closed-loop trajectory from ``x``:

    V(x, T) = max over t' in {0..T} of
              min( gamma^t' * r(x_t'),  min over tau <= t' of gamma^tau * c(x_tau) )

where ``r > 0`` marks the target set and ``c > 0`` marks constraint
satisfaction. ``V > 0`` iff the policy reaches the target within the horizon
without ever violating a constraint, so the super-zero level set of ``V`` is
the reach-avoid set.

Three presets are provided. ``di1d`` and ``di2d`` are desk-scale double
integrators whose reach-avoid set has a closed form under the default
zero-control policy (used as a test oracle). ``drone-race-lite`` is a
12-dimensional two-drone race: the ego drone pursues a gate while the opponent
holds its lateral line and races forward under a PID controller; reward and
constraint are signed margins (lead / speed / corridor and approach-angle /
altitude / separation-with-downwash).

Everything here is a pure function of its arguments; batch variants vectorize
over states and the single-state operations delegate to them, so both paths
produce bitwise-identical values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from typing import Callable, Mapping, Optional

import numpy as np


class RolloutDivergenceError(RuntimeError):
    """A rollout produced a non-finite state."""

    def __init__(self, step: int):
        super().__init__(f"non-finite state encountered at rollout step {step}")
        self.step = step


@dataclass(frozen=True)
class LabeledSample:
    """A state paired with its ground-truth rollout value."""

    x: np.ndarray
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if not np.all(np.isfinite(self.x)) or not np.isfinite(self.value):
            raise ValueError("labeled sample must be finite")


@dataclass
class OracleMeter:
    """Counts ground-truth oracle evaluations (the expensive calls)."""

    count: int = 0

    def add(self, n: int) -> None:
        self.count += int(n)


# ---------------------------------------------------------------------------
# per-kind parameters


@dataclass(frozen=True)
class DoubleIntegratorParams:
    """1-axis benchmark: reach ``p > goal`` while keeping ``p > floor``."""

    goal: float = 1.0
    floor: float = -0.5


@dataclass(frozen=True)
class PlanarIntegratorParams:
    """2-axis benchmark: reach the corner ``p > goal`` keeping ``p > floor``."""

    goal_x: float = 1.0
    goal_y: float = 1.0
    floor_x: float = -0.5
    floor_y: float = -0.5


@dataclass(frozen=True)
class DroneRaceParams:
    """Margins and controller gains for the two-drone race.

    Reward margins (all must be positive for the target):
      * lead: ego ahead of the opponent along the race axis (+y),
      * speed: ego forward speed above the opponent's,
      * corridor: ego within a lateral corridor around the gate line.

    Constraint margins (any nonpositive one is a violation):
      * approach: once inside the approach zone before the gate, the ego
        velocity must point within a cone around +y,
      * altitude: |ego z| within a band,
      * separation: ego outside a cylinder around the opponent extended
        downward by the downwash depth.
    """

    gate_x: float = 0.0
    gate_y: float = 2.0
    gate_z: float = 0.0
    corridor_halfwidth: float = 0.6
    lead_threshold: float = 0.0
    speed_threshold: float = 0.0
    approach_zone: float = 1.5
    approach_cos_limit: float = 0.5
    altitude_limit: float = 0.3
    separation_radius: float = 0.4
    downwash_depth: float = 0.6
    clearance_top: float = 0.2
    ego_kp: float = 0.8
    ego_kd: float = 1.2
    opp_kp: float = 1.0
    opp_ki: float = 0.0
    opp_kd: float = 1.0
    opp_vy_gain: float = 1.0
    opp_x_ref: float = 0.4
    opp_z_ref: float = 0.0
    opp_target_vy: float = 0.3


_PARAM_TYPES = {
    "di1d": DoubleIntegratorParams,
    "di2d": PlanarIntegratorParams,
    "drone-race-lite": DroneRaceParams,
}

_STATE_DIMS = {"di1d": 2, "di2d": 4, "drone-race-lite": 12}


@dataclass(frozen=True)
class SystemSpec:
    """A closed-loop reach-avoid problem instance.

    ``slice_values`` fixes a subset of state dimensions to constants; the
    remaining free dimensions define the subspace experiments sample from.
    """

    kind: str
    state_bounds: tuple
    dt: float
    horizon: int
    gamma: float
    control_limit: float
    params: object
    slice_values: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _PARAM_TYPES:
            raise ValueError(f"unknown system kind {self.kind!r}")
        if not isinstance(self.params, _PARAM_TYPES[self.kind]):
            raise TypeError(f"params for {self.kind!r} must be "
                            f"{_PARAM_TYPES[self.kind].__name__}")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.state_bounds)
        object.__setattr__(self, "state_bounds", bounds)
        if len(bounds) != _STATE_DIMS[self.kind]:
            raise ValueError(f"{self.kind!r} needs {_STATE_DIMS[self.kind]} "
                             f"bound intervals, got {len(bounds)}")
        if any(lo > hi for lo, hi in bounds):
            raise ValueError("empty bound interval")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma={self.gamma} must lie strictly in (0, 1)")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.control_limit <= 0.0:
            raise ValueError("control limit must be positive")
        slc = {int(i): float(v) for i, v in dict(self.slice_values).items()}
        object.__setattr__(self, "slice_values", slc)
        for i, v in slc.items():
            if not 0 <= i < len(bounds):
                raise ValueError(f"slice dimension {i} out of range")
            lo, hi = bounds[i]
            if not lo <= v <= hi:
                raise ValueError(f"slice constant {v} for dim {i} "
                                 f"outside [{lo}, {hi}]")
        if len(self.free_dims) < 1:
            raise ValueError("at least one free dimension required")

    @property
    def state_dim(self) -> int:
        return len(self.state_bounds)

    @property
    def free_dims(self) -> tuple:
        return tuple(i for i in range(len(self.state_bounds))
                     if i not in self.slice_values)

    @property
    def free_bounds(self) -> tuple:
        return tuple(self.state_bounds[i] for i in self.free_dims)

    def config_dict(self) -> dict:
        d = asdict(self)
        d["slice_values"] = {str(k): v for k, v in sorted(self.slice_values.items())}
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.config_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def embed_free(system: SystemSpec, free_coords: np.ndarray) -> np.ndarray:
    """Lift coordinates over the free dimensions to full states."""
    free_coords = np.atleast_2d(np.asarray(free_coords, dtype=float))
    n = free_coords.shape[0]
    if free_coords.shape[1] != len(system.free_dims):
        raise ValueError("free coordinate dimension mismatch")
    states = np.empty((n, system.state_dim), dtype=float)
    for j, dim in enumerate(system.free_dims):
        states[:, dim] = free_coords[:, j]
    for dim, v in system.slice_values.items():
        states[:, dim] = v
    return states


def free_of(system: SystemSpec, states: np.ndarray) -> np.ndarray:
    """Project full states onto the free dimensions."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    return states[:, list(system.free_dims)]


def sample_states(system: SystemSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` IID uniform states from the sliced subspace."""
    lo = np.array([b[0] for b in system.free_bounds])
    hi = np.array([b[1] for b in system.free_bounds])
    u = rng.uniform(lo, hi, size=(n, len(system.free_dims)))
    return embed_free(system, u)


def states_in_bounds(system: SystemSpec, states: np.ndarray, tol: float = 1e-9) -> bool:
    states = np.atleast_2d(states)
    lo = np.array([b[0] for b in system.state_bounds]) - tol
    hi = np.array([b[1] for b in system.state_bounds]) + tol
    return bool(np.all(states >= lo) and np.all(states <= hi))


# ---------------------------------------------------------------------------
# policies

class ZeroPolicy:
    """No actuation; the agent drifts at constant velocity."""

    def __init__(self, n_axes: int):
        self.n_axes = n_axes

    def initial_memory(self, n: int):
        return None

    def control(self, t: int, states: np.ndarray, memory):
        return np.zeros((states.shape[0], self.n_axes)), memory


class PursuitPolicy:
    """PD pursuit of a fixed goal point: ``u = kp (g - p) - kd v``."""

    def __init__(self, goal, kp: float, kd: float, pos_idx, vel_idx):
        self.goal = np.asarray(goal, dtype=float)
        self.kp = kp
        self.kd = kd
        self.pos_idx = list(pos_idx)
        self.vel_idx = list(vel_idx)

    def initial_memory(self, n: int):
        return None

    def control(self, t: int, states: np.ndarray, memory):
        p = states[:, self.pos_idx]
        v = states[:, self.vel_idx]
        return self.kp * (self.goal[None, :] - p) - self.kd * v, memory


class HoldLinePidPolicy:
    """Opponent controller: PID position hold on x/z plus forward-speed tracking.

    The x and z axes run a PID loop around fixed references; the y axis tracks
    a target forward velocity. The integral accumulator is threaded through
    the rollout as explicit memory so the policy object itself stays stateless.
    """

    def __init__(self, x_ref: float, z_ref: float, target_vy: float,
                 kp: float, ki: float, kd: float, vy_gain: float,
                 dt: float, pos_idx, vel_idx):
        self.x_ref = x_ref
        self.z_ref = z_ref
        self.target_vy = target_vy
        self.kp = kp
        self.ki = ki
        self.kd = kd
        self.vy_gain = vy_gain
        self.dt = dt
        self.pos_idx = list(pos_idx)
        self.vel_idx = list(vel_idx)

    def initial_memory(self, n: int):
        return np.zeros((n, 2))  # integral of (x, z) position error

    def control(self, t: int, states: np.ndarray, memory):
        p = states[:, self.pos_idx]
        v = states[:, self.vel_idx]
        err = np.stack([self.x_ref - p[:, 0], self.z_ref - p[:, 2]], axis=1)
        memory = memory + err * self.dt
        u = np.empty((states.shape[0], 3))
        u[:, 0] = self.kp * err[:, 0] + self.ki * memory[:, 0] - self.kd * v[:, 0]
        u[:, 2] = self.kp * err[:, 1] + self.ki * memory[:, 1] - self.kd * v[:, 2]
        u[:, 1] = self.vy_gain * (self.target_vy - v[:, 1])
        return u, memory


def default_policies(system: SystemSpec):
    """The preset (ego, opponent) policy pair for a system."""
    if system.kind == "di1d":
        return ZeroPolicy(1), None
    if system.kind == "di2d":
        return ZeroPolicy(2), None
    p: DroneRaceParams = system.params
    ego = PursuitPolicy(goal=(p.gate_x, p.gate_y, p.gate_z), kp=p.ego_kp,
                        kd=p.ego_kd, pos_idx=(0, 1, 2), vel_idx=(3, 4, 5))
    opp = HoldLinePidPolicy(x_ref=p.opp_x_ref, z_ref=p.opp_z_ref,
                            target_vy=p.opp_target_vy, kp=p.opp_kp,
                            ki=p.opp_ki, kd=p.opp_kd, vy_gain=p.opp_vy_gain,
                            dt=system.dt, pos_idx=(6, 7, 8), vel_idx=(9, 10, 11))
    return ego, opp


# ---------------------------------------------------------------------------
# dynamics

# (position indices, velocity indices) controlled by the ego / opponent policy
_LAYOUT = {
    "di1d": (((0,), (1,)), None),
    "di2d": (((0, 1), (2, 3)), None),
    "drone-race-lite": (((0, 1, 2), (3, 4, 5)), ((6, 7, 8), (9, 10, 11))),
}


@dataclass(frozen=True)
class Trajectory:
    """A rollout of ``horizon + 1`` states (t = 0..T)."""

    states: np.ndarray

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "states", states)
        if states.ndim != 2:
            raise ValueError("trajectory states must be a (T+1, d) array")
        if not np.all(np.isfinite(states)):
            raise ValueError("trajectory contains non-finite states")

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass(frozen=True)
class RewardConstraintEval:
    """Per-step reward and constraint values along a trajectory."""

    r_values: np.ndarray
    c_values: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r_values, dtype=float)
        c = np.asarray(self.c_values, dtype=float)
        object.__setattr__(self, "r_values", r)
        object.__setattr__(self, "c_values", c)
        if r.shape != c.shape or r.ndim != 1:
            raise ValueError("reward and constraint sequences must be equal-length 1-d")


def rollout_batch(system: SystemSpec, x0s: np.ndarray, ego_policy=None,
                  opp_policy=None) -> np.ndarray:
    """Simulate the closed loop from each row of ``x0s``; returns (n, T+1, d).

    Controls are clamped elementwise to ``±control_limit`` before integration.
    """
    X = np.atleast_2d(np.asarray(x0s, dtype=float)).copy()
    if X.shape[1] != system.state_dim:
        raise ValueError("state dimension mismatch")
    if not states_in_bounds(system, X):
        raise ValueError("initial state outside state bounds")
    defaults = default_policies(system)
    ego = ego_policy if ego_policy is not None else defaults[0]
    opp = opp_policy if opp_policy is not None else defaults[1]
    (ego_pos, ego_vel), opp_layout = _LAYOUT[system.kind]
    n, T, dt, lim = X.shape[0], system.horizon, system.dt, system.control_limit
    traj = np.empty((n, T + 1, system.state_dim))
    traj[:, 0] = X
    mem_e = ego.initial_memory(n)
    mem_o = opp.initial_memory(n) if opp is not None else None
    for t in range(T):
        u_e, mem_e = ego.control(t, X, mem_e)
        u_e = np.clip(u_e, -lim, lim)
        X_next = X.copy()
        X_next[:, list(ego_pos)] = X[:, list(ego_pos)] + X[:, list(ego_vel)] * dt
        X_next[:, list(ego_vel)] = X[:, list(ego_vel)] + u_e * dt
        if opp_layout is not None and opp is not None:
            u_o, mem_o = opp.control(t, X, mem_o)
            u_o = np.clip(u_o, -lim, lim)
            opp_pos, opp_vel = opp_layout
            X_next[:, list(opp_pos)] = X[:, list(opp_pos)] + X[:, list(opp_vel)] * dt
            X_next[:, list(opp_vel)] = X[:, list(opp_vel)] + u_o * dt
        X = X_next
        if not np.all(np.isfinite(X)):
            raise RolloutDivergenceError(t + 1)
        traj[:, t + 1] = X
    return traj


def rollout(system: SystemSpec, x0: np.ndarray, ego_policy=None,
            opp_policy=None) -> Trajectory:
    """Single-state rollout; delegates to the batch path."""
    batch = rollout_batch(system, np.asarray(x0, dtype=float)[None, :],
                          ego_policy, opp_policy)
    return Trajectory(batch[0])


# ---------------------------------------------------------------------------
# reward / constraint margins

def reward_values(system: SystemSpec, states: np.ndarray) -> np.ndarray:
    """Signed target margin r(x) for a batch of states (positive = in target)."""
    S = np.atleast_2d(np.asarray(states, dtype=float))
    p = system.params
    if system.kind == "di1d":
        return S[:, 0] - p.goal
    if system.kind == "di2d":
        return np.minimum(S[:, 0] - p.goal_x, S[:, 1] - p.goal_y)
    lead = (S[:, 1] - S[:, 7]) - p.lead_threshold
    speed = (S[:, 4] - S[:, 10]) - p.speed_threshold
    corridor = p.corridor_halfwidth - np.abs(S[:, 0] - p.gate_x)
    return np.minimum(np.minimum(lead, speed), corridor)


def constraint_values(system: SystemSpec, states: np.ndarray) -> np.ndarray:
    """Signed constraint margin c(x) (positive = constraints satisfied)."""
    S = np.atleast_2d(np.asarray(states, dtype=float))
    p = system.params
    if system.kind == "di1d":
        return S[:, 0] - p.floor
    if system.kind == "di2d":
        return np.minimum(S[:, 0] - p.floor_x, S[:, 1] - p.floor_y)
    speed_norm = np.sqrt(S[:, 3] ** 2 + S[:, 4] ** 2 + S[:, 5] ** 2)
    cone = S[:, 4] - p.approach_cos_limit * speed_norm
    outside_zone = (p.gate_y - p.approach_zone) - S[:, 1]
    approach = np.maximum(outside_zone, cone)
    altitude = p.altitude_limit - np.abs(S[:, 2])
    horiz = np.sqrt((S[:, 0] - S[:, 6]) ** 2 + (S[:, 1] - S[:, 7]) ** 2)
    below = (S[:, 8] - p.downwash_depth) - S[:, 2]
    above = S[:, 2] - (S[:, 8] + p.clearance_top)
    separation = np.maximum(np.maximum(horiz - p.separation_radius, below), above)
    return np.minimum(np.minimum(approach, altitude), separation)


def evaluate_trajectory(system: SystemSpec, traj: Trajectory) -> RewardConstraintEval:
    return RewardConstraintEval(reward_values(system, traj.states),
                                constraint_values(system, traj.states))


# ---------------------------------------------------------------------------
# reach-avoid value

def _discounts(gamma: float, length: int) -> np.ndarray:
    return np.power(gamma, np.arange(length, dtype=float))


def reach_avoid_value(traj: Trajectory, evals: RewardConstraintEval,
                      gamma: float) -> float:
    """Discounted reach-avoid value of one trajectory (one pass, O(T)).

    Maximizes over the target-attainment step t' the minimum of the discounted
    reward at t' and the running minimum of discounted constraints up to t'.
    """
    r, c = evals.r_values, evals.c_values
    if len(r) != len(traj):
        raise ValueError("evaluation length does not match trajectory")
    disc = _discounts(gamma, len(r))
    dr = disc * r
    dc = disc * c
    running_c = np.inf
    best = -np.inf
    for t in range(len(r)):
        running_c = min(running_c, dc[t])
        best = max(best, min(dr[t], running_c))
    return float(best)


def reach_avoid_value_batch(r_values: np.ndarray, c_values: np.ndarray,
                            gamma: float) -> np.ndarray:
    """Vectorized reach-avoid value over (n, T+1) reward/constraint arrays."""
    R = np.atleast_2d(np.asarray(r_values, dtype=float))
    C = np.atleast_2d(np.asarray(c_values, dtype=float))
    disc = _discounts(gamma, R.shape[1])
    dr = disc[None, :] * R
    dc = disc[None, :] * C
    running_c = np.minimum.accumulate(dc, axis=1)
    return np.max(np.minimum(dr, running_c), axis=1)


# ---------------------------------------------------------------------------
# ground-truth oracle

def label_states(system: SystemSpec, states: np.ndarray,
                 meter: Optional[OracleMeter] = None, ego_policy=None,
                 opp_policy=None) -> np.ndarray:
    """Ground-truth values for a batch of states (the expensive oracle)."""
    S = np.atleast_2d(np.asarray(states, dtype=float))
    traj = rollout_batch(system, S, ego_policy, opp_policy)
    flat = traj.reshape(-1, system.state_dim)
    R = reward_values(system, flat).reshape(S.shape[0], -1)
    C = constraint_values(system, flat).reshape(S.shape[0], -1)
    if meter is not None:
        meter.add(S.shape[0])
    return reach_avoid_value_batch(R, C, system.gamma)


def ground_truth_label(system: SystemSpec, x: np.ndarray,
                       meter: Optional[OracleMeter] = None) -> LabeledSample:
    """Label one state by rollout; composes the full oracle pipeline."""
    x = np.asarray(x, dtype=float)
    value = label_states(system, x[None, :], meter=meter)[0]
    return LabeledSample(x=x, value=float(value))


# ---------------------------------------------------------------------------
# presets

_DRONE_BOUNDS = (
    (-1.5, 1.5), (-3.0, 1.0), (-0.5, 0.5),          # ego position
    (-1.5, 1.5), (-1.5, 1.5), (-1.5, 1.5),          # ego velocity
    (-1.5, 1.5), (-3.0, 1.0), (-0.5, 0.5),          # opponent position
    (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0),          # opponent velocity
)

# Fixed coordinates for the named 2D slices: ego altitude/velocity and the
# full opponent state; the free dimensions are the ego x/y position.
_SLICE1 = {2: 0.0, 3: 0.0, 4: 0.7, 5: 0.0,
           6: 0.4, 7: -2.2, 8: 0.0, 9: 0.0, 10: 0.3, 11: 0.0}
_SLICE2 = {2: 0.05, 3: 0.0, 4: 0.0, 5: -0.5,
           6: 0.4, 7: -2.2, 8: 0.0, 9: 0.0, 10: 0.3, 11: 0.0}

DRONE_SLICES = {
    "slice1": dict(_SLICE1),
    "slice2": dict(_SLICE2),
    # 3D: ego altitude also varies; 4D: ego x-velocity varies as well.
    "slice1-3d": {k: v for k, v in _SLICE1.items() if k != 2},
    "slice1-4d": {k: v for k, v in _SLICE1.items() if k not in (2, 3)},
}

SYSTEM_PRESETS = ("di1d", "di2d", "drone-race-lite")


def make_system(preset: str, slice_name: Optional[str] = None,
                overrides: Optional[Mapping[str, float]] = None) -> SystemSpec:
    """Build a preset system, optionally applying a named slice and overrides.

    Override keys may address top-level SystemSpec fields (``dt``, ``gamma``,
    ``horizon``, ``control_limit``) or fields of the per-kind parameter block.
    """
    overrides = dict(overrides or {})
    if preset == "di1d":
        base = dict(kind="di1d", state_bounds=((-1.0, 2.0), (-1.0, 1.0)),
                    dt=0.1, horizon=30, gamma=0.9, control_limit=1.0)
        params = DoubleIntegratorParams()
        slc = {}
    elif preset == "di2d":
        base = dict(kind="di2d",
                    state_bounds=((-1.0, 2.0), (-1.0, 2.0), (-1.0, 1.0), (-1.0, 1.0)),
                    dt=0.1, horizon=30, gamma=0.9, control_limit=1.0)
        params = PlanarIntegratorParams()
        slc = {}
    elif preset == "drone-race-lite":
        base = dict(kind="drone-race-lite", state_bounds=_DRONE_BOUNDS,
                    dt=0.1, horizon=30, gamma=0.95, control_limit=1.0)
        params = DroneRaceParams()
        if slice_name is None:
            slice_name = "slice1"
        if slice_name not in DRONE_SLICES:
            raise ValueError(f"unknown slice {slice_name!r}; "
                             f"choose from {sorted(DRONE_SLICES)}")
        slc = dict(DRONE_SLICES[slice_name])
    else:
        raise ValueError(f"unknown system preset {preset!r}; "
                         f"choose from {SYSTEM_PRESETS}")

    param_fields = {f for f in params.__dataclass_fields__}
    param_updates = {k: overrides.pop(k) for k in list(overrides)
                     if k in param_fields}
    if param_updates:
        params = type(params)(**{**asdict(params), **param_updates})
    for key in list(overrides):
        if key in ("dt", "gamma", "control_limit"):
            base[key] = float(overrides.pop(key))
        elif key == "horizon":
            base[key] = int(overrides.pop(key))
    if overrides:
        raise ValueError(f"unknown system overrides: {sorted(overrides)}")
    return SystemSpec(params=params, slice_values=slc, **base)

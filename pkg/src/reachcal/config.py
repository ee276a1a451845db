"""Campaign configuration: TOML files plus dotted command-line overrides.

A campaign is one system/parameter combination run over a list of seeds. The
file groups keys into sections mirroring the library layout::

    [campaign]           name, seeds, outdir
    [system]             preset, slice, plus a [system.overrides] table
    [algorithm]          strategy, omega, zeta, alpha, eps_alpha, beta,
                         delta, cap, n_init, n_d
    [prior]              resolution, bias_amplitude, bias_frequency, bias_seed
    [baselines]          ns, levels, iterative_n
    [metrics]            resolution (0 picks a free-dimension default)

Overrides use ``section.key=value`` with TOML literal syntax on the right
(``algorithm.omega=0.25``, ``campaign.seeds=[3,4]``). Unknown sections or
keys are rejected rather than silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Sequence, Union

import tomli

from .acquisition import STRATEGIES
from .baselines import DEFAULT_LEVELS, DEFAULT_SWEEP_NS
from .systems import SYSTEM_PRESETS, SystemSpec, make_system


class ConfigError(ValueError):
    """A malformed, incomplete, or out-of-range campaign configuration."""


_GRID_DEFAULT_RESOLUTION = {2: 101, 3: 41, 4: 21}
_N_D_DEFAULT = {2: 2000, 3: 5000, 4: 5000}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a deterministic campaign needs besides the seed."""

    name: str
    seeds: tuple
    outdir: str = "results"
    preset: str = "di1d"
    slice_name: Optional[str] = None
    system_overrides: dict = field(default_factory=dict)
    strategy: str = "boundary"
    omega: float = 0.3
    zeta: float = 0.95
    alpha: float = 0.05
    eps_alpha: float = 0.03
    beta: float = 0.1
    delta: float = 1e-4
    cap: int = 70
    n_init: int = 40
    n_d: int = 0
    prior_resolution: int = 7
    bias_amplitude: float = 0.0
    bias_frequency: float = 1.5
    bias_seed: int = 0
    sweep_ns: tuple = DEFAULT_SWEEP_NS
    sweep_levels: tuple = DEFAULT_LEVELS
    iterative_n: int = 0
    grid_resolution: Union[int, tuple] = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "sweep_ns", tuple(int(n) for n in self.sweep_ns))
        object.__setattr__(self, "sweep_levels",
                           tuple(float(l) for l in self.sweep_levels))
        if isinstance(self.grid_resolution, (list, tuple)):
            object.__setattr__(self, "grid_resolution",
                               tuple(int(r) for r in self.grid_resolution))
        if not self.name or any(c in self.name for c in "/\\"):
            raise ConfigError(f"campaign name {self.name!r} must be a "
                              "nonempty path-safe string")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seed list contains duplicates")
        if self.preset not in SYSTEM_PRESETS:
            raise ConfigError(f"unknown system preset {self.preset!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy {self.strategy!r} not in {STRATEGIES}")
        _require(0.0 < self.omega < 1.0, f"omega={self.omega} outside (0, 1)")
        _require(0.0 < self.zeta <= 1.0, f"zeta={self.zeta} outside (0, 1]")
        _require(0.0 < self.alpha < 1.0, f"alpha={self.alpha} outside (0, 1)")
        _require(0.0 < self.eps_alpha < min(self.alpha, 1.0 - self.alpha),
                 f"eps_alpha={self.eps_alpha} must lie in "
                 "(0, min(alpha, 1-alpha))")
        _require(0.0 < self.beta < 1.0, f"beta={self.beta} outside (0, 1)")
        _require(0.0 < self.delta <= 1.0, f"delta={self.delta} outside (0, 1]")
        _require(self.cap >= 1, "iteration cap must be at least 1")
        _require(self.n_init >= 0, "n_init must be nonnegative")
        _require(self.n_d >= 0, "n_d must be nonnegative")
        _require(self.prior_resolution >= 2, "prior resolution must be >= 2")
        _require(self.bias_amplitude >= 0.0, "bias amplitude must be >= 0")
        _require(self.iterative_n >= 0, "iterative_n must be nonnegative")
        _require(all(n >= 1 for n in self.sweep_ns),
                 "sweep sample counts must be positive")
        _require(len(self.sweep_ns) >= 1 and len(self.sweep_levels) >= 1,
                 "baseline sweep grids must be nonempty")
        try:
            self.system()
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"system section invalid: {exc}") from exc

    def system(self) -> SystemSpec:
        return make_system(self.preset, slice_name=self.slice_name,
                           overrides=dict(self.system_overrides) or None)

    def effective_n_d(self) -> int:
        """Explicit n_d, or the free-dimension default (2000 2D, 5000 above)."""
        if self.n_d:
            return self.n_d
        return _by_free_dims(self.system(), _N_D_DEFAULT, "n_d")

    def effective_grid_resolution(self) -> Union[int, tuple]:
        """Explicit resolution, or 101/41/21 per point for 2/3/4 free dims."""
        if self.grid_resolution:
            return self.grid_resolution
        return _by_free_dims(self.system(), _GRID_DEFAULT_RESOLUTION,
                             "grid resolution")


def _require(ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(message)


def _by_free_dims(system: SystemSpec, table: dict, what: str) -> int:
    n_free = len(system.free_dims)
    if n_free not in table:
        raise ConfigError(f"no default {what} for {n_free} free dimensions; "
                          "set it explicitly")
    return table[n_free]


_SECTIONS = {
    "campaign": {"name": "name", "seeds": "seeds", "outdir": "outdir"},
    "system": {"preset": "preset", "slice": "slice_name"},
    "algorithm": {"strategy": "strategy", "omega": "omega", "zeta": "zeta",
                  "alpha": "alpha", "eps_alpha": "eps_alpha", "beta": "beta",
                  "delta": "delta", "cap": "cap", "n_init": "n_init",
                  "n_d": "n_d"},
    "prior": {"resolution": "prior_resolution",
              "bias_amplitude": "bias_amplitude",
              "bias_frequency": "bias_frequency", "bias_seed": "bias_seed"},
    "baselines": {"ns": "sweep_ns", "levels": "sweep_levels",
                  "iterative_n": "iterative_n"},
    "metrics": {"resolution": "grid_resolution"},
}


def _flatten(doc: dict) -> dict:
    kwargs: dict = {}
    for section, table in doc.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in table.items():
            if section == "system" and key == "overrides":
                if not isinstance(value, dict):
                    raise ConfigError("[system.overrides] must be a table")
                kwargs["system_overrides"] = dict(value)
                continue
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kwargs[_SECTIONS[section][key]] = value
    return kwargs


def _parse_override(text: str) -> tuple:
    head, sep, literal = text.partition("=")
    if not sep or not head or not literal.strip():
        raise ConfigError(f"override {text!r} must look like "
                          "section.key=value")
    parts = head.strip().split(".")
    if len(parts) == 3 and parts[:2] == ["system", "overrides"]:
        section, key = "system.overrides", parts[2]
    elif len(parts) == 2:
        section, key = parts
    else:
        raise ConfigError(f"override key {head!r} must be section.key")
    try:
        value = tomli.loads(f"v = {literal.strip()}")["v"]
    except tomli.TOMLDecodeError:
        value = literal.strip()  # bare strings need no quoting
    return section, key, value


def load_config(path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Parse a TOML campaign file and apply dotted overrides in order."""
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return build_config(doc, overrides)


def build_config(doc: dict, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Assemble a validated config from a parsed document plus overrides."""
    doc = {section: dict(table) if isinstance(table, dict) else table
           for section, table in doc.items()}
    for item in overrides:
        section, key, value = _parse_override(item)
        if section == "system.overrides":
            doc.setdefault("system", {}).setdefault("overrides", {})[key] = value
        else:
            if section not in _SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            doc.setdefault(section, {})[key] = value
    kwargs = _flatten(doc)
    if "name" not in kwargs:
        raise ConfigError("campaign.name is required")
    if "seeds" not in kwargs:
        raise ConfigError("campaign.seeds is required")
    valid = {f.name for f in fields(ExperimentConfig)}
    assert set(kwargs) <= valid
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

import pytest

from reachcal.config import (ConfigError, ExperimentConfig, build_config,
                             load_config)

FULL_TOML = """
[campaign]
name = "demo"
seeds = [3, 1, 4]
outdir = "/tmp/cfg-out"

[system]
preset = "drone-race-lite"
slice = "slice2"

[system.overrides]
gate_y = 2.5
gamma = 0.9

[algorithm]
strategy = "random"
omega = 0.25
zeta = 0.9
alpha = 0.1
eps_alpha = 0.05
beta = 0.2
delta = 1e-3
cap = 40
n_init = 20
n_d = 800

[prior]
resolution = 5
bias_amplitude = 0.2
bias_frequency = 2.0
bias_seed = 9

[baselines]
ns = [100, 300]
levels = [0.0, 0.5]
iterative_n = 77

[metrics]
resolution = 31
"""


def test_full_file_maps_every_field(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(FULL_TOML)
    cfg = load_config(path)
    assert cfg.name == "demo"
    assert cfg.seeds == (3, 1, 4)
    assert cfg.outdir == "/tmp/cfg-out"
    assert cfg.preset == "drone-race-lite"
    assert cfg.slice_name == "slice2"
    assert cfg.system_overrides == {"gate_y": 2.5, "gamma": 0.9}
    assert cfg.strategy == "random"
    assert (cfg.omega, cfg.zeta, cfg.alpha) == (0.25, 0.9, 0.1)
    assert (cfg.eps_alpha, cfg.beta, cfg.delta) == (0.05, 0.2, 1e-3)
    assert (cfg.cap, cfg.n_init, cfg.n_d) == (40, 20, 800)
    assert cfg.prior_resolution == 5
    assert (cfg.bias_amplitude, cfg.bias_frequency, cfg.bias_seed) == (0.2, 2.0, 9)
    assert cfg.sweep_ns == (100, 300)
    assert cfg.sweep_levels == (0.0, 0.5)
    assert cfg.iterative_n == 77
    assert cfg.grid_resolution == 31
    system = cfg.system()
    assert system.params.gate_y == 2.5
    assert system.gamma == 0.9


def test_minimal_document_uses_defaults():
    cfg = build_config({"campaign": {"name": "m", "seeds": [0]}})
    assert cfg.preset == "di1d" and cfg.strategy == "boundary"
    assert cfg.omega == 0.3 and cfg.zeta == 0.95
    assert cfg.alpha == 0.05 and cfg.eps_alpha == 0.03
    assert cfg.cap == 70 and cfg.n_init == 40
    assert cfg.iterative_n == 0 and cfg.grid_resolution == 0


def test_effective_defaults_follow_free_dimensions():
    two_d = build_config({"campaign": {"name": "a", "seeds": [0]}})
    assert two_d.effective_n_d() == 2000
    assert two_d.effective_grid_resolution() == 101

    three_d = build_config({"campaign": {"name": "b", "seeds": [0]},
                            "system": {"preset": "drone-race-lite",
                                       "slice": "slice1-3d"}})
    assert three_d.effective_n_d() == 5000
    assert three_d.effective_grid_resolution() == 41

    four_d = build_config({"campaign": {"name": "c", "seeds": [0]},
                           "system": {"preset": "drone-race-lite",
                                      "slice": "slice1-4d"}})
    assert four_d.effective_grid_resolution() == 21


def test_explicit_values_beat_effective_defaults():
    cfg = build_config({"campaign": {"name": "a", "seeds": [0]},
                        "algorithm": {"n_d": 123},
                        "metrics": {"resolution": [7, 9]}})
    assert cfg.effective_n_d() == 123
    assert cfg.effective_grid_resolution() == (7, 9)


def test_overrides_apply_in_order():
    doc = {"campaign": {"name": "a", "seeds": [0]}}
    cfg = build_config(doc, overrides=["algorithm.omega=0.4",
                                       "algorithm.omega=0.2",
                                       "campaign.seeds=[5, 6]",
                                       "system.overrides.goal=1.2"])
    assert cfg.omega == 0.2
    assert cfg.seeds == (5, 6)
    assert cfg.system_overrides == {"goal": 1.2}
    assert cfg.system().params.goal == 1.2


def test_override_bare_string_value():
    cfg = build_config({"campaign": {"name": "a", "seeds": [0]}},
                       overrides=["campaign.outdir=results/run-a"])
    assert cfg.outdir == "results/run-a"


def test_unknown_sections_and_keys_rejected():
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a", "seeds": [0]},
                      "mystery": {"x": 1}})
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a", "seeds": [0], "typo": 3}})
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a", "seeds": [0]}},
                     overrides=["mystery.x=1"])
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a", "seeds": [0]}},
                     overrides=["algorithm.typo=1"])
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a", "seeds": [0]}},
                     overrides=["no-equals-sign"])


@pytest.mark.parametrize("patch", [
    {"campaign": {"name": "a", "seeds": []}},
    {"campaign": {"name": "a", "seeds": [1, 1]}},
    {"campaign": {"name": "", "seeds": [0]}},
    {"campaign": {"name": "a/b", "seeds": [0]}},
    {"campaign": {"name": "a", "seeds": [0]},
     "algorithm": {"strategy": "greedy"}},
    {"campaign": {"name": "a", "seeds": [0]}, "algorithm": {"omega": 1.5}},
    {"campaign": {"name": "a", "seeds": [0]}, "algorithm": {"zeta": 0.0}},
    {"campaign": {"name": "a", "seeds": [0]},
     "algorithm": {"alpha": 0.05, "eps_alpha": 0.05}},
    {"campaign": {"name": "a", "seeds": [0]}, "algorithm": {"cap": 0}},
    {"campaign": {"name": "a", "seeds": [0]}, "algorithm": {"delta": 0.0}},
    {"campaign": {"name": "a", "seeds": [0]}, "prior": {"resolution": 1}},
    {"campaign": {"name": "a", "seeds": [0]}, "baselines": {"ns": []}},
    {"campaign": {"name": "a", "seeds": [0]}, "baselines": {"ns": [0]}},
    {"campaign": {"name": "a", "seeds": [0]},
     "system": {"preset": "pendulum"}},
    {"campaign": {"name": "a", "seeds": [0]},
     "system": {"preset": "drone-race-lite", "slice": "slice9"}},
])
def test_invalid_documents_rejected(patch):
    with pytest.raises(ConfigError):
        build_config(patch)


def test_unknown_system_override_key_rejected():
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a", "seeds": [0]},
                      "system": {"preset": "di1d",
                                 "overrides": {"warp": 9}}})


def test_missing_required_keys():
    with pytest.raises(ConfigError):
        build_config({"campaign": {"seeds": [0]}})
    with pytest.raises(ConfigError):
        build_config({"campaign": {"name": "a"}})


def test_unreadable_or_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("campaign = not [valid")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_direct_construction_validates_too():
    with pytest.raises(ConfigError):
        ExperimentConfig(name="x", seeds=(0,), beta=1.0)
    cfg = ExperimentConfig(name="x", seeds=[2, 1])
    assert cfg.seeds == (2, 1)

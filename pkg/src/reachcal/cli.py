"""Command-line entry points.

Subcommands::

    reachcal run       --config cfg.toml [--seed N ...] [--outdir DIR]
                       [--override section.key=value ...]
    reachcal bounds    --kind {compression,scenario0,scenarioK} --n N
                       [--k K] --confidence X
    reachcal grid      --config cfg.toml [--resolution R ...] [...]
    reachcal baseline  --config cfg.toml [--seed N] [...]

Exit codes: 0 on success, 1 on configuration errors, 2 when every seed of a
campaign failed.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .baselines import SELECTION_RULES, lb_robust_sweep, select_cell
from .bounds import (compression_bound, scenario_bound_with_violations,
                     scenario_bound_zero_violation)
from .config import ConfigError, ExperimentConfig, load_config
from .harness import run_campaign, write_sweep_csv
from .metrics import build_truth_grid
from .prior import build_prior

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ALL_SEEDS_FAILED = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachcal",
        description="Calibrated reachable-set experiments: runs, bounds, "
                    "grids, and baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", required=True,
                       help="campaign TOML file")
        p.add_argument("--seed", type=int, action="append", default=None,
                       help="replace the config seed list (repeatable)")
        p.add_argument("--outdir", default=None,
                       help="replace the config output directory")
        p.add_argument("--override", action="append", default=None,
                       metavar="KEY=VALUE",
                       help="dotted config override, e.g. algorithm.omega=0.25")

    p_run = sub.add_parser("run", help="execute a multi-seed campaign")
    add_config_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_bounds = sub.add_parser("bounds", help="query a generalization bound")
    p_bounds.add_argument("--kind", required=True,
                          choices=("compression", "scenario0", "scenarioK"))
    p_bounds.add_argument("--n", type=int, required=True)
    p_bounds.add_argument("--k", type=int, default=0)
    p_bounds.add_argument("--confidence", type=float, required=True,
                          help="delta (compression) or beta (scenario)")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_grid = sub.add_parser("grid", help="build or inspect a truth grid")
    add_config_flags(p_grid)
    p_grid.add_argument("--resolution", type=int, nargs="+", default=None,
                        help="points per free dimension")
    p_grid.set_defaults(func=_cmd_grid)

    p_base = sub.add_parser("baseline", help="run the level-set sweep only")
    add_config_flags(p_base)
    p_base.set_defaults(func=_cmd_baseline)

    return parser


def _load(args) -> ExperimentConfig:
    overrides = list(args.override or [])
    if args.outdir is not None:
        overrides.append(f"campaign.outdir={args.outdir}")
    if args.seed:
        overrides.append("campaign.seeds=["
                         + ",".join(str(s) for s in args.seed) + "]")
    return load_config(args.config, overrides)


def _cmd_run(args) -> int:
    report = run_campaign(_load(args))
    for sr in report.seed_reports:
        note = f" ({sr.error})" if sr.error else ""
        print(f"seed {sr.seed}: {sr.status}{note}")
    for row in report.aggregate:
        rates = ("" if row.fpr_plus_fnr is None
                 else f"  fpr+fnr={row.fpr_plus_fnr!r}")
        eps = "" if row.epsilon is None else f"  eps={row.epsilon!r}"
        print(f"{row.method}: {row.successes}/{row.seeds} successful"
              f"{eps}{rates}")
    print(f"wrote {report.campaign_dir}")
    return EXIT_ALL_SEEDS_FAILED if report.all_failed else EXIT_OK


def _cmd_bounds(args) -> int:
    if args.kind == "compression":
        eps = compression_bound(args.n, args.k, args.confidence)
    elif args.kind == "scenario0":
        eps = scenario_bound_zero_violation(args.n, args.confidence)
    else:
        eps = scenario_bound_with_violations(args.n, args.k, args.confidence)
    print(repr(eps))
    return EXIT_OK


def _cmd_grid(args) -> int:
    config = _load(args)
    system = config.system()
    if args.resolution is None:
        resolution = config.effective_grid_resolution()
    elif len(args.resolution) == 1:
        resolution = args.resolution[0]
    else:
        resolution = tuple(args.resolution)
    cache_dir = os.path.join(config.outdir, "gridcache")
    grid = build_truth_grid(system, resolution, cache_dir=cache_dir)
    positive = float((grid.truth_sign > 0).mean())
    print(f"system: {system.kind} free_dims={list(system.free_dims)}")
    print(f"shape: {list(grid.shape)}  points: {grid.n_points}")
    print(f"positive fraction: {positive!r}")
    print(f"cache: {cache_dir}")
    return EXIT_OK


def _cmd_baseline(args) -> int:
    config = _load(args)
    system = config.system()
    seed = config.seeds[0]
    grid = build_truth_grid(system, config.effective_grid_resolution(),
                            cache_dir=os.path.join(config.outdir, "gridcache"))
    prior_fn = build_prior(system, resolution=config.prior_resolution,
                           bias_amplitude=config.bias_amplitude,
                           bias_frequency=config.bias_frequency,
                           seed=config.bias_seed)
    sweep = lb_robust_sweep(system, prior_fn, grid, config.beta, seed,
                            ns=config.sweep_ns, levels=config.sweep_levels)
    seed_dir = os.path.join(config.outdir, config.name, str(seed))
    os.makedirs(seed_dir, exist_ok=True)
    path = os.path.join(seed_dir, "sweep.csv")
    write_sweep_csv(path, sweep)
    for rule in SELECTION_RULES:
        c = select_cell(sweep, rule)
        print(f"{rule}: n={c.n} level={c.level!r} eps={c.epsilon_lb!r} "
              f"fpr={c.fpr!r} fnr={c.fnr!r}")
    print(f"wrote {path}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Calibrated learning of reach-avoid sets.

The package grows a reachable-set estimate by conformally calibrated active
learning: a Gaussian-process hypothesis over a ground-truth reach-avoid value
oracle, an acquisition function whose conformal inflation upper-bounds the
misclassification error, and a selection loop whose compression size plugs
into a sample-compression generalization bound. Scenario-optimization
level-set baselines, FPR/FNR grid metrics, and a seeded experiment harness
round out the toolkit.
"""

from .acquisition import (STRATEGIES, AcquisitionState, acquire, advance,
                          heuristic_mu, tiebreak_sigma)
from .baselines import (DEFAULT_LEVELS, DEFAULT_SWEEP_NS, SELECTION_RULES,
                        IterativeResult, LevelSweepResult, SweepCell,
                        lb_iterative, lb_robust_sweep, select_cell)
from .bounds import (BoundQuery, compression_bound,
                     scenario_bound_with_violations,
                     scenario_bound_zero_violation)
from .config import ConfigError, ExperimentConfig, build_config, load_config
from .conformal import (CalibrationSet, CalibrationSetTooSmallError,
                        ConformalBand, InfeasibleToleranceError, approx_error,
                        calibrate_lambda, coverage_window_mass,
                        draw_calibration_set, min_calibration_size,
                        quantile_index, scores, size_calibration_set)
from .engine import (STATUS_CAP, STATUS_CONVERGED, CompressionSet,
                     DatasetExhaustedError, EngineParams, IterationRecord,
                     RunResult, RunTrace, UnlabeledDataset,
                     check_compression_stability, draw_unlabeled, load_q,
                     load_trace, run, save_q, save_trace)
from .gp import (GpModel, IllConditionedKernelError, KernelConfig,
                 default_kernel_config, error, fit, model_from_json,
                 model_to_json, predict, predict_mean, predict_one,
                 sign_errors)
from .harness import (METHODS, AggregateRow, CampaignReport, MethodRow,
                      SeedReport, load_report, run_campaign, write_sweep_csv)
from .metrics import (GridLabelingError, RateReport, TruthGrid,
                      build_truth_grid, export_grid_csv, fpr_fnr)
from .plotdata import (boundary_polylines, read_polylines_csv,
                       write_polylines_csv, write_q_points_csv)
from .prior import build_prior
from .seeding import content_hash_unit, content_hash_units, stream
from .special import (beta_interval_mass, binomial_tail, log_binomial,
                      regularized_incomplete_beta)
from .systems import (DRONE_SLICES, SYSTEM_PRESETS, DoubleIntegratorParams,
                      DroneRaceParams, LabeledSample, OracleMeter,
                      PlanarIntegratorParams, RewardConstraintEval,
                      RolloutDivergenceError, SystemSpec, Trajectory,
                      embed_free, evaluate_trajectory, free_of,
                      ground_truth_label, label_states, make_system,
                      reach_avoid_value, reach_avoid_value_batch, rollout,
                      rollout_batch, sample_states)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

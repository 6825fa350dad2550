"""Energy-aware perimeter monitoring simulator."""

from .energy import EnergyBuffer, EnergyParams, harvest_step, is_available, try_consume
from .environment import (ArrivalProfile, GeofenceLayout, IntruderTrajectory,
                          crossing_times, position_at, sample_arrivals,
                          spawn_trajectory)
from .fgs import (DetectionReport, TrackEstimate, WakeUpRequest,
                  coverage_fraction, fuse, predict, select_wakeups,
                  validate_report)
from .policy import (GridConfig, IntruderOutcome, OutcomeWeights, QPolicy,
                     encode_state, grid_placement, grid_schedule, metrics,
                     object_error, objective, reward)
from .sensing import (PolarOffset, SensorPose, Vec2, angular_mask,
                      range_decay, rotate_pose, sensing_power, to_polar,
                      trajectory_confidence)
from .simulate import (ConfigError, MetricsRecord, SimConfig, SimState, run,
                       run_day, step)
from .experiments import SweepSpec, emit_energy_table, find_nmin, sweep
from .placement import PlacementSearchResult, placement_search
from .training import train_rl_policy

__all__ = [
    "ArrivalProfile", "ConfigError", "DetectionReport", "EnergyBuffer",
    "EnergyParams", "GeofenceLayout", "GridConfig", "IntruderOutcome",
    "IntruderTrajectory", "MetricsRecord", "OutcomeWeights", "PolarOffset",
    "QPolicy", "SensorPose", "SimConfig", "SimState", "TrackEstimate",
    "Vec2", "WakeUpRequest", "angular_mask", "coverage_fraction",
    "crossing_times", "encode_state", "fuse", "grid_placement",
    "grid_schedule", "harvest_step", "is_available", "metrics",
    "object_error", "objective", "position_at", "predict", "range_decay",
    "reward", "rotate_pose", "run", "run_day", "sample_arrivals",
    "select_wakeups", "sensing_power", "spawn_trajectory", "step",
    "to_polar", "trajectory_confidence", "try_consume", "validate_report",
    "SweepSpec", "emit_energy_table", "find_nmin", "sweep",
    "PlacementSearchResult", "placement_search", "train_rl_policy",
]

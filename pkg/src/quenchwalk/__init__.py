"""Quenched discrete-time quantum walk: a walker with a removable projective detector.

The package simulates a two-component walker on the integer line, applies a
projective detector at one site that is switched off after a chosen step, and
measures how the late-time occupation compares to the detector-free walk:
ratio series, saturation plateaus, the removal-step limit where enhancement
disappears, the scaling collapse of the plateau values, two-site correlation
ratios, and the matching classical random-walk benchmark.
"""

from . import classical
from .errors import ScanRangeError, ValidationError
from .lattice import (
    BALANCED_COIN,
    SYMMETRIC,
    InitialCondition,
    Spinor,
    WalkState,
    coin,
    evolve,
    initial_state,
    occupation,
    step,
)
from .measurement import (
    UNDEFINED,
    BaselineCache,
    DetectorSchedule,
    WalkRecord,
    apply_detector,
    free_schedule,
    run_free,
    run_quenched,
    run_siw,
    state_at,
)
from .observables import (
    RATIO_FLOOR,
    CollapseEstimate,
    CollapsePoint,
    CorrelationSeries,
    RatioSeries,
    SaturationEstimate,
    SaturationPolicy,
    ScalingFit,
    collapse_constant,
    correlation_ratio,
    default_t_max,
    find_removal_limit,
    loglog_fit,
    ratio_series,
    saturation_for,
    saturation_ratio,
    scan_grid_for,
    siw_survival_decay,
    spatial_ratio_profile,
)

__version__ = "0.1.0"

__all__ = [
    "BALANCED_COIN",
    "BaselineCache",
    "CollapseEstimate",
    "CollapsePoint",
    "CorrelationSeries",
    "DetectorSchedule",
    "InitialCondition",
    "RATIO_FLOOR",
    "RatioSeries",
    "SaturationEstimate",
    "SaturationPolicy",
    "ScalingFit",
    "ScanRangeError",
    "Spinor",
    "SYMMETRIC",
    "UNDEFINED",
    "ValidationError",
    "WalkRecord",
    "WalkState",
    "apply_detector",
    "classical",
    "coin",
    "collapse_constant",
    "correlation_ratio",
    "default_t_max",
    "evolve",
    "find_removal_limit",
    "free_schedule",
    "initial_state",
    "loglog_fit",
    "occupation",
    "ratio_series",
    "run_free",
    "run_quenched",
    "run_siw",
    "saturation_for",
    "saturation_ratio",
    "scan_grid_for",
    "siw_survival_decay",
    "spatial_ratio_profile",
    "state_at",
    "step",
]

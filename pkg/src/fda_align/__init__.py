"""Derivative-free dynamic alignment of drifting camera views.

A fractal hypersphere decomposition search (with intensive local refinement)
continuously re-estimates an 8-DoF homography against a percentile-trimmed L1
reprojection loss, re-optimizing whenever a change detector flags a camera
move.
"""

from .config import AppConfig, load_app_config
from .errors import (
    BudgetTooSmall,
    ConfigInvalid,
    DegenerateProjection,
    DimensionMismatch,
    EmptyErrorList,
    EmptyMatchSet,
    EmptyTrace,
    FdaAlignError,
    MatchesFormatError,
    MaxDepthReached,
    OutOfBounds,
    SingularMatrix,
)
from .homography import (
    DOF_COUNT,
    Homography,
    Point2,
    apply,
    compose,
    from_matrix,
    from_vector,
    identity,
    invert,
    to_vector,
    transform_points,
    translation,
)
from .loss import (
    MatchedPair,
    MatchSet,
    TrimmedLossConfig,
    frame_objective,
    load_matches_csv,
    pair_error,
    percentile_threshold,
    trimmed_loss,
    write_matches_csv,
)
from .optimizer import (
    EvalRecord,
    FdaConfig,
    HypersphereNode,
    OptimizationResult,
    SearchSpace,
    covering_inflation,
    decompose,
    denormalize,
    explore,
    ils,
    normalize,
)
from .runner import (
    ChangeDetectorConfig,
    PeriodRecord,
    PeriodSummary,
    RunnerConfig,
    TraceEntry,
    default_dof_bounds,
    detect_change,
    read_periods_json,
    read_trace_csv,
    run_dynamic,
    trace_summary,
    write_periods_json,
    write_trace_csv,
)
from .scenes import (
    CameraMove,
    DriftMagnitude,
    GroundTruth,
    ScenarioConfig,
    generate,
    grid_points,
    move_homography,
    read_ground_truth_json,
    reprojection_error,
    write_ground_truth_json,
)

__version__ = "0.1.0"

__all__ = [
    "AppConfig",
    "BudgetTooSmall",
    "CameraMove",
    "ChangeDetectorConfig",
    "ConfigInvalid",
    "DOF_COUNT",
    "DegenerateProjection",
    "DimensionMismatch",
    "DriftMagnitude",
    "EmptyErrorList",
    "EmptyMatchSet",
    "EmptyTrace",
    "EvalRecord",
    "FdaAlignError",
    "FdaConfig",
    "GroundTruth",
    "Homography",
    "HypersphereNode",
    "MatchSet",
    "MatchedPair",
    "MatchesFormatError",
    "MaxDepthReached",
    "OptimizationResult",
    "OutOfBounds",
    "PeriodRecord",
    "PeriodSummary",
    "Point2",
    "RunnerConfig",
    "ScenarioConfig",
    "SearchSpace",
    "SingularMatrix",
    "TraceEntry",
    "TrimmedLossConfig",
    "apply",
    "compose",
    "covering_inflation",
    "decompose",
    "default_dof_bounds",
    "denormalize",
    "detect_change",
    "explore",
    "frame_objective",
    "from_matrix",
    "from_vector",
    "generate",
    "grid_points",
    "identity",
    "ils",
    "invert",
    "load_app_config",
    "load_matches_csv",
    "move_homography",
    "normalize",
    "pair_error",
    "percentile_threshold",
    "read_ground_truth_json",
    "read_periods_json",
    "read_trace_csv",
    "reprojection_error",
    "run_dynamic",
    "to_vector",
    "trace_summary",
    "transform_points",
    "translation",
    "trimmed_loss",
    "write_ground_truth_json",
    "write_matches_csv",
    "write_periods_json",
    "write_trace_csv",
]

from .analysis import (
    IdentityAccuracy,
    SubsetAccuracy,
    SweepPoint,
    cross_viewpoint_matrix,
    per_identity_accuracy,
    relative_accuracy,
    resolution_bin,
    resolution_tags,
    sample_count_sweep,
    subset_accuracy,
    viewpoint_tags,
)
from .closed import FoldResult, TwoFoldResult, run_two_fold, two_fold
from .openworld import (
    CurvePoint,
    OpenWorldCounts,
    OpenWorldResult,
    model_counts,
    open_world_counts,
    open_world_eval,
    rr_fppi_curve,
    step_grid,
)

__all__ = [
    "CurvePoint",
    "FoldResult",
    "IdentityAccuracy",
    "OpenWorldCounts",
    "OpenWorldResult",
    "SubsetAccuracy",
    "SweepPoint",
    "TwoFoldResult",
    "cross_viewpoint_matrix",
    "model_counts",
    "open_world_counts",
    "open_world_eval",
    "per_identity_accuracy",
    "relative_accuracy",
    "resolution_bin",
    "resolution_tags",
    "rr_fppi_curve",
    "run_two_fold",
    "sample_count_sweep",
    "step_grid",
    "subset_accuracy",
    "two_fold",
    "viewpoint_tags",
]

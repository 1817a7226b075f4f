"""Private moving k-nearest-neighbor queries over obfuscation rectangles.

A client hides its position inside a rectangle; the server returns a compact
candidate set that answers every k-nearest-neighbor query from anywhere in the
rectangle at a chosen confidence level.  The client then moves freely and only
contacts the server again once its private answers can no longer be
guaranteed.  Adversary models measure what the resulting request trace leaks.
"""

from .adversary import AdversaryView, Observation, RefinedRegion, frequency, refine, trajectory_area
from .client import (
    ClientState,
    GeneratedRect,
    MoveResult,
    PrivacyProfile,
    RequestEvent,
    current_answers,
    exit_mask,
    generate_rectangle,
    initiate,
    movement_bound,
    on_move,
    request_now,
)
from .geometry import (
    Circle,
    ConfidenceParams,
    GcrQuery,
    Point,
    Rect,
    RoundedRect,
    confidence_level,
    dist,
    dist_to_rect_many,
    dist_to_rect_xy,
    gcr_membership_many,
    in_gcr,
    in_gr,
    intersect_rects,
    min_dist,
)
from .rtree import Index, NnHit, NnStream, build_index
from .server import (
    CandidateResponse,
    QueryRequest,
    SearchStatus,
    Server,
    brute_force_knn,
    clappinq,
    naive_baseline,
    update_status,
)
from .simulation import (
    DATA_SPACE,
    DataSpec,
    ExperimentRecord,
    RunResult,
    SweepConfig,
    TrajectorySpec,
    gen_data,
    gen_trajectories,
    read_points_csv,
    read_results_csv,
    read_trajectories_csv,
    run_naive,
    run_pmknn,
    sample_schedule,
    sweep,
    write_points_csv,
    write_results_csv,
    write_trajectories_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryView",
    "CandidateResponse",
    "Circle",
    "ClientState",
    "ConfidenceParams",
    "DATA_SPACE",
    "DataSpec",
    "ExperimentRecord",
    "GcrQuery",
    "GeneratedRect",
    "Index",
    "MoveResult",
    "NnHit",
    "NnStream",
    "Observation",
    "Point",
    "PrivacyProfile",
    "QueryRequest",
    "Rect",
    "RefinedRegion",
    "RequestEvent",
    "RoundedRect",
    "RunResult",
    "SearchStatus",
    "Server",
    "SweepConfig",
    "TrajectorySpec",
    "brute_force_knn",
    "build_index",
    "clappinq",
    "confidence_level",
    "current_answers",
    "dist",
    "dist_to_rect_many",
    "dist_to_rect_xy",
    "exit_mask",
    "frequency",
    "gcr_membership_many",
    "gen_data",
    "gen_trajectories",
    "generate_rectangle",
    "in_gcr",
    "in_gr",
    "initiate",
    "intersect_rects",
    "min_dist",
    "movement_bound",
    "naive_baseline",
    "on_move",
    "read_points_csv",
    "read_results_csv",
    "read_trajectories_csv",
    "refine",
    "request_now",
    "run_naive",
    "run_pmknn",
    "sample_schedule",
    "sweep",
    "trajectory_area",
    "update_status",
    "write_points_csv",
    "write_results_csv",
    "write_trajectories_csv",
]

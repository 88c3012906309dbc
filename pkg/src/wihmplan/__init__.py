"""Region-based within-hand manipulation planning for convex prisms.

Given a prismatic object model, an initial two-finger grasp, and goal
patches on the object's faces, the toolkit searches for a sequence of
within-hand primitives (finger slides, in-hand rotations, support-assisted
contact shifts, pivots), generates the end-effector trajectories pivots
need, and evaluates plans in a deterministic simulator against goal-overlap
metrics.
"""

from .bench import (
    BenchReport,
    NoiseModel,
    TaskSpec,
    emit_report,
    noise_robustness,
    run_benchmark,
    simulate,
)
from .errors import (
    CorruptedPlanError,
    InfeasibleActionError,
    InvalidGeometryError,
    InvalidInputError,
    InvalidModelError,
    InvalidStartError,
    InvalidStateError,
    UngraspableObjectError,
    WihmplanError,
)
from .geometry import (
    ConvexPolygon2,
    Face,
    ObjectModel,
    RigidTransform3,
    UnfoldedMap,
    build_prism,
    convex_intersection,
    point_to_polygon_distance,
    polygon_area,
    unfold,
)
from .heuristic import HeuristicCache, corner_sum, finger_heuristic, total_heuristic
from .kinematics import (
    DHRow,
    PivotChain,
    Waypoint,
    chain_forward,
    contact_shift_displacement,
    dh_transform,
    full_pivot_trajectory,
    pivot_trajectory,
)
from .planner import Action, CostConfig, Plan, action_cost, evaluate, plan
from .transition import (
    ActionKind,
    ContactRegion,
    GoalRegion,
    GraspState,
    ResolutionConfig,
    derive_resolutions,
    overlap_ratio,
    region_outside_goal,
    transition,
    valid_actions,
)

__version__ = "0.1.0"

"""Biparental Moran model with viability selection.

Simulation of a fixed-size population where each step replaces one
individual, drawn by death weight, with the offspring of two uniformly
chosen parents; tracking of the genetic weight carried forward by the
initially advantaged group; and the closed-form large-population limit of
those observables, with independent numerical cross-checks.
"""

__version__ = "0.1.0"

from .chains import (
    HittingRecord,
    SkeletonWalk,
    YChain,
    hitting_time,
    jump_probability,
    ruin_probability,
    up_fraction,
)
from .model import (
    PopulationState,
    RunConfig,
    StepEvent,
    apply_event,
    death_probabilities,
    sample_event,
)
from .theory import (
    LevelState,
    LimitParams,
    LimitState,
    QuadratureError,
    advantaged_fraction,
    asymptotic_weight,
    drift,
    infinite_selection_weight,
    limit_state,
    limit_trajectory,
    powered_odds,
    powered_odds_inverse,
    rk4_trajectory,
    state_at_level,
    weight_integral,
)
from .weights import (
    ExactWeightMatrix,
    TrajectoryPoint,
    WeightTracker,
    observe,
    update_vector,
)

__all__ = [
    "__version__",
    "PopulationState",
    "RunConfig",
    "StepEvent",
    "apply_event",
    "death_probabilities",
    "sample_event",
    "TrajectoryPoint",
    "WeightTracker",
    "ExactWeightMatrix",
    "observe",
    "update_vector",
    "YChain",
    "SkeletonWalk",
    "HittingRecord",
    "hitting_time",
    "jump_probability",
    "ruin_probability",
    "up_fraction",
    "LimitParams",
    "LimitState",
    "LevelState",
    "QuadratureError",
    "advantaged_fraction",
    "asymptotic_weight",
    "drift",
    "infinite_selection_weight",
    "limit_state",
    "limit_trajectory",
    "powered_odds",
    "powered_odds_inverse",
    "rk4_trajectory",
    "state_at_level",
    "weight_integral",
]

"""Online state-space representation learning for reinforcement learning,
with the puck-on-a-hill task as the benchmark."""

from .agent import AgentConfig, EconomizerAgent, ReplacingStack, StopRule, run_generation_session
from .criteria import CriteriaParams, LookaheadProfile, compatible, investigate, is_adequate, should_split
from .partition import Representation, diagonal_split, load, save, uniform_grid, voronoi_from_points
from .puck import Action, Bounds, EnvParams, PuckEnv, StartZone, State, Transition, sample_start
from .qtable import LearningParams, QTable

__all__ = [
    "Action", "AgentConfig", "Bounds", "CriteriaParams", "EconomizerAgent",
    "EnvParams", "LearningParams", "LookaheadProfile", "PuckEnv", "QTable",
    "ReplacingStack", "Representation", "StartZone", "State", "StopRule",
    "Transition", "compatible", "diagonal_split", "investigate", "is_adequate",
    "load", "run_generation_session", "sample_start", "save", "should_split",
    "uniform_grid", "voronoi_from_points",
]

__version__ = "0.1.0"

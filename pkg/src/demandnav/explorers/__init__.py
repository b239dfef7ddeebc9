"""Exploration agents: coarse block scoring, planning, fine policies, baselines."""

from .planning import NoPathError, compile_actions, plan_cells, plan_path
from .coarse import (
    BlockScore,
    CoarsePolicyConfig,
    ExplorationExhausted,
    block_score,
    select_waypoint,
)
from .fine import FinePolicyConfig, FineFeatureExtractor, bc_collect, bc_train
from .agents import AGENT_KINDS, run_episode

__all__ = [
    "NoPathError",
    "compile_actions",
    "plan_cells",
    "plan_path",
    "BlockScore",
    "CoarsePolicyConfig",
    "ExplorationExhausted",
    "block_score",
    "select_waypoint",
    "FinePolicyConfig",
    "FineFeatureExtractor",
    "bc_collect",
    "bc_train",
    "AGENT_KINDS",
    "run_episode",
]

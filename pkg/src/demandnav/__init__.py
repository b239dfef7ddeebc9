"""Desk-scale multi-object demand-driven navigation.

Deterministic 2-D scene simulator, exact benchmark metrics (success rate
and SPL with a shortest-tour oracle), a vector-quantized attribute model
trained with hand-derived gradients, and coarse-to-fine exploration agents
with Random / frontier / registry-targeting baselines.
"""

from .scene import (
    EpisodeSpec,
    ObjectInstance,
    Pose,
    SceneMap,
    Task,
    load_scene,
    load_tasks,
    save_scene,
    save_tasks,
    validate_tasks,
)
from .simulator import DetectorNoise, Episode, detect_fov
from .metrics import aggregate, shortest_solution_tour, spl, success_rate

__all__ = [
    "EpisodeSpec",
    "ObjectInstance",
    "Pose",
    "SceneMap",
    "Task",
    "load_scene",
    "load_tasks",
    "save_scene",
    "save_tasks",
    "validate_tasks",
    "DetectorNoise",
    "Episode",
    "detect_fov",
    "aggregate",
    "shortest_solution_tour",
    "spl",
    "success_rate",
]

__version__ = "0.1.0"

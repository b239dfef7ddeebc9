from __future__ import annotations

import numpy as np
import pytest

from demandnav.scene import (
    EpisodeSpec,
    ObjectInstance,
    Pose,
    SceneMap,
    Task,
    cell_center_pose,
)


def make_scene(
    width: int,
    height: int,
    walls: list[tuple[int, int]] | None = None,
    objects: list[ObjectInstance] | None = None,
    start_poses: list[Pose] | None = None,
    cell_size: float = 0.25,
) -> SceneMap:
    occ = np.zeros((height, width), dtype=bool)
    for x, y in walls or []:
        occ[y, x] = True
    scene = SceneMap(
        width=width,
        height=height,
        cell_size=cell_size,
        occupancy=occ,
        objects=objects or [],
        start_poses=start_poses or [cell_center_pose_raw(0, 0, cell_size)],
    )
    scene.validate()
    return scene


def cell_center_pose_raw(ix: int, iy: int, cell_size: float = 0.25, heading: int = 0, pitch: int = 0) -> Pose:
    return Pose(x=(ix + 0.5) * cell_size, y=(iy + 0.5) * cell_size, heading=heading, pitch=pitch)


def obj_at_cell(oid: str, category: str, ix: int, iy: int, height: float = 1.0, cell_size: float = 0.25) -> ObjectInstance:
    return ObjectInstance(
        id=oid, category=category, x=(ix + 0.5) * cell_size, y=(iy + 0.5) * cell_size, height=height
    )


@pytest.fixture
def corridor_scene() -> SceneMap:
    """32x32 scene with a walled-off corridor along y=2 and two objects."""
    width = height = 32
    occ = np.zeros((height, width), dtype=bool)
    occ[0, :] = True
    occ[-1, :] = True
    occ[:, 0] = True
    occ[:, -1] = True
    occ[5, 1:25] = True  # corridor wall with a gap at x >= 25
    objects = [
        obj_at_cell("mug_0", "mug", 20, 2),
        obj_at_cell("lamp_0", "lamp", 8, 20, height=1.5),
    ]
    poses = [cell_center_pose_raw(2, 2), cell_center_pose_raw(2, 10, heading=90)]
    scene = SceneMap(
        width=width, height=height, occupancy=occ, objects=objects, start_poses=poses
    )
    scene.validate()
    return scene


@pytest.fixture
def simple_task() -> Task:
    return Task(
        id="t0",
        instruction="I need somewhere to read, preferably well lit.",
        basic_instruction="I need somewhere to read.",
        preferred_instruction="preferably well lit",
        basic_solutions=(frozenset({"mug"}), frozenset({"mug", "lamp"})),
        preferred_solutions=(frozenset({"mug", "lamp"}),),
    )


@pytest.fixture
def default_spec() -> EpisodeSpec:
    return EpisodeSpec()

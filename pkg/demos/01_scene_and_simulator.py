"""Build a scene by hand, save and reload it, then drive the simulator.

Run:  python demos/01_scene_and_simulator.py
"""

import json
import tempfile

import numpy as np

from demandnav.scene import EpisodeSpec, ObjectInstance, Pose, SceneMap, Task
from demandnav.scene import load_scene, save_scene
from demandnav.simulator import Episode

# --- a small room with a dividing wall and two objects ---------------------

width = height = 24
occ = np.zeros((height, width), dtype=bool)
occ[0, :] = occ[-1, :] = True
occ[:, 0] = occ[:, -1] = True
occ[12, 4:20] = True          # interior wall
occ[12, 10] = occ[12, 11] = False  # with a doorway

objects = [
    ObjectInstance("mug_0", "mug", x=4.625, y=2.625, height=0.9),    # same room
    ObjectInstance("sofa_0", "sofa", x=2.625, y=4.625, height=0.8),  # behind the wall
]
scene = SceneMap(
    width=width, height=height, occupancy=occ, objects=objects,
    start_poses=[Pose(x=2.125, y=2.125, heading=0, pitch=0)],
)
scene.validate()
print(f"scene: {width}x{height} cells at {scene.cell_size} m, "
      f"{len(scene.objects)} objects, vocabulary {sorted(scene.categories)}")

# Scenes round-trip through JSON.
with tempfile.NamedTemporaryFile(suffix=".json", mode="w", delete=False) as fh:
    path = fh.name
save_scene(scene, path)
reloaded = load_scene(path)
print(f"round trip ok: {len(reloaded.objects)} objects, "
      f"occupancy equal = {np.array_equal(reloaded.occupancy, scene.occupancy)}")

# --- drive an episode -------------------------------------------------------

task = Task(
    id="demo",
    instruction="I need something to drink from, preferably somewhere to sit.",
    basic_instruction="I need something to drink from.",
    preferred_instruction="preferably somewhere to sit",
    basic_solutions=(frozenset({"mug"}), frozenset({"mug", "sofa"})),
    preferred_solutions=(frozenset({"mug", "sofa"}),),
)

episode = Episode(scene, task, EpisodeSpec(), seed=0)
state, obs = episode.reset()
print(f"\nstart pose: ({state.pose.x:.2f}, {state.pose.y:.2f}) "
      f"heading {state.pose.heading}")
print(f"initial detections: {[(d.object_id, round(d.range_m, 2)) for d in obs.detections]}")

# Walk toward the mug; Find records categories within d_find = 1 m.
for action in ["MoveAhead"] * 8 + ["RotateLeft"] * 3 + ["Find"]:
    state, obs, terminated = episode.step(action)
print(f"after 12 actions: pose ({state.pose.x:.2f}, {state.pose.y:.2f}) "
      f"heading {state.pose.heading}, path length {state.path_length} m")
print(f"found list after Find: {sorted(episode.found.categories)}")

# Facing north now: the sofa is within range and inside the horizontal FOV,
# but the interior wall blocks the line of sight, so it stays undetected.
visible = [d.object_id for d in obs.detections]
print(f"in view: {visible}  (sofa absent: wall occludes it)")
assert "sofa_0" not in visible

"""Deterministic episode execution: actions, field-of-view sensing, Find.

The agent carries a camera at ``CAMERA_HEIGHT`` meters. Motion is discrete:
0.25 m steps, 30 degree turns, 30 degree camera tilts. An object is sensed
when it is inside the horizontal and vertical field of view, within range,
and the discrete ray to it crosses no occupied cell. ``Find`` records the
ground-truth categories of every object currently within ``d_find``
regardless of detector noise; noise only corrupts what the agent sees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import bearing_deg, line_of_sight, wrap_deg
from .scene import EpisodeSpec, Pose, SceneError, SceneMap, Task

CAMERA_HEIGHT = 1.25
MOVE_STEP = 0.25
TURN_STEP = 30
PITCH_MIN, PITCH_MAX = -60, 60
DEPTH_RAY_SPACING_DEG = 2.0

ACTIONS = ("MoveAhead", "RotateRight", "RotateLeft", "LookUp", "LookDown", "Find", "Done")
NON_DONE_ACTIONS = ACTIONS[:-1]


class EpisodeTerminated(RuntimeError):
    """Raised when step() is called on an episode that already ended."""


@dataclass(frozen=True)
class Detection:
    object_id: str
    label: str  # category as reported by the detector (possibly wrong)
    range_m: float
    bearing_deg: float  # absolute, world frame
    v_angle_deg: float  # elevation of the object relative to the camera


@dataclass(frozen=True)
class DepthRay:
    bearing_deg: float
    range_m: float
    hit: bool  # True when the ray ended on an occupied cell


@dataclass(frozen=True)
class Observation:
    detections: tuple[Detection, ...]
    depth_profile: tuple[DepthRay, ...]


@dataclass(frozen=True)
class DetectorNoise:
    miss_rate: float = 0.0
    mislabel_rate: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not (0.0 <= self.miss_rate <= 1.0 and 0.0 <= self.mislabel_rate <= 1.0):
            raise ValueError("noise rates must lie in [0, 1]")


@dataclass
class FoundList:
    categories: set[str] = field(default_factory=set)
    events: list[tuple[int, tuple[str, ...]]] = field(default_factory=list)

    def record(self, step_index: int, object_ids: tuple[str, ...], categories: set[str]) -> None:
        self.categories |= categories
        self.events.append((step_index, object_ids))


@dataclass
class AgentState:
    pose: Pose
    steps_taken: int = 0
    finds_used: int = 0
    path_length: float = 0.0
    collided_last: bool = False


def _geometric_candidates(
    scene: SceneMap, pose: Pose, max_range: float, fov_h: float, fov_v: float
) -> list[Detection]:
    """Objects passing the range + FOV + line-of-sight predicate, exact labels."""
    if not scene.objects:
        return []
    xs = np.array([o.x for o in scene.objects])
    ys = np.array([o.y for o in scene.objects])
    dx = xs - pose.x
    dy = ys - pose.y
    rng = np.hypot(dx, dy)
    out: list[Detection] = []
    ax, ay = scene.cell(pose.x, pose.y)
    for i, obj in enumerate(scene.objects):
        r = float(rng[i])
        if r > max_range + 1e-9:
            continue
        if r < 1e-9:
            brg = float(pose.heading)
        else:
            brg = bearing_deg(float(dx[i]), float(dy[i]))
        if abs(wrap_deg(brg - pose.heading)) > fov_h / 2 + 1e-9:
            continue
        v = math.degrees(math.atan2(obj.height - CAMERA_HEIGHT, r))
        if abs(v - pose.pitch) > fov_v / 2 + 1e-9:
            continue
        ox, oy = scene.cell(obj.x, obj.y)
        if not line_of_sight(scene.occupancy, ax, ay, ox, oy):
            continue
        out.append(Detection(obj.id, obj.category, r, brg, v))
    return out


def _depth_profile(scene: SceneMap, pose: Pose, spec: EpisodeSpec) -> tuple[DepthRay, ...]:
    """March rays across the horizontal FOV and report the first hit per ray."""
    n_rays = int(math.ceil(spec.fov_h / DEPTH_RAY_SPACING_DEG)) + 1
    offsets = np.linspace(-spec.fov_h / 2, spec.fov_h / 2, n_rays)
    step = scene.cell_size / 3.0
    n_samples = int(math.ceil(spec.detection_range / step))
    ts = (np.arange(n_samples) + 1.0) * step
    angles = np.radians(pose.heading + offsets)
    sx = pose.x + np.outer(np.cos(angles), ts)  # (n_rays, n_samples)
    sy = pose.y + np.outer(np.sin(angles), ts)
    ix = np.floor(sx / scene.cell_size).astype(np.intp)
    iy = np.floor(sy / scene.cell_size).astype(np.intp)
    inside = (ix >= 0) & (ix < scene.width) & (iy >= 0) & (iy < scene.height)
    occ = np.zeros_like(inside)
    occ[inside] = scene.occupancy[iy[inside], ix[inside]]
    blocked = occ | ~inside
    any_block = blocked.any(axis=1)
    first = np.argmax(blocked, axis=1)
    rays = []
    for i in range(n_rays):
        brg = wrap_deg(pose.heading + float(offsets[i]))
        if any_block[i]:
            k = int(first[i])
            rays.append(DepthRay(brg, float(ts[k]), bool(occ[i, k])))
        else:
            rays.append(DepthRay(brg, spec.detection_range, False))
    return tuple(rays)


def detect_fov(
    scene: SceneMap, pose: Pose, spec: EpisodeSpec, noise: DetectorNoise | None = None
) -> Observation:
    """Simulated detector: geometric candidates with seeded miss / mislabel noise."""
    cands = _geometric_candidates(scene, pose, spec.detection_range, spec.fov_h, spec.fov_v)
    if noise is not None and (noise.miss_rate > 0 or noise.mislabel_rate > 0):
        noise.validate()
        rng = np.random.default_rng(noise.seed)
        vocab = sorted(scene.categories)
        kept = []
        for det in cands:
            if rng.random() < noise.miss_rate:
                continue
            if rng.random() < noise.mislabel_rate and len(vocab) > 1:
                wrong = [c for c in vocab if c != det.label]
                det = replace(det, label=wrong[int(rng.integers(len(wrong)))])
            kept.append(det)
        cands = kept
    return Observation(tuple(cands), _depth_profile(scene, pose, spec))


def find_candidates(scene: SceneMap, pose: Pose, spec: EpisodeSpec) -> list[Detection]:
    """Ground-truth objects the Find action would record from this pose."""
    return _geometric_candidates(scene, pose, spec.d_find, spec.fov_h, spec.fov_v)


class Episode:
    """One mutable episode over an immutable scene / task / spec triple."""

    def __init__(
        self,
        scene: SceneMap,
        task: Task,
        spec: EpisodeSpec | None = None,
        seed: int = 0,
        noise: DetectorNoise | None = None,
    ):
        self.scene = scene
        self.task = task
        self.spec = spec or EpisodeSpec()
        self.spec.validate()
        self.seed = seed
        self.noise = noise
        self.state: AgentState | None = None
        self.found = FoundList()
        self._done_chosen = False

    # -- lifecycle ---------------------------------------------------------

    def reset(self) -> tuple[AgentState, Observation]:
        """Start the episode: uniform start pose under the seed, counters zeroed."""
        if not self.scene.start_poses:
            raise SceneError("scene has no start poses")
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0xE0]))
        pose = self.scene.start_poses[int(rng.integers(len(self.scene.start_poses)))]
        self.state = AgentState(pose=pose)
        self.found = FoundList()
        self._done_chosen = False
        return self.state, self._observe()

    @property
    def terminated(self) -> bool:
        if self.state is None:
            return False
        return (
            self._done_chosen
            or self.state.finds_used >= self.spec.n_find
            or self.state.steps_taken >= self.spec.n_step
        )

    def _observe(self) -> Observation:
        noise = self.noise
        if noise is not None and self.state is not None:
            # Fresh per-step noise stream so misses vary over time but replay
            # identically for the same (seed, step) pair.
            sub = np.random.SeedSequence([noise.seed, self.state.steps_taken])
            noise = DetectorNoise(noise.miss_rate, noise.mislabel_rate, int(sub.generate_state(1)[0]))
        return detect_fov(self.scene, self.state.pose, self.spec, noise)

    def step(self, action: str) -> tuple[AgentState, Observation, bool]:
        """Apply one action; returns (state, observation, terminated)."""
        if self.state is None:
            raise EpisodeTerminated("episode not reset")
        if self.terminated:
            raise EpisodeTerminated("step() after the episode ended")
        if action not in ACTIONS:
            raise ValueError(f"unknown action {action!r}")
        st = self.state
        pose = st.pose
        st.collided_last = False
        if action == "MoveAhead":
            r = math.radians(pose.heading)
            nx = pose.x + MOVE_STEP * math.cos(r)
            ny = pose.y + MOVE_STEP * math.sin(r)
            if self.scene.is_free_point(nx, ny):
                st.pose = replace(pose, x=nx, y=ny)
                st.path_length += MOVE_STEP
            else:
                st.collided_last = True
        elif action == "RotateRight":
            st.pose = replace(pose, heading=(pose.heading - TURN_STEP) % 360)
        elif action == "RotateLeft":
            st.pose = replace(pose, heading=(pose.heading + TURN_STEP) % 360)
        elif action == "LookUp":
            st.pose = replace(pose, pitch=min(pose.pitch + TURN_STEP, PITCH_MAX))
        elif action == "LookDown":
            st.pose = replace(pose, pitch=max(pose.pitch - TURN_STEP, PITCH_MIN))
        elif action == "Find":
            cands = find_candidates(self.scene, st.pose, self.spec)
            self.found.record(
                st.steps_taken + 1,
                tuple(d.object_id for d in cands),
                {d.label for d in cands},
            )
            st.finds_used += 1
        elif action == "Done":
            self._done_chosen = True
        st.steps_taken += 1
        return st, self._observe(), self.terminated

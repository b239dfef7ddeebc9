"""Fine exploration: feature extraction, behavior cloning, expert collection.

The behavior-cloned policy is a small MLP over pooled detection-similarity
features, pooled instruction attribute features, the previous action and
the offset to the current target, scoring the six non-Done actions.
Training data comes from a scripted expert that spawns near a solution
object, walks a greedy shortest path to it, orients the camera by relative
bearing and height, and ends with a single Find.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..attributes.embeddings import EmbeddingTable
from ..attributes.inference import instruction_attributes, object_attributes
from ..attributes.model import AttributeModel
from ..geometry import UNREACHED, bearing_deg, bfs_distance_field, wrap_deg
from ..mapping import FREE, OCCUPIED, ExploredMap
from ..scene import EpisodeSpec, Pose, SceneMap, Task
from ..simulator import CAMERA_HEIGHT, Detection, Episode, NON_DONE_ACTIONS
from .coarse import object_similarity
from .planning import NoPathError, compile_actions, plan_cells

FINE_ACTIONS = NON_DONE_ACTIONS  # MoveAhead, RotateRight, RotateLeft, LookUp, LookDown, Find


@dataclass(frozen=True)
class FinePolicyConfig:
    mode: str = "scripted"  # "scripted" | "bc"
    step_budget: int = 30
    approach_threshold: float = 0.0  # non-positive: always approach the best

    def validate(self) -> None:
        if self.step_budget < 1:
            raise ValueError("step_budget must be >= 1")
        if self.mode not in ("scripted", "bc"):
            raise ValueError(f"unknown fine mode {self.mode!r}")


@dataclass(frozen=True)
class FineStepContext:
    """Raw inputs the fine policy sees at one step."""

    detections: tuple[Detection, ...]
    pose: Pose
    prev_action: str  # one of FINE_ACTIONS or "none"
    target: tuple[float, float]  # current waypoint / target position, world frame


@dataclass
class BCTrajectory:
    task_id: str
    steps: list[tuple[FineStepContext, str]] = field(default_factory=list)


@dataclass
class BCDataset:
    trajectories: list[BCTrajectory] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trajectories)

    def n_steps(self) -> int:
        return sum(len(t.steps) for t in self.trajectories)


def estimated_height(det: Detection) -> float:
    return CAMERA_HEIGHT + math.tan(math.radians(det.v_angle_deg)) * det.range_m


class FineFeatureExtractor:
    """Maps a FineStepContext to a fixed-size feature vector."""

    def __init__(
        self,
        table: EmbeddingTable,
        branch: str,
        model: AttributeModel | None = None,
        r_b: float = 1.0,
        r_p: float = 1.0,
    ):
        self.table = table
        self.branch = branch
        self.model = model
        self.r_b = r_b
        self.r_p = r_p
        self.dim = table.dim
        self._instr: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self._obj: dict[str, np.ndarray | None] = {}

    @property
    def n_features(self) -> int:
        return 18 + 2 * self.dim

    def instr_attrs(self, task_id: str) -> tuple[np.ndarray, np.ndarray]:
        if task_id not in self._instr:
            self._instr[task_id] = instruction_attributes(
                task_id, self.branch, self.table, self.model
            )
        return self._instr[task_id]

    def obj_attrs(self, label: str) -> np.ndarray | None:
        if label not in self._obj:
            self._obj[label] = object_attributes(label, self.branch, self.table, self.model)
        return self._obj[label]

    def features(self, step: FineStepContext, task_id: str) -> np.ndarray:
        ia_b, ia_p = self.instr_attrs(task_id)
        pose = step.pose
        sims = [
            object_similarity(d.label, ia_b, ia_p, self.obj_attrs, self.r_b, self.r_p)
            for d in step.detections
        ]
        pooled = np.zeros(8)
        pooled[7] = pose.pitch / 60.0
        if sims:
            best = int(np.argmax(sims))
            det = step.detections[best]
            dbrg = math.radians(wrap_deg(det.bearing_deg - pose.heading))
            pooled[0] = min(len(sims), 5) / 5.0
            pooled[1] = max(sims)
            pooled[2] = float(np.mean(sims))
            pooled[3] = math.sin(dbrg)
            pooled[4] = math.cos(dbrg)
            pooled[5] = min(det.range_m, 5.0) / 5.0
            pooled[6] = det.v_angle_deg / 60.0
        prev = np.zeros(7)
        prev_idx = (
            FINE_ACTIONS.index(step.prev_action) if step.prev_action in FINE_ACTIONS else 6
        )
        prev[prev_idx] = 1.0
        dx = step.target[0] - pose.x
        dy = step.target[1] - pose.y
        r = -math.radians(pose.heading)
        dxa = dx * math.cos(r) - dy * math.sin(r)
        dya = dx * math.sin(r) + dy * math.cos(r)
        dist = math.hypot(dx, dy)
        offset = np.array(
            [np.clip(dxa / 5.0, -1, 1), np.clip(dya / 5.0, -1, 1), min(dist, 5.0) / 5.0]
        )
        return np.concatenate([pooled, ia_b.mean(axis=0), ia_p.mean(axis=0), prev, offset])


# ---------------------------------------------------------------------------
# Behavior-cloned policy


@dataclass
class BCPolicy:
    extractor: FineFeatureExtractor
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = np.maximum(x @ self.W1 + self.b1, 0.0)
        return h @ self.W2 + self.b2

    def act(self, step: FineStepContext, task_id: str) -> str:
        x = self.extractor.features(step, task_id)
        return FINE_ACTIONS[int(np.argmax(self.logits(x)))]

    def params(self):
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}


class BCTrainingDiverged(RuntimeError):
    pass


def _xent_and_grads(policy: BCPolicy, x: np.ndarray, y: int):
    z1 = x @ policy.W1 + policy.b1
    h = np.maximum(z1, 0.0)
    logits = h @ policy.W2 + policy.b2
    shifted = logits - logits.max()
    log_z = math.log(np.exp(shifted).sum())
    loss = float(log_z - shifted[y])
    p = np.exp(shifted - log_z)
    dlogits = p.copy()
    dlogits[y] -= 1.0
    grads = {
        "W2": np.outer(h, dlogits),
        "b2": dlogits,
    }
    dh = policy.W2 @ dlogits
    dz1 = dh * (z1 > 0)
    grads["W1"] = np.outer(x, dz1)
    grads["b1"] = dz1
    return loss, grads


def init_bc_policy(extractor: FineFeatureExtractor, seed: int = 0, hidden: int = 24) -> BCPolicy:
    rng = np.random.default_rng(seed)
    f = extractor.n_features
    return BCPolicy(
        extractor=extractor,
        W1=rng.normal(0, 1 / math.sqrt(f), size=(f, hidden)),
        b1=rng.normal(0, 0.01, size=hidden),
        W2=rng.normal(0, 1 / math.sqrt(hidden), size=(hidden, len(FINE_ACTIONS))),
        b2=np.zeros(len(FINE_ACTIONS)),
    )


def bc_train(
    dataset: BCDataset,
    extractor: FineFeatureExtractor,
    epochs: int = 50,
    lr: float = 0.05,
    seed: int = 0,
) -> tuple[BCPolicy, list[float]]:
    """Cross-entropy behavior cloning; deterministic under the seed."""
    if not dataset.trajectories:
        raise ValueError("empty behavior-cloning dataset")
    xs, ys = [], []
    for traj in dataset.trajectories:
        for step, action in traj.steps:
            xs.append(extractor.features(step, traj.task_id))
            ys.append(FINE_ACTIONS.index(action))
    X = np.stack(xs)
    Y = np.array(ys)
    policy = init_bc_policy(extractor, seed=seed)
    rng = np.random.default_rng(seed)
    curve = []
    for epoch in range(epochs):
        order = rng.permutation(len(Y))
        total = 0.0
        for i in order:
            loss, grads = _xent_and_grads(policy, X[i], int(Y[i]))
            if not math.isfinite(loss):
                raise BCTrainingDiverged(f"non-finite loss at epoch {epoch}")
            total += loss
            for name, g in grads.items():
                getattr(policy, name)[...] -= lr * g
        curve.append(total / len(Y))
    return policy, curve


def bc_accuracy(policy: BCPolicy, dataset: BCDataset) -> float:
    hits = 0
    total = 0
    for traj in dataset.trajectories:
        for step, action in traj.steps:
            hits += policy.act(step, traj.task_id) == action
            total += 1
    return hits / total if total else 0.0


# ---------------------------------------------------------------------------
# Expert trajectory collection


def true_explored_map(scene: SceneMap) -> ExploredMap:
    """Fully revealed map of the ground-truth grid (oracle planning)."""
    emap = ExploredMap(width=scene.width, height=scene.height, cell_size=scene.cell_size)
    emap.cells[...] = np.where(scene.occupancy, OCCUPIED, FREE)
    return emap


def _orient_action(pose: Pose, tx: float, ty: float, theight: float, spec: EpisodeSpec) -> str | None:
    """Next rotation / tilt needed to bring the target into view, else None."""
    r = math.hypot(tx - pose.x, ty - pose.y)
    brg = bearing_deg(tx - pose.x, ty - pose.y)
    dbrg = wrap_deg(brg - pose.heading)
    if abs(dbrg) > spec.fov_h / 2:
        return "RotateLeft" if dbrg > 0 else "RotateRight"
    v = math.degrees(math.atan2(theight - CAMERA_HEIGHT, r))
    dv = v - pose.pitch
    if abs(dv) > spec.fov_v / 2:
        return "LookUp" if dv > 0 else "LookDown"
    return None


def bc_collect(
    scenes: list[SceneMap],
    tasks: list[Task],
    spec: EpisodeSpec,
    count: int,
    seed: int = 0,
    spawn_radius: float = 2.0,
    max_steps: int = 60,
) -> BCDataset:
    """Collect short expert trajectories, each ending in exactly one Find.

    Per trajectory: pick a scene, a task and a solution object present in
    the scene; spawn on a free cell within ``spawn_radius`` of it; walk the
    greedy shortest path; orient by relative bearing and height; Find.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBC]))
    dataset = BCDataset()
    attempts = 0
    while len(dataset.trajectories) < count:
        attempts += 1
        if attempts > 50 * count:
            raise ValueError("no valid spawn found; scenes may lack solution objects")
        scene = scenes[int(rng.integers(len(scenes)))]
        task = tasks[int(rng.integers(len(tasks)))]
        emap_true = true_explored_map(scene)
        sol_objects = [o for o in scene.objects if o.category in task.all_categories]
        if not sol_objects:
            continue
        target = sol_objects[int(rng.integers(len(sol_objects)))]
        tcell = scene.cell(target.x, target.y)
        field = bfs_distance_field(~scene.occupancy, [tcell])
        cs = scene.cell_size
        radius_cells = int(spawn_radius / cs)
        spawn_cells = [
            (x, y)
            for x in range(max(0, tcell[0] - radius_cells), min(scene.width, tcell[0] + radius_cells + 1))
            for y in range(max(0, tcell[1] - radius_cells), min(scene.height, tcell[1] + radius_cells + 1))
            if field[y, x] != UNREACHED
            and math.hypot((x + 0.5) * cs - target.x, (y + 0.5) * cs - target.y) <= spawn_radius
        ]
        if not spawn_cells:
            continue
        sx, sy = spawn_cells[int(rng.integers(len(spawn_cells)))]
        spawn = Pose(
            x=(sx + 0.5) * cs, y=(sy + 0.5) * cs,
            heading=int(rng.integers(12)) * 30,
            pitch=int(rng.integers(-1, 2)) * 30,
        )
        episode = Episode(
            replace(scene, start_poses=[spawn], occupancy=scene.occupancy),
            task,
            replace(spec, n_step=max_steps + 3),
            seed=int(rng.integers(1 << 31)),
        )
        _, obs = episode.reset()
        traj = BCTrajectory(task_id=task.id)
        prev = "none"
        for _ in range(max_steps):
            pose = episode.state.pose
            dist = math.hypot(target.x - pose.x, target.y - pose.y)
            action = None
            if dist > 0.3:
                try:
                    cells = plan_cells(emap_true, scene.cell(pose.x, pose.y), tcell)
                    walk = compile_actions(cells, pose.heading)
                    action = walk[0] if walk else None
                except NoPathError:
                    break
            if action is None:
                action = _orient_action(pose, target.x, target.y, target.height, spec) or "Find"
            traj.steps.append(
                (FineStepContext(obs.detections, pose, prev, (target.x, target.y)), action)
            )
            _, obs, terminated = episode.step(action)
            prev = action
            if action == "Find":
                break
            if terminated:
                traj = None
                break
        if traj is None or not traj.steps or traj.steps[-1][1] != "Find":
            # Budget ran out: close with an explicit Find so the contract holds.
            if traj is not None and traj.steps and not episode.terminated:
                pose = episode.state.pose
                traj.steps.append(
                    (FineStepContext(obs.detections, pose, prev, (target.x, target.y)), "Find")
                )
                episode.step("Find")
            else:
                continue
        dataset.trajectories.append(traj)
    return dataset

"""Scene, task and episode data model plus JSON loading and validation.

Scenes are 2-D occupancy grids at 0.25 m resolution with category-labeled
point objects (carrying a height for camera pitch checks) and a list of
legal start poses. Tasks pair a demand instruction with basic and preferred
solution families, each solution being a set of object categories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import cell_of

DEFAULT_CELL_SIZE = 0.25

VALID_PITCHES = (-60, -30, 0, 30, 60)


class SceneError(ValueError):
    """Raised when a scene file cannot be parsed or violates an invariant."""


class TaskError(ValueError):
    """Raised when a task file cannot be parsed."""


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: int = 0
    pitch: int = 0

    def validate(self) -> None:
        if self.heading % 30 != 0 or not (0 <= self.heading < 360):
            raise SceneError(f"heading {self.heading} is not a multiple of 30 in [0, 360)")
        if self.pitch not in VALID_PITCHES:
            raise SceneError(f"pitch {self.pitch} not in {VALID_PITCHES}")


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    category: str
    x: float
    y: float
    height: float = 1.0


@dataclass
class SceneMap:
    width: int
    height: int
    cell_size: float = DEFAULT_CELL_SIZE
    occupancy: np.ndarray = field(default=None)  # bool [height, width], True = occupied
    objects: list[ObjectInstance] = field(default_factory=list)
    start_poses: list[Pose] = field(default_factory=list)

    def __post_init__(self):
        if self.occupancy is None:
            self.occupancy = np.zeros((self.height, self.width), dtype=bool)
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        self.occupancy.setflags(write=False)

    def cell(self, x: float, y: float) -> tuple[int, int]:
        return cell_of(x, self.cell_size), cell_of(y, self.cell_size)

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_free(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and not self.occupancy[iy, ix]

    def is_free_point(self, x: float, y: float) -> bool:
        ix, iy = self.cell(x, y)
        return self.is_free(ix, iy)

    @property
    def categories(self) -> set[str]:
        return {o.category for o in self.objects}

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise SceneError("scene must be at least 1x1")
        if self.occupancy.shape != (self.height, self.width):
            raise SceneError(
                f"occupancy shape {self.occupancy.shape} does not match "
                f"height x width ({self.height}, {self.width})"
            )
        if self.cell_size <= 0:
            raise SceneError("cell_size must be positive")
        seen_ids: set[str] = set()
        for obj in self.objects:
            if not obj.category:
                raise SceneError(f"object {obj.id!r} has an empty category")
            if obj.id in seen_ids:
                raise SceneError(f"duplicate object id {obj.id!r}")
            seen_ids.add(obj.id)
            if not self.is_free_point(obj.x, obj.y):
                raise SceneError(
                    f"object {obj.id!r} at ({obj.x}, {obj.y}) is not on a free cell"
                )
        if not self.start_poses:
            raise SceneError("scene needs at least one start pose")
        for pose in self.start_poses:
            pose.validate()
            if not self.is_free_point(pose.x, pose.y):
                raise SceneError(f"start pose ({pose.x}, {pose.y}) is not on a free cell")


@dataclass(frozen=True)
class Task:
    id: str
    instruction: str
    basic_instruction: str
    preferred_instruction: str
    basic_solutions: tuple[frozenset[str], ...]
    preferred_solutions: tuple[frozenset[str], ...]

    @property
    def all_categories(self) -> frozenset[str]:
        cats: set[str] = set()
        for sol in self.basic_solutions + self.preferred_solutions:
            cats |= sol
        return frozenset(cats)


@dataclass(frozen=True)
class EpisodeSpec:
    d_find: float = 1.0
    n_find: int = 5
    n_step: int = 300
    detection_range: float = 5.0
    fov_h: float = 90.0
    fov_v: float = 60.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("d_find", "detection_range", "fov_h", "fov_v"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.n_find <= 0 or self.n_step < 0:
            raise ValueError("n_find must be > 0 and n_step >= 0")


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    task_id: str
    message: str

    def __str__(self) -> str:
        return f"[{self.severity}] task {self.task_id}: {self.message}"


# ---------------------------------------------------------------------------
# Scene file I/O
#
# Format: JSON object with cell_size, width, height, occupancy (row-major
# string of '.' free / '#' occupied, row y=0 first), objects and start_poses.


def scene_to_dict(scene: SceneMap) -> dict:
    rows = []
    for iy in range(scene.height):
        rows.append("".join("#" if scene.occupancy[iy, ix] else "." for ix in range(scene.width)))
    return {
        "cell_size": scene.cell_size,
        "width": scene.width,
        "height": scene.height,
        "occupancy": "".join(rows),
        "objects": [
            {"id": o.id, "category": o.category, "x": o.x, "y": o.y, "height": o.height}
            for o in scene.objects
        ],
        "start_poses": [
            {"x": p.x, "y": p.y, "heading": p.heading, "pitch": p.pitch}
            for p in scene.start_poses
        ],
    }


def scene_from_dict(data: dict) -> SceneMap:
    try:
        width = int(data["width"])
        height = int(data["height"])
        cell_size = float(data.get("cell_size", DEFAULT_CELL_SIZE))
        occ_str = data["occupancy"]
    except KeyError as exc:
        raise SceneError(f"scene file missing field {exc.args[0]!r}") from None
    if len(occ_str) != width * height:
        raise SceneError(
            f"occupancy string length {len(occ_str)} != width*height {width * height}"
        )
    bad = set(occ_str) - {".", "#"}
    if bad:
        raise SceneError(f"occupancy contains invalid characters {sorted(bad)!r}")
    occ = np.array([c == "#" for c in occ_str], dtype=bool).reshape(height, width)
    objects = []
    for i, od in enumerate(data.get("objects", [])):
        try:
            objects.append(
                ObjectInstance(
                    id=str(od["id"]),
                    category=str(od["category"]),
                    x=float(od["x"]),
                    y=float(od["y"]),
                    height=float(od.get("height", 1.0)),
                )
            )
        except KeyError as exc:
            raise SceneError(f"object #{i} missing field {exc.args[0]!r}") from None
    poses = []
    for i, pd in enumerate(data.get("start_poses", [])):
        try:
            poses.append(
                Pose(
                    x=float(pd["x"]),
                    y=float(pd["y"]),
                    heading=int(pd.get("heading", 0)),
                    pitch=int(pd.get("pitch", 0)),
                )
            )
        except KeyError as exc:
            raise SceneError(f"start pose #{i} missing field {exc.args[0]!r}") from None
    scene = SceneMap(
        width=width,
        height=height,
        cell_size=cell_size,
        occupancy=occ,
        objects=objects,
        start_poses=poses,
    )
    scene.validate()
    return scene


def load_scene(path: str) -> SceneMap:
    """Load and validate a scene JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return scene_from_dict(data)


def save_scene(scene: SceneMap, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Task file I/O
#
# A task file is a JSON array of objects with the fields task_instruction,
# basic_demand_instruction, preferred_demand_instruction, basic_solution and
# preferred_solution (solutions are lists of category lists), plus an id.


def task_to_dict(task: Task) -> dict:
    return {
        "id": task.id,
        "task_instruction": task.instruction,
        "basic_demand_instruction": task.basic_instruction,
        "preferred_demand_instruction": task.preferred_instruction,
        "basic_solution": [sorted(s) for s in task.basic_solutions],
        "preferred_solution": [sorted(s) for s in task.preferred_solutions],
    }


def task_from_dict(data: dict, index: int = 0) -> tuple[Task, list[Diagnostic]]:
    """Build a Task from its file dict, collecting file-level diagnostics.

    Duplicate categories inside one solution are reported here (they are
    invisible once solutions become sets) and the duplicates dropped.
    """
    task_id = str(data.get("id", f"task_{index}"))
    diags: list[Diagnostic] = []

    def parse_family(key: str) -> tuple[frozenset[str], ...]:
        fam = []
        for sol in data.get(key, []):
            cats = [str(c) for c in sol]
            if len(cats) != len(set(cats)):
                dupes = sorted({c for c in cats if cats.count(c) > 1})
                diags.append(
                    Diagnostic(
                        "error",
                        task_id,
                        f"duplicate categories {dupes} within one {key} entry",
                    )
                )
            fam.append(frozenset(cats))
        return tuple(fam)

    task = Task(
        id=task_id,
        instruction=str(data.get("task_instruction", "")),
        basic_instruction=str(data.get("basic_demand_instruction", "")),
        preferred_instruction=str(data.get("preferred_demand_instruction", "")),
        basic_solutions=parse_family("basic_solution"),
        preferred_solutions=parse_family("preferred_solution"),
    )
    return task, diags


def load_tasks(path: str) -> tuple[list[Task], list[Diagnostic]]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TaskError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise TaskError(f"{path}: expected a JSON array of tasks")
    tasks = []
    diags: list[Diagnostic] = []
    for i, td in enumerate(data):
        task, task_diags = task_from_dict(td, i)
        tasks.append(task)
        diags.extend(task_diags)
    return tasks, diags


def save_tasks(tasks: list[Task], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([task_to_dict(t) for t in tasks], fh, indent=1)
        fh.write("\n")


def validate_tasks(tasks: list[Task], vocab: set[str]) -> list[Diagnostic]:
    """Check task invariants against a category vocabulary.

    Errors: empty solutions, categories outside the vocabulary.
    Warnings: a preferred solution with no identical basic entry (a preferred
    solution satisfies the basic demand too, so it should be listed in both
    families).
    """
    diags: list[Diagnostic] = []
    for task in tasks:
        for family, name in (
            (task.basic_solutions, "basic"),
            (task.preferred_solutions, "preferred"),
        ):
            if not family:
                diags.append(Diagnostic("error", task.id, f"no {name} solutions"))
            for sol in family:
                if not sol:
                    diags.append(Diagnostic("error", task.id, f"empty {name} solution"))
                unknown = sorted(sol - vocab)
                for cat in unknown:
                    diags.append(
                        Diagnostic(
                            "error", task.id, f"category {cat!r} not in the vocabulary"
                        )
                    )
        basic_set = set(task.basic_solutions)
        for sol in task.preferred_solutions:
            if sol and sol not in basic_set:
                diags.append(
                    Diagnostic(
                        "warning",
                        task.id,
                        f"preferred solution {sorted(sol)} has no matching basic entry",
                    )
                )
    return diags


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diags)


def free_cells(scene: SceneMap) -> list[tuple[int, int]]:
    ys, xs = np.nonzero(~scene.occupancy)
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


def cell_center_pose(scene: SceneMap, ix: int, iy: int, heading: int = 0, pitch: int = 0) -> Pose:
    c = scene.cell_size
    return Pose(x=(ix + 0.5) * c, y=(iy + 0.5) * c, heading=heading, pitch=pitch)

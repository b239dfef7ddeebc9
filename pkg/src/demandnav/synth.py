"""Synthetic scenes, tasks and planted-concept embedding tables.

Every abstract attribute concept is a random unit vector. An instruction
part and an object category get noisy copies of the same concept vector
exactly when the category belongs to that part's solutions, so attribute
similarity search is informative by construction: solution pairs have a
max-pair cosine near 1, unrelated pairs look like random unit vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attributes.embeddings import (
    EmbeddingTable,
    category_key,
    instruction_attr_key,
    instruction_key,
    object_attr_key,
)
from .attributes.losses import TrainSample
from .geometry import UNREACHED, bfs_distance_field
from .scene import ObjectInstance, Pose, SceneMap, Task, has_errors, validate_tasks

CATEGORY_NAMES = (
    "mug", "kettle", "sofa", "lamp", "desk", "monitor", "blanket", "pillow",
    "bookshelf", "plant", "speaker", "mirror", "heater", "fan", "rug",
    "easel", "piano", "toaster", "vase", "clock", "stool", "cabinet",
    "printer", "guitar",
)


@dataclass(frozen=True)
class SynthParams:
    width: int = 40
    height: int = 40
    cell_size: float = 0.25
    n_wall_segments: int = 6
    n_categories: int = 18
    n_objects: int = 30
    n_tasks: int = 10
    n_start_poses: int = 4
    dim: int = 32
    k1: int = 4
    k2: int = 4
    noise: float = 0.1
    max_basic_size: int = 2
    max_pref_extra: int = 1

    def validate(self) -> None:
        for name in (
            "width", "height", "n_categories", "n_start_poses", "dim", "k1", "k2",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_objects < 0 or self.n_tasks < 0 or self.n_wall_segments < 0:
            raise ValueError("counts must be non-negative")
        if not (0.0 <= self.noise <= 0.1):
            raise ValueError("noise must lie in [0, 0.1]")


def _unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def _noisy_copy(rng: np.random.Generator, concept: np.ndarray, eps: float) -> np.ndarray:
    """concept + a perturbation of norm <= eps, renormalized."""
    d = concept.shape[0]
    u = rng.normal(size=d)
    u *= (eps * rng.random()) / np.linalg.norm(u)
    v = concept + u
    return v / np.linalg.norm(v)


def _build_occupancy(rng: np.random.Generator, p: SynthParams) -> np.ndarray:
    occ = np.zeros((p.height, p.width), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    if min(p.width, p.height) < 10:
        return occ  # too small for interior walls
    for _ in range(p.n_wall_segments):
        if rng.random() < 0.5:  # vertical wall with a gap
            x = int(rng.integers(4, p.width - 4))
            y0 = int(rng.integers(1, p.height // 2))
            length = int(rng.integers(p.height // 4, p.height - y0 - 1))
            gap = y0 + int(rng.integers(length))
            for y in range(y0, min(y0 + length, p.height - 1)):
                if abs(y - gap) > 1:
                    occ[y, x] = True
        else:
            y = int(rng.integers(4, p.height - 4))
            x0 = int(rng.integers(1, p.width // 2))
            length = int(rng.integers(p.width // 4, p.width - x0 - 1))
            gap = x0 + int(rng.integers(length))
            for x in range(x0, min(x0 + length, p.width - 1)):
                if abs(x - gap) > 1:
                    occ[y, x] = True
    return occ


def _largest_component(occ: np.ndarray) -> list[tuple[int, int]]:
    free = ~occ
    h, w = free.shape
    best: list[tuple[int, int]] = []
    seen = np.zeros_like(free)
    for y in range(h):
        for x in range(w):
            if free[y, x] and not seen[y, x]:
                field = bfs_distance_field(free, [(x, y)])
                comp_mask = field != UNREACHED
                seen |= comp_mask
                if int(comp_mask.sum()) > len(best):
                    ys, xs = np.nonzero(comp_mask)
                    best = [(int(cx), int(cy)) for cx, cy in zip(xs, ys)]
    return best


def synth_generate(
    seed: int, params: SynthParams | None = None
) -> tuple[SceneMap, list[Task], EmbeddingTable]:
    """Deterministic scene + tasks + planted embedding table for one seed."""
    p = params or SynthParams()
    p.validate()
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E]))

    vocab = [
        CATEGORY_NAMES[i] if i < len(CATEGORY_NAMES) else f"category_{i}"
        for i in range(p.n_categories)
    ]

    # --- tasks and concept assignment -------------------------------------
    concepts: dict[str, list[np.ndarray]] = {c: [] for c in vocab}  # per category
    tasks: list[Task] = []
    task_concepts: list[tuple[np.ndarray, np.ndarray]] = []  # (basic, pref) per task

    def sample_cats(k: int, exclude: set[str]) -> list[str]:
        avail = [c for c in vocab if len(concepts[c]) < p.k2 and c not in exclude]
        if len(avail) < k:
            raise ValueError("infeasible params: not enough category concept slots")
        idx = rng.choice(len(avail), size=k, replace=False)
        return [avail[int(i)] for i in sorted(idx)]

    for t in range(p.n_tasks):
        c_basic = _unit(rng, p.dim)
        c_pref = _unit(rng, p.dim)
        n_basic = int(rng.integers(1, p.max_basic_size + 1))
        n_pref = int(rng.integers(1, p.max_pref_extra + 1))
        basic_cats = sample_cats(n_basic, set())
        pref_cats = sample_cats(n_pref, set(basic_cats))
        for c in basic_cats:
            concepts[c].append(c_basic)
        for c in pref_cats:
            concepts[c].append(c_pref)
        s_basic = frozenset(basic_cats)
        s_pref = frozenset(basic_cats) | frozenset(pref_cats)
        tasks.append(
            Task(
                id=f"task_{t:03d}",
                instruction=(
                    f"I need {' and '.join(sorted(s_basic))}, "
                    f"preferably with {' and '.join(sorted(pref_cats))}."
                ),
                basic_instruction=f"I need {' and '.join(sorted(s_basic))}.",
                preferred_instruction=f"preferably with {' and '.join(sorted(pref_cats))}",
                basic_solutions=(s_basic, s_pref),
                preferred_solutions=(s_pref,),
            )
        )
        task_concepts.append((c_basic, c_pref))

    # Fill remaining attribute slots with private concepts.
    for c in vocab:
        while len(concepts[c]) < p.k2:
            concepts[c].append(_unit(rng, p.dim))

    # --- embedding table ----------------------------------------------------
    table = EmbeddingTable(dim=p.dim, provenance="synthetic")
    for c in vocab:
        rows = []
        for j in range(p.k2):
            vec = _noisy_copy(rng, concepts[c][j], p.noise)
            table.add(object_attr_key(c, j), vec)
            rows.append(vec)
        mean = np.mean(rows, axis=0)
        table.add(category_key(c), mean / np.linalg.norm(mean))
    for t, task in enumerate(tasks):
        c_basic, c_pref = task_concepts[t]
        for part, concept in (("basic", c_basic), ("pref", c_pref)):
            rows = []
            for i in range(p.k1):
                vec = _noisy_copy(rng, concept, p.noise)
                table.add(instruction_attr_key(task.id, part, i), vec)
                rows.append(vec)
            mean = np.mean(rows, axis=0)
            table.add(instruction_key(task.id, part), mean / np.linalg.norm(mean))

    # --- scene ----------------------------------------------------------------
    occ = _build_occupancy(rng, p)
    component = _largest_component(occ)
    needed = {c for task in tasks for c in task.all_categories}
    n_objects = max(p.n_objects, len(needed))
    if len(component) < n_objects + p.n_start_poses:
        raise ValueError("infeasible params: more objects than free cells")
    order = rng.permutation(len(component))
    cells = [component[int(i)] for i in order]
    object_cats = sorted(needed) + [
        vocab[int(rng.integers(len(vocab)))] for _ in range(n_objects - len(needed))
    ]
    cs = p.cell_size
    objects = [
        ObjectInstance(
            id=f"obj_{i:03d}",
            category=cat,
            x=(cells[i][0] + 0.5) * cs,
            y=(cells[i][1] + 0.5) * cs,
            height=float(np.round(rng.uniform(0.4, 1.6), 3)),
        )
        for i, cat in enumerate(object_cats)
    ]
    start_poses = [
        Pose(
            x=(cells[n_objects + j][0] + 0.5) * cs,
            y=(cells[n_objects + j][1] + 0.5) * cs,
            heading=int(rng.integers(12)) * 30,
            pitch=0,
        )
        for j in range(p.n_start_poses)
    ]
    scene = SceneMap(
        width=p.width,
        height=p.height,
        cell_size=cs,
        occupancy=occ,
        objects=objects,
        start_poses=start_poses,
    )
    scene.validate()
    diags = validate_tasks(tasks, scene.categories)
    if has_errors(diags):
        raise AssertionError(f"generated tasks failed validation: {diags[:3]}")
    return scene, tasks, table


def training_samples(tasks: list[Task], params: SynthParams | None = None) -> list[TrainSample]:
    """One sample per (instruction part, solution category) pair.

    The basic part pairs with its basic-solution categories, the preferred
    part with the preference categories beyond the basic solution.
    """
    p = params or SynthParams()
    samples = []
    for task in tasks:
        basic = min(task.basic_solutions, key=len)
        pref_extra = min(task.preferred_solutions, key=len) - basic
        for part, cats in (("basic", sorted(basic)), ("pref", sorted(pref_extra))):
            gt_i = tuple(instruction_attr_key(task.id, part, i) for i in range(p.k1))
            for cat in cats:
                samples.append(
                    TrainSample(
                        instruction_key=instruction_key(task.id, part),
                        object_key=category_key(cat),
                        gt_instruction_attr_keys=gt_i,
                        gt_object_attr_keys=tuple(
                            object_attr_key(cat, j) for j in range(p.k2)
                        ),
                    )
                )
    return samples

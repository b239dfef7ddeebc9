"""Benchmark metrics: success rates, SPL, the shortest-tour oracle, aggregation.

The success rate of an episode is the best fractional coverage of any
solution by the found list. SPL weights it by the ratio of the shortest
achievable path to the path actually taken. The shortest path is a tour
that starts at the episode's start pose and enters, for every reachable
category of the best-achievable solution, some free cell within ``d_find``
of an instance of that category; order and instance choice are optimal.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import UNREACHED, bfs_distance_field, dijkstra_offset_field
from .scene import EpisodeSpec, Pose, SceneMap, Task


def success_rate(found: set[str], solutions: list[frozenset[str]] | tuple) -> float:
    """Best fractional coverage of any solution by the found categories."""
    if not solutions:
        raise ValueError("solution list is empty")
    best = 0.0
    for sol in solutions:
        if not sol:
            raise ValueError("solutions must be non-empty")
        best = max(best, len(found & sol) / len(sol))
    return best


def spl(sr: float, l: float, p: float) -> float:
    """Success weighted by shortest-path over taken-path; l = 0 falls back to sr."""
    if l < 0 or p < 0:
        raise ValueError("lengths must be non-negative")
    if l == 0.0:
        return sr
    return sr * l / max(p, l)


@dataclass(frozen=True)
class TourResult:
    length: float
    unreachable: bool = False


def _category_regions(
    scene: SceneMap, categories: set[str], d_find: float
) -> dict[str, np.ndarray]:
    """Boolean masks of free cells whose center lies within d_find of an instance."""
    free = ~scene.occupancy
    h, w = free.shape
    cs = scene.cell_size
    cx = (np.arange(w) + 0.5) * cs
    cy = (np.arange(h) + 0.5) * cs
    gx, gy = np.meshgrid(cx, cy)
    regions: dict[str, np.ndarray] = {c: np.zeros((h, w), dtype=bool) for c in categories}
    for obj in scene.objects:
        if obj.category not in regions:
            continue
        close = (gx - obj.x) ** 2 + (gy - obj.y) ** 2 <= d_find**2 + 1e-9
        regions[obj.category] |= close & free
    return regions


def shortest_solution_tour(
    scene: SceneMap,
    task: Task,
    start: Pose,
    spec: EpisodeSpec,
    which: str = "basic",
) -> TourResult:
    """Minimum geodesic length to collect the best-achievable solution.

    Considers every solution attaining the maximum achievable success rate,
    optimizing visiting order by exhaustive permutation; instance choice is
    implicit because each category's goal region is the union of all its
    instances' discs. Geodesics are 4-connected BFS over free cells.
    """
    if which == "basic":
        family = task.basic_solutions
    elif which == "preferred":
        family = task.preferred_solutions
    else:
        raise ValueError(f"which must be 'basic' or 'preferred', got {which!r}")
    if not family:
        raise ValueError(f"task {task.id} has no {which} solutions")

    free = ~scene.occupancy
    sx, sy = scene.cell(start.x, start.y)
    start_field = bfs_distance_field(free, [(sx, sy)])
    all_cats = set().union(*family)
    regions = _category_regions(scene, all_cats, spec.d_find)
    reachable_cat = {
        c: bool((start_field[regions[c]] != UNREACHED).any()) for c in all_cats
    }

    best_frac = 0.0
    candidates: list[list[str]] = []
    for sol in family:
        cats = sorted(c for c in sol if reachable_cat[c])
        frac = len(cats) / len(sol)
        if frac > best_frac + 1e-12:
            best_frac = frac
            candidates = [cats]
        elif abs(frac - best_frac) <= 1e-12 and frac > 0:
            candidates.append(cats)
    if best_frac == 0.0:
        return TourResult(0.0, unreachable=True)

    best_steps = None
    seen: set[tuple[str, ...]] = set()
    for cats in candidates:
        key = tuple(cats)
        if key in seen:
            continue
        seen.add(key)
        for perm in itertools.permutations(cats):
            steps = _tour_steps(free, start_field, [regions[c] for c in perm])
            if steps is not None and (best_steps is None or steps < best_steps):
                best_steps = steps
    if best_steps is None:
        return TourResult(0.0, unreachable=True)
    return TourResult(best_steps * scene.cell_size, unreachable=False)


def _tour_steps(
    free: np.ndarray, start_field: np.ndarray, region_masks: list[np.ndarray]
) -> int | None:
    """Chained multi-source shortest path through the ordered goal regions."""
    field_now = start_field
    for mask in region_masks:
        inside = mask & (field_now != UNREACHED)
        if not inside.any():
            return None
        ys, xs = np.nonzero(inside)
        seeds = {(int(x), int(y)): int(field_now[y, x]) for x, y in zip(xs, ys)}
        field_now = dijkstra_offset_field(free, seeds)
    last = region_masks[-1]
    vals = field_now[last & (field_now != UNREACHED)]
    return int(vals.min()) if vals.size else None


# ---------------------------------------------------------------------------
# Episode results and aggregation


@dataclass
class EpisodeResult:
    task_id: str
    seed: int
    found: set[str]
    p: float
    l_basic: float
    l_pref: float
    sr_basic: float
    sr_pref: float
    spl_basic: float
    spl_pref: float
    steps: int = 0
    finds: int = 0

    def metrics(self) -> dict[str, float]:
        return {
            "sr_b": self.sr_basic,
            "sr_p": self.sr_pref,
            "spl_b": self.spl_basic,
            "spl_p": self.spl_pref,
        }


METRIC_KEYS = ("sr_b", "sr_p", "spl_b", "spl_p")


def episode_result(
    task: Task,
    seed: int,
    found: set[str],
    p: float,
    l_basic: float,
    l_pref: float,
    steps: int = 0,
    finds: int = 0,
) -> EpisodeResult:
    sr_b = success_rate(found, task.basic_solutions)
    sr_p = success_rate(found, task.preferred_solutions)
    return EpisodeResult(
        task_id=task.id,
        seed=seed,
        found=set(found),
        p=p,
        l_basic=l_basic,
        l_pref=l_pref,
        sr_basic=sr_b,
        sr_pref=sr_p,
        spl_basic=spl(sr_b, l_basic, p),
        spl_pref=spl(sr_p, l_pref, p),
        steps=steps,
        finds=finds,
    )


@dataclass
class BenchmarkReport:
    n_episodes: int
    per_seed: dict[int, dict[str, tuple[float, float]]]  # metric -> (mean, std)
    pooled: dict[str, tuple[float, float]]
    seed_means: dict[str, tuple[float, float]]  # mean/std across per-seed means
    results: list[EpisodeResult] = field(default_factory=list)


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def aggregate(results: list[EpisodeResult]) -> BenchmarkReport:
    """Per-seed and pooled means / population standard deviations."""
    if not results:
        raise ValueError("no episode results to aggregate")
    per_seed: dict[int, dict[str, tuple[float, float]]] = {}
    for seed in sorted({r.seed for r in results}):
        group = [r for r in results if r.seed == seed]
        per_seed[seed] = {
            k: _mean_std([r.metrics()[k] for r in group]) for k in METRIC_KEYS
        }
    pooled = {k: _mean_std([r.metrics()[k] for r in results]) for k in METRIC_KEYS}
    seed_means = {
        k: _mean_std([per_seed[s][k][0] for s in per_seed]) for k in METRIC_KEYS
    }
    return BenchmarkReport(
        n_episodes=len(results),
        per_seed=per_seed,
        pooled=pooled,
        seed_means=seed_means,
        results=list(results),
    )


def report_to_dict(report: BenchmarkReport) -> dict:
    """JSON-ready report; headline numbers as percentages to 2 decimals."""

    def pct_block(stats: dict[str, tuple[float, float]]) -> dict:
        out = {}
        for k in METRIC_KEYS:
            mean, std = stats[k]
            out[k] = round(100.0 * mean, 2)
            out[k + "_std"] = round(100.0 * std, 2)
        return out

    return {
        "n_episodes": report.n_episodes,
        "per_seed": {str(s): pct_block(stats) for s, stats in report.per_seed.items()},
        "pooled": pct_block(report.pooled),
        "across_seeds": pct_block(report.seed_means),
        "episodes": [
            {
                "task_id": r.task_id,
                "seed": r.seed,
                "found": sorted(r.found),
                "p": r.p,
                "l_basic": r.l_basic,
                "l_pref": r.l_pref,
                "sr_b": r.sr_basic,
                "sr_p": r.sr_pref,
                "spl_b": r.spl_basic,
                "spl_p": r.spl_pref,
                "steps": r.steps,
                "finds": r.finds,
            }
            for r in report.results
        ],
    }


def write_report(report: BenchmarkReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=1)
        fh.write("\n")

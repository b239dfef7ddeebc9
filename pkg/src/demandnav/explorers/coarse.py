"""Coarse exploration: similarity block scores and waypoint selection.

A block's score sums, over its observed objects, the best cosine match
between the object's attribute features and the basic / preferred
instruction attribute features, weighted by the adjustable r_b and r_p.
The waypoint is a random known-free cell of the best-scoring never-visited
block; with none left, the nearest frontier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..attributes.inference import max_pair_cosine
from ..geometry import UNREACHED
from ..mapping import BlockGrid, ExploredMap, ObservedObject, frontiers
from .planning import reachable_field

AttrSource = Callable[[str], "np.ndarray | None"]


class ExplorationExhausted(RuntimeError):
    """No unvisited scored block and no reachable frontier remain."""


@dataclass(frozen=True)
class CoarsePolicyConfig:
    r_b: float = 1.0
    r_p: float = 1.0
    branch: str = "llm"  # "mlp" | "llm" (precomputed attributes)
    fallback: str = "nearest-frontier"

    def validate(self) -> None:
        if self.r_b < 0 or self.r_p < 0 or self.r_b + self.r_p <= 0:
            raise ValueError("need r_b, r_p >= 0 with r_b + r_p > 0")


@dataclass(frozen=True)
class BlockScore:
    key: tuple[int, int]
    s: float
    basic_part: float
    pref_part: float


def block_score(
    members: list[ObservedObject],
    instr_attrs_basic: np.ndarray,
    instr_attrs_pref: np.ndarray,
    attr_source: AttrSource,
    r_b: float,
    r_p: float,
    key: tuple[int, int] = (0, 0),
) -> BlockScore:
    """Sum of per-object best-pair cosine similarities, weighted by r_b/r_p."""
    basic_part = 0.0
    pref_part = 0.0
    for member in members:
        attrs = attr_source(member.label)
        if attrs is None:
            continue  # unknown category: contributes nothing
        basic_part += max_pair_cosine(instr_attrs_basic, attrs)
        pref_part += max_pair_cosine(instr_attrs_pref, attrs)
    return BlockScore(
        key=key, s=r_b * basic_part + r_p * pref_part,
        basic_part=basic_part, pref_part=pref_part,
    )


def object_similarity(
    label: str,
    instr_attrs_basic: np.ndarray,
    instr_attrs_pref: np.ndarray,
    attr_source: AttrSource,
    r_b: float,
    r_p: float,
) -> float:
    attrs = attr_source(label)
    if attrs is None:
        return 0.0
    return r_b * max_pair_cosine(instr_attrs_basic, attrs) + r_p * max_pair_cosine(
        instr_attrs_pref, attrs
    )


def select_waypoint(
    scores: list[BlockScore],
    grid: BlockGrid,
    emap: ExploredMap,
    rng: np.random.Generator,
    agent_cell: tuple[int, int],
) -> tuple[tuple[int, int] | None, tuple[int, int]]:
    """(block key, target cell) for the next coarse waypoint.

    Picks the highest-scoring never-visited block that contains at least one
    known-free cell (ties toward the lowest key) and a uniformly random
    known-free cell inside it. Falls back to the geodesically nearest
    frontier (key None); raises ExplorationExhausted when neither exists.
    """
    candidates = []
    for bs in scores:
        if grid.block(bs.key).visited:
            continue
        cells = [
            c
            for c in grid.cells_in_block(bs.key, emap.cell_size, emap.width, emap.height)
            if emap.is_known_free(*c)
        ]
        if cells:
            candidates.append((bs, cells))
    if candidates:
        candidates.sort(key=lambda item: (-item[0].s, item[0].key))
        bs, cells = candidates[0]
        target = cells[int(rng.integers(len(cells)))]
        return bs.key, target
    field = reachable_field(emap, agent_cell)
    best = None
    for x, y in sorted(frontiers(emap), key=lambda c: (c[1], c[0])):
        d = field[y, x]
        if d != UNREACHED and (best is None or d < best[0]):
            best = (int(d), (x, y))
    if best is not None:
        return None, best[1]
    raise ExplorationExhausted("all scored blocks visited and no reachable frontier")

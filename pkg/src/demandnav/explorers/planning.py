"""A* path planning over the explored map, compiled to discrete actions.

Plans touch only cells already known to be free, so the agent never commits
to stepping through unexplored space.
"""

from __future__ import annotations

import heapq

import numpy as np

from ..geometry import UNREACHED, bfs_distance_field, rotation_steps
from ..mapping import ExploredMap


class NoPathError(RuntimeError):
    pass


_DIRS = ((1, 0, 0), (-1, 0, 180), (0, 1, 90), (0, -1, 270))  # dx, dy, heading


def plan_cells(
    emap: ExploredMap, start: tuple[int, int], goal: tuple[int, int]
) -> list[tuple[int, int]]:
    """Shortest 4-connected cell path over known-free cells (A*, unit cost).

    Raises NoPathError when the goal is not reachable; start == goal gives
    the single-cell path.
    """
    if not emap.is_known_free(*start):
        raise NoPathError(f"start cell {start} is not known free")
    if not emap.is_known_free(*goal):
        raise NoPathError(f"goal cell {goal} is not known free")
    if start == goal:
        return [start]

    def h(c):
        return abs(c[0] - goal[0]) + abs(c[1] - goal[1])

    g = {start: 0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    pq = [(h(start), 0, counter, start)]
    closed = set()
    while pq:
        f, gc, _, cur = heapq.heappop(pq)
        if cur == goal:
            path = [cur]
            while cur in came:
                cur = came[cur]
                path.append(cur)
            return path[::-1]
        if cur in closed:
            continue
        closed.add(cur)
        for dx, dy, _ in _DIRS:
            nxt = (cur[0] + dx, cur[1] + dy)
            if not emap.is_known_free(*nxt):
                continue
            ng = gc + 1
            if ng < g.get(nxt, 1 << 30):
                g[nxt] = ng
                came[nxt] = cur
                counter += 1
                heapq.heappush(pq, (ng + h(nxt), ng, counter, nxt))
    raise NoPathError(f"no known-free path from {start} to {goal}")


def compile_actions(path: list[tuple[int, int]], start_heading: int) -> list[str]:
    """Turn a cell path into RotateLeft/RotateRight/MoveAhead actions."""
    actions: list[str] = []
    heading = start_heading
    for (x0, y0), (x1, y1) in zip(path, path[1:]):
        dx, dy = x1 - x0, y1 - y0
        target = next(hd for ddx, ddy, hd in _DIRS if (ddx, ddy) == (dx, dy))
        turns = rotation_steps(heading, target)
        actions.extend(turns)
        heading = target
        actions.append("MoveAhead")
    return actions


def plan_path(
    emap: ExploredMap,
    start: tuple[int, int],
    goal: tuple[int, int],
    heading: int = 0,
) -> list[str]:
    """Action sequence from start cell to goal cell over known-free cells."""
    return compile_actions(plan_cells(emap, start, goal), heading)


def reachable_field(emap: ExploredMap, start: tuple[int, int]) -> np.ndarray:
    return bfs_distance_field(emap.known_free_mask(), [start])


def nearest_cell(
    emap: ExploredMap, start: tuple[int, int], candidates: list[tuple[int, int]]
) -> tuple[int, int] | None:
    """Geodesically nearest reachable candidate; ties break on (y, x)."""
    field = reachable_field(emap, start)
    best = None
    for x, y in sorted(candidates, key=lambda c: (c[1], c[0])):
        d = field[y, x]
        if d == UNREACHED:
            continue
        if best is None or d < best[0]:
            best = (int(d), (x, y))
    return best[1] if best else None

"""Grid and angle helpers shared by the simulator, mapping, metrics and planners.

All world coordinates are meters; grids are indexed ``[iy, ix]`` with cell
``(ix, iy)`` spanning ``[ix*cell, (ix+1)*cell) x [iy*cell, (iy+1)*cell)``.
Headings are degrees, 0 = +x, counter-clockwise positive.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def wrap_deg(angle: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def heading_vector(heading_deg: float) -> tuple[float, float]:
    r = math.radians(heading_deg)
    return math.cos(r), math.sin(r)


def bearing_deg(dx: float, dy: float) -> float:
    """Absolute bearing of the vector (dx, dy), in (-180, 180]."""
    return wrap_deg(math.degrees(math.atan2(dy, dx)))


def cell_of(x: float, cell_size: float) -> int:
    return int(math.floor(x / cell_size))


def cell_center(i: int, cell_size: float) -> float:
    return (i + 0.5) * cell_size


def supercover_cells(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """All grid cells the segment between two cell centers passes through.

    Amanatides-Woo traversal between the centers of (x0,y0) and (x1,y1),
    including both endpoints. Exact corner crossings include both side
    cells, so occlusion checks stay conservative.
    """
    cells = [(x0, y0)]
    if (x0, y0) == (x1, y1):
        return cells
    dx = float(x1 - x0)
    dy = float(y1 - y0)
    sx = 1 if dx > 0 else (-1 if dx < 0 else 0)
    sy = 1 if dy > 0 else (-1 if dy < 0 else 0)
    # Ray starts at the cell center, so the first boundary is half a cell away.
    t_max_x = 0.5 / abs(dx) if sx else math.inf
    t_max_y = 0.5 / abs(dy) if sy else math.inf
    t_dx = 1.0 / abs(dx) if sx else math.inf
    t_dy = 1.0 / abs(dy) if sy else math.inf
    cx, cy = x0, y0
    for _ in range(2 * (abs(x1 - x0) + abs(y1 - y0)) + 4):
        if sx and sy and abs(t_max_x - t_max_y) < 1e-12:
            cells.append((cx + sx, cy))
            cells.append((cx, cy + sy))
            cx += sx
            cy += sy
            t_max_x += t_dx
            t_max_y += t_dy
        elif t_max_x < t_max_y:
            cx += sx
            t_max_x += t_dx
        else:
            cy += sy
            t_max_y += t_dy
        cells.append((cx, cy))
        if (cx, cy) == (x1, y1):
            break
    return cells


def line_of_sight(occupied: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> bool:
    """True when no occupied cell lies on the discrete ray between the two cells.

    The start cell is ignored (the viewer stands there); the end cell counts.
    """
    for cx, cy in supercover_cells(x0, y0, x1, y1)[1:]:
        if cy < 0 or cx < 0 or cy >= occupied.shape[0] or cx >= occupied.shape[1]:
            return False
        if occupied[cy, cx]:
            return False
    return True


UNREACHED = np.iinfo(np.int32).max


def bfs_distance_field(passable: np.ndarray, sources: list[tuple[int, int]]) -> np.ndarray:
    """4-connected BFS hop counts from the source cells over passable cells.

    Returns an int32 array shaped like ``passable`` with UNREACHED where no
    path exists. Sources that are not passable are skipped.
    """
    h, w = passable.shape
    dist = np.full((h, w), UNREACHED, dtype=np.int32)
    q: deque[tuple[int, int]] = deque()
    for x, y in sources:
        if 0 <= x < w and 0 <= y < h and passable[y, x] and dist[y, x] != 0:
            dist[y, x] = 0
            q.append((x, y))
    while q:
        x, y = q.popleft()
        d = dist[y, x] + 1
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < w and 0 <= ny < h and passable[ny, nx] and dist[ny, nx] == UNREACHED:
                dist[ny, nx] = d
                q.append((nx, ny))
    return dist


def dijkstra_offset_field(
    passable: np.ndarray, seeds: dict[tuple[int, int], int]
) -> np.ndarray:
    """Multi-source shortest hop field where each seed starts at its own offset.

    Unit edge costs; implemented as a dial-style BFS over integer distances.
    Used to chain tour legs whose entry costs differ per cell.
    """
    h, w = passable.shape
    dist = np.full((h, w), UNREACHED, dtype=np.int64)
    if not seeds:
        return dist
    buckets: dict[int, list[tuple[int, int]]] = {}
    for (x, y), d0 in seeds.items():
        if 0 <= x < w and 0 <= y < h and passable[y, x] and d0 < dist[y, x]:
            dist[y, x] = d0
            buckets.setdefault(d0, []).append((x, y))
    if not buckets:
        return dist
    d = min(buckets)
    d_max = max(buckets)
    while d <= d_max or d in buckets:
        for x, y in buckets.pop(d, ()):
            if dist[y, x] != d:
                continue
            for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                if 0 <= nx < w and 0 <= ny < h and passable[ny, nx] and d + 1 < dist[ny, nx]:
                    dist[ny, nx] = d + 1
                    buckets.setdefault(d + 1, []).append((nx, ny))
                    d_max = max(d_max, d + 1)
        d += 1
        if d > d_max and not buckets:
            break
    return dist


def rotation_steps(from_heading: float, to_heading: float) -> list[str]:
    """Minimal sequence of RotateLeft / RotateRight (30 degree steps).

    Ties (180 degrees) turn left.
    """
    delta = int(round(wrap_deg(to_heading - from_heading)))
    if delta % 30 != 0:
        raise ValueError(f"headings must differ by a multiple of 30, got {delta}")
    if delta >= 0:
        return ["RotateLeft"] * (delta // 30)
    return ["RotateRight"] * (-delta // 30)

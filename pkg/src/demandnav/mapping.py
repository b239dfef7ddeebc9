"""Incremental explored map, observed-object registry and block segmentation.

The explored map is built from the simulator's depth profile: cells along
each ray become Free, the hit cell becomes Occupied, everything else stays
Unknown. Detected objects land in a registry keyed by object id, keeping
the label the detector reported (which may be wrong under noise). Objects
are grouped into b x b meter blocks by centroid for coarse exploration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .scene import Pose
from .simulator import Observation

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

DEFAULT_BLOCK_SIZE = 2.0


@dataclass
class ObservedObject:
    id: str
    label: str
    x: float
    y: float
    first_seen_step: int


@dataclass
class ExploredMap:
    width: int
    height: int
    cell_size: float
    cells: np.ndarray = field(default=None)  # uint8 [height, width]
    registry: dict[str, ObservedObject] = field(default_factory=dict)

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.full((self.height, self.width), UNKNOWN, dtype=np.uint8)

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_known_free(self, ix: int, iy: int) -> bool:
        return self.in_bounds(ix, iy) and self.cells[iy, ix] == FREE

    def known_free_mask(self) -> np.ndarray:
        return self.cells == FREE

    def known_count(self) -> int:
        return int((self.cells != UNKNOWN).sum())

    def cell(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.cell_size)), int(math.floor(y / self.cell_size))


def integrate(emap: ExploredMap, obs: Observation, pose: Pose, step_index: int = 0) -> ExploredMap:
    """Fold one observation into the map; idempotent for a repeated observation.

    Occupied wins over Free when rays disagree at a boundary cell, and known
    cells never revert to Unknown.
    """
    cs = emap.cell_size
    mark_step = cs / 3.0
    ax, ay = emap.cell(pose.x, pose.y)
    if emap.in_bounds(ax, ay) and emap.cells[ay, ax] == UNKNOWN:
        emap.cells[ay, ax] = FREE
    if obs.depth_profile:
        bearings = np.array([r.bearing_deg for r in obs.depth_profile])
        ranges = np.array([r.range_m for r in obs.depth_profile])
        hits = np.array([r.hit for r in obs.depth_profile])
        angles = np.radians(bearings)
        cos_a, sin_a = np.cos(angles), np.sin(angles)
        n_marks = np.floor(ranges / mark_step).astype(int)
        max_n = int(n_marks.max()) if len(n_marks) else 0
        if max_n > 0:
            ts = (np.arange(max_n) + 1.0) * mark_step  # (max_n,)
            px = pose.x + cos_a[:, None] * ts[None, :]
            py = pose.y + sin_a[:, None] * ts[None, :]
            valid = ts[None, :] <= ranges[:, None] + 1e-12
            ix = np.floor(px / cs).astype(np.intp)
            iy = np.floor(py / cs).astype(np.intp)
            valid &= (ix >= 0) & (ix < emap.width) & (iy >= 0) & (iy < emap.height)
            fx, fy = ix[valid], iy[valid]
            unknown = emap.cells[fy, fx] == UNKNOWN
            emap.cells[fy[unknown], fx[unknown]] = FREE
        hx = np.floor((pose.x + cos_a[hits] * ranges[hits]) / cs).astype(np.intp)
        hy = np.floor((pose.y + sin_a[hits] * ranges[hits]) / cs).astype(np.intp)
        ok = (hx >= 0) & (hx < emap.width) & (hy >= 0) & (hy < emap.height)
        emap.cells[hy[ok], hx[ok]] = OCCUPIED
    for det in obs.detections:
        ang = math.radians(det.bearing_deg)
        ox = pose.x + det.range_m * math.cos(ang)
        oy = pose.y + det.range_m * math.sin(ang)
        prev = emap.registry.get(det.object_id)
        emap.registry[det.object_id] = ObservedObject(
            id=det.object_id,
            label=det.label,
            x=ox,
            y=oy,
            first_seen_step=prev.first_seen_step if prev else step_index,
        )
    return emap


def frontiers(emap: ExploredMap) -> list[tuple[int, int]]:
    """Known-free cells 4-adjacent to at least one unknown cell."""
    free = emap.cells == FREE
    unknown = emap.cells == UNKNOWN
    near_unknown = np.zeros_like(unknown)
    near_unknown[:, :-1] |= unknown[:, 1:]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[1:, :] |= unknown[:-1, :]
    ys, xs = np.nonzero(free & near_unknown)
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


@dataclass
class Block:
    key: tuple[int, int]
    member_ids: list[str] = field(default_factory=list)
    visited: bool = False
    last_score: float = 0.0


@dataclass
class BlockGrid:
    b: float = DEFAULT_BLOCK_SIZE
    blocks: dict[tuple[int, int], Block] = field(default_factory=dict)

    def key_of(self, x: float, y: float) -> tuple[int, int]:
        # Half-open blocks [k*b, (k+1)*b) per axis.
        return int(math.floor(x / self.b)), int(math.floor(y / self.b))

    def block(self, key: tuple[int, int]) -> Block:
        if key not in self.blocks:
            self.blocks[key] = Block(key=key)
        return self.blocks[key]

    def mark_visited(self, key: tuple[int, int]) -> None:
        self.block(key).visited = True

    def cells_in_block(self, key: tuple[int, int], cell_size: float, width: int, height: int):
        """Grid cells whose center falls inside the block."""
        kx, ky = key
        x0, x1 = kx * self.b, (kx + 1) * self.b
        y0, y1 = ky * self.b, (ky + 1) * self.b
        ix0 = max(0, int(math.floor(x0 / cell_size)))
        ix1 = min(width, int(math.ceil(x1 / cell_size)))
        iy0 = max(0, int(math.floor(y0 / cell_size)))
        iy1 = min(height, int(math.ceil(y1 / cell_size)))
        out = []
        for iy in range(iy0, iy1):
            for ix in range(ix0, ix1):
                cx = (ix + 0.5) * cell_size
                cy = (iy + 0.5) * cell_size
                if x0 <= cx < x1 and y0 <= cy < y1:
                    out.append((ix, iy))
        return out


def blocks_with_objects(
    emap: ExploredMap, grid: BlockGrid
) -> list[tuple[tuple[int, int], list[ObservedObject]]]:
    """Partition the registry into blocks by object centroid, sorted by key."""
    part: dict[tuple[int, int], list[ObservedObject]] = {}
    for obj in emap.registry.values():
        part.setdefault(grid.key_of(obj.x, obj.y), []).append(obj)
    out = []
    for key in sorted(part):
        members = sorted(part[key], key=lambda o: o.id)
        blk = grid.block(key)
        blk.member_ids = [o.id for o in members]
        out.append((key, members))
    return out


def export_pgm(emap: ExploredMap, path: str) -> None:
    """Write the map as binary PGM: Unknown=128, Free=255, Occupied=0."""
    values = np.full((emap.height, emap.width), 128, dtype=np.uint8)
    values[emap.cells == FREE] = 255
    values[emap.cells == OCCUPIED] = 0
    with open(path, "wb") as fh:
        fh.write(f"P5\n{emap.width} {emap.height}\n255\n".encode("ascii"))
        fh.write(values.tobytes())


def load_pgm(path: str) -> np.ndarray:
    """Read back a binary PGM written by export_pgm (debug round-trips)."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError("not a binary PGM file")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        fh.readline()  # maxval
        data = np.frombuffer(fh.read(width * height), dtype=np.uint8)
    return data.reshape(height, width)


def new_explored_map(width: int, height: int, cell_size: float) -> ExploredMap:
    return ExploredMap(width=width, height=height, cell_size=cell_size)

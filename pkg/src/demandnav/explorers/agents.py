"""Episode orchestration: the coarse-to-fine agent and the baselines.

All agents run on the same simulator contract and the same explored map;
they differ only in how they pick where to go and when to Find. Baselines
replace language-model judgment with a ground-truth oracle: Find exactly
when a recordable object still fills an open slot of some solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..attributes.embeddings import EmbeddingTable
from ..attributes.inference import instruction_attributes, object_attributes
from ..attributes.model import AttributeModel
from ..geometry import UNREACHED, bearing_deg, wrap_deg
from ..mapping import BlockGrid, ExploredMap, frontiers, integrate, new_explored_map
from ..metrics import EpisodeResult, episode_result, shortest_solution_tour
from ..scene import EpisodeSpec, SceneMap, Task
from ..simulator import CAMERA_HEIGHT, Detection, DetectorNoise, Episode, find_candidates
from .coarse import (
    BlockScore,
    CoarsePolicyConfig,
    ExplorationExhausted,
    block_score,
    object_similarity,
    select_waypoint,
)
from .fine import (
    FineFeatureExtractor,
    FinePolicyConfig,
    FineStepContext,
    BCPolicy,
    estimated_height,
)
from .planning import NoPathError, compile_actions, plan_cells, reachable_field

AGENT_KINDS = ("c2f", "random", "fbe", "mopa")


class EpisodeContext:
    """Mutable episode state shared by the agent loops: sim, map, log."""

    def __init__(
        self,
        scene: SceneMap,
        task: Task,
        spec: EpisodeSpec,
        seed: int,
        noise: DetectorNoise | None = None,
    ):
        self.scene = scene
        self.task = task
        self.spec = spec
        self.seed = seed
        self.episode = Episode(scene, task, spec, seed=seed, noise=noise)
        self.emap = new_explored_map(scene.width, scene.height, scene.cell_size)
        self.grid = BlockGrid()
        self.log: list[dict] = []
        self.coarse_events: list[dict] = []
        self.agent_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA6]))
        state, obs = self.episode.reset()
        self.obs = obs
        integrate(self.emap, obs, state.pose, step_index=0)

    @property
    def done(self) -> bool:
        return self.episode.terminated

    @property
    def pose(self):
        return self.episode.state.pose

    @property
    def agent_cell(self) -> tuple[int, int]:
        return self.emap.cell(self.pose.x, self.pose.y)

    def do(self, action: str):
        """Step, integrate, log. Returns the observation, or None if done."""
        if self.done:
            return None
        state, obs, _ = self.episode.step(action)
        integrate(self.emap, obs, state.pose, step_index=state.steps_taken)
        self.obs = obs
        record = {
            "t": state.steps_taken,
            "action": action,
            "pose": {
                "x": state.pose.x,
                "y": state.pose.y,
                "heading": state.pose.heading,
                "pitch": state.pose.pitch,
            },
            "collided": state.collided_last,
            "detections": [
                [d.object_id, d.label, d.range_m, d.bearing_deg, d.v_angle_deg]
                for d in obs.detections
            ],
        }
        if action == "Find":
            step_idx, ids = self.episode.found.events[-1]
            record["find_event"] = {
                "object_ids": list(ids),
                "found_list": sorted(self.episode.found.categories),
            }
        self.log.append(record)
        return obs

    def scan(self, max_actions: int = 12) -> int:
        """Full turn in place, integrating as it goes. Returns actions used."""
        used = 0
        for _ in range(max_actions):
            if self.done:
                break
            self.do("RotateLeft")
            used += 1
        return used

    def walk_to(self, goal: tuple[int, int], budget: int | None = None) -> bool:
        """Follow an A* route over known-free cells; re-plan on collisions.

        Returns True when the goal cell is reached. Consumes at most
        ``budget`` actions when given.
        """
        used = 0
        replans = 0
        while not self.done and self.agent_cell != goal:
            try:
                cells = plan_cells(self.emap, self.agent_cell, goal)
            except NoPathError:
                return False
            actions = compile_actions(cells, self.pose.heading)
            progressed = False
            for action in actions:
                if self.done or (budget is not None and used >= budget):
                    return self.agent_cell == goal
                self.do(action)
                used += 1
                if action == "MoveAhead" and self.episode.state.collided_last:
                    replans += 1
                    if replans > 8:
                        return False
                    break  # plan against the updated map
                progressed = True
            if not progressed and replans > 8:
                return False
        return self.agent_cell == goal


def uncovered_categories(task: Task, found: set[str]) -> set[str]:
    """Categories that still fill an open slot of any solution."""
    open_cats: set[str] = set()
    for sol in task.basic_solutions + task.preferred_solutions:
        open_cats |= sol - found
    return open_cats


def oracle_wants_find(ctx: EpisodeContext) -> bool:
    """Ground-truth reasoner: Find iff it would record a still-needed category."""
    open_cats = uncovered_categories(ctx.task, ctx.episode.found.categories)
    if not open_cats:
        return False
    for det in find_candidates(ctx.scene, ctx.pose, ctx.spec):
        if det.label in open_cats:
            return True
    return False


# ---------------------------------------------------------------------------
# Agents


def run_random(ctx: EpisodeContext) -> None:
    """Uniform over the six non-Done actions until a limit trips."""
    from ..simulator import NON_DONE_ACTIONS

    while not ctx.done:
        ctx.do(NON_DONE_ACTIONS[int(ctx.agent_rng.integers(len(NON_DONE_ACTIONS)))])


def run_fbe(ctx: EpisodeContext) -> None:
    """Frontier walking with oracle Find decisions."""
    ctx.scan()
    while not ctx.done:
        if oracle_wants_find(ctx):
            ctx.do("Find")
            continue
        field = reachable_field(ctx.emap, ctx.agent_cell)
        target = None
        best = None
        for x, y in sorted(frontiers(ctx.emap), key=lambda c: (c[1], c[0])):
            d = field[y, x]
            if d != UNREACHED and d > 0 and (best is None or d < best):
                best, target = int(d), (x, y)
        if target is None:
            free_cells = np.argwhere((field != UNREACHED) & (field > 0))
            if len(free_cells) == 0:
                ctx.do("RotateLeft")
                continue
            iy, ix = free_cells[int(ctx.agent_rng.integers(len(free_cells)))]
            target = (int(ix), int(iy))
        moved = _walk_with_find_checks(ctx, target)
        if not moved:
            ctx.do("RotateLeft")  # stuck: at least keep the episode moving


def _walk_with_find_checks(ctx: EpisodeContext, goal: tuple[int, int]) -> bool:
    """Walk toward goal, pausing to Find whenever the oracle fires."""
    progressed = False
    while not ctx.done and ctx.agent_cell != goal:
        if oracle_wants_find(ctx):
            ctx.do("Find")
            progressed = True
            continue
        try:
            cells = plan_cells(ctx.emap, ctx.agent_cell, goal)
        except NoPathError:
            return progressed
        actions = compile_actions(cells, ctx.pose.heading)
        if not actions:
            return True
        for action in actions[: max(1, len(actions) // 2)]:
            if ctx.done:
                return progressed
            ctx.do(action)
            progressed = True
            if oracle_wants_find(ctx):
                break
            if action == "MoveAhead" and ctx.episode.state.collided_last:
                break
    return progressed


def run_mopa(ctx: EpisodeContext) -> None:
    """Registry-targeting baseline: walk near known useful objects, else roam."""
    ctx.scan()
    tried: set[str] = set()
    while not ctx.done:
        if oracle_wants_find(ctx):
            ctx.do("Find")
            continue
        open_cats = uncovered_categories(ctx.task, ctx.episode.found.categories)
        target_obj = None
        candidates = [
            o for o in ctx.emap.registry.values()
            if o.label in open_cats and o.id not in tried
        ]
        if candidates:
            pose = ctx.pose
            candidates.sort(key=lambda o: (math.hypot(o.x - pose.x, o.y - pose.y), o.id))
            target_obj = candidates[0]
        if target_obj is not None:
            goal = _cell_near_position(ctx, target_obj.x, target_obj.y)
            tried.add(target_obj.id)
            if goal is None:
                continue
            _walk_with_find_checks(ctx, goal)
            _orient_and_maybe_find(ctx, target_obj.x, target_obj.y, None)
        else:
            field = reachable_field(ctx.emap, ctx.agent_cell)
            free_cells = np.argwhere((field != UNREACHED) & (field > 0))
            if len(free_cells) == 0:
                ctx.do("RotateLeft")
                continue
            iy, ix = free_cells[int(ctx.agent_rng.integers(len(free_cells)))]
            _walk_with_find_checks(ctx, (int(ix), int(iy)))


def _cell_near_position(ctx: EpisodeContext, x: float, y: float) -> tuple[int, int] | None:
    """Nearest reachable known-free cell within d_find of a world position."""
    cs = ctx.emap.cell_size
    radius = int(math.ceil(ctx.spec.d_find / cs))
    cx, cy = ctx.emap.cell(x, y)
    field = reachable_field(ctx.emap, ctx.agent_cell)
    best = None
    for iy in range(max(0, cy - radius), min(ctx.emap.height, cy + radius + 1)):
        for ix in range(max(0, cx - radius), min(ctx.emap.width, cx + radius + 1)):
            if math.hypot((ix + 0.5) * cs - x, (iy + 0.5) * cs - y) > ctx.spec.d_find:
                continue
            d = field[iy, ix]
            if d == UNREACHED:
                continue
            if best is None or d < best[0]:
                best = (int(d), (ix, iy))
    return best[1] if best else None


def _orient_and_maybe_find(
    ctx: EpisodeContext, x: float, y: float, height: float | None, budget: int = 6
) -> None:
    """Turn toward a position (and its height when known), then oracle-Find."""
    for _ in range(budget):
        if ctx.done:
            return
        pose = ctx.pose
        dbrg = wrap_deg(bearing_deg(x - pose.x, y - pose.y) - pose.heading)
        if abs(dbrg) > ctx.spec.fov_h / 2:
            ctx.do("RotateLeft" if dbrg > 0 else "RotateRight")
            continue
        if height is not None:
            r = math.hypot(x - pose.x, y - pose.y)
            v = math.degrees(math.atan2(height - CAMERA_HEIGHT, max(r, 1e-6)))
            dv = v - pose.pitch
            if abs(dv) > ctx.spec.fov_v / 2:
                ctx.do("LookUp" if dv > 0 else "LookDown")
                continue
        break
    if not ctx.done and oracle_wants_find(ctx):
        ctx.do("Find")


@dataclass
class C2FRuntime:
    """Per-episode state of the coarse-to-fine agent."""

    table: EmbeddingTable
    model: AttributeModel | None
    coarse: CoarsePolicyConfig
    fine: FinePolicyConfig
    bc_policy: BCPolicy | None = None
    ia_basic: np.ndarray | None = None
    ia_pref: np.ndarray | None = None
    attr_cache: dict[str, np.ndarray | None] = field(default_factory=dict)

    def attr_source(self, label: str):
        if label not in self.attr_cache:
            self.attr_cache[label] = object_attributes(
                label, self.coarse.branch, self.table, self.model
            )
        return self.attr_cache[label]


def run_c2f(ctx: EpisodeContext, rt: C2FRuntime) -> None:
    """Coarse waypoint selection and fine local search, one Find per cycle."""
    rt.coarse.validate()
    rt.fine.validate()
    rt.ia_basic, rt.ia_pref = instruction_attributes(
        ctx.task.id, rt.coarse.branch, rt.table, rt.model
    )
    ctx.scan()
    walk_failures = 0
    while not ctx.done:
        scores = []
        for key, members in _blocks(ctx):
            bs = block_score(
                members, rt.ia_basic, rt.ia_pref, rt.attr_source,
                rt.coarse.r_b, rt.coarse.r_p, key=key,
            )
            ctx.grid.block(key).last_score = bs.s
            scores.append(bs)
        try:
            key, target = select_waypoint(
                scores, ctx.grid, ctx.emap, ctx.agent_rng, ctx.agent_cell
            )
        except ExplorationExhausted:
            key, target = None, None
        ctx.coarse_events.append(
            {
                "t": ctx.episode.state.steps_taken,
                "scores": {
                    f"{bs.key[0]},{bs.key[1]}": {
                        "s": bs.s, "basic": bs.basic_part, "pref": bs.pref_part,
                        "visited": ctx.grid.block(bs.key).visited,
                    }
                    for bs in scores
                },
                "chosen": None if key is None else [key[0], key[1]],
                "target": None if target is None else [target[0], target[1]],
            }
        )
        if key is not None:
            ctx.grid.mark_visited(key)
        arrived = False
        if target is not None:
            arrived = ctx.walk_to(target)
        if ctx.done:
            break
        if not arrived and target is not None:
            walk_failures += 1
            if walk_failures < 3:
                continue  # try the next waypoint before searching in place
        walk_failures = 0
        _fine_phase(ctx, rt)


def _blocks(ctx: EpisodeContext):
    from ..mapping import blocks_with_objects

    return blocks_with_objects(ctx.emap, ctx.grid)


def _fine_phase(ctx: EpisodeContext, rt: C2FRuntime) -> None:
    """Local search ending in exactly one Find (unless the episode ends)."""
    budget = rt.fine.step_budget
    used = 0
    if rt.fine.mode == "bc" and rt.bc_policy is not None:
        used = _fine_bc(ctx, rt, budget)
        if ctx.done:
            return
        if not ctx.log or ctx.log[-1]["action"] != "Find":
            ctx.do("Find")
        return

    # Scripted mode: scan, rank detections, approach the best, orient, Find.
    seen: dict[str, Detection] = {}
    for _ in range(12):
        if ctx.done or used >= budget:
            break
        obs = ctx.do("RotateLeft")
        used += 1
        for det in obs.detections:
            prev = seen.get(det.object_id)
            if prev is None or det.range_m < prev.range_m:
                seen[det.object_id] = det
    if ctx.done:
        return
    ranked = sorted(
        seen.values(),
        key=lambda d: (
            -object_similarity(
                d.label, rt.ia_basic, rt.ia_pref, rt.attr_source,
                rt.coarse.r_b, rt.coarse.r_p,
            ),
            d.object_id,
        ),
    )
    target = None
    if ranked:
        best = ranked[0]
        sim = object_similarity(
            best.label, rt.ia_basic, rt.ia_pref, rt.attr_source,
            rt.coarse.r_b, rt.coarse.r_p,
        )
        if rt.fine.approach_threshold <= 0 or sim >= rt.fine.approach_threshold:
            target = best
    if target is not None and not ctx.done:
        pose = ctx.pose
        ang = math.radians(target.bearing_deg)
        tx = pose.x + target.range_m * math.cos(ang)
        ty = pose.y + target.range_m * math.sin(ang)
        theight = estimated_height(target)
        goal = _cell_near_position(ctx, tx, ty)
        if goal is not None:
            ctx.walk_to(goal, budget=budget - used)
        if not ctx.done:
            for _ in range(6):
                pose = ctx.pose
                act = _next_orient_action(ctx, pose, tx, ty, theight)
                if act is None or ctx.done:
                    break
                ctx.do(act)
    if not ctx.done:
        ctx.do("Find")


def _next_orient_action(ctx, pose, tx, ty, theight):
    dbrg = wrap_deg(bearing_deg(tx - pose.x, ty - pose.y) - pose.heading)
    if abs(dbrg) > ctx.spec.fov_h / 2:
        return "RotateLeft" if dbrg > 0 else "RotateRight"
    r = math.hypot(tx - pose.x, ty - pose.y)
    v = math.degrees(math.atan2(theight - CAMERA_HEIGHT, max(r, 1e-6)))
    dv = v - pose.pitch
    if abs(dv) > ctx.spec.fov_v / 2 and -60 <= pose.pitch <= 60:
        return "LookUp" if dv > 0 else "LookDown"
    return None


def _fine_bc(ctx: EpisodeContext, rt: C2FRuntime, budget: int) -> int:
    """Greedy rollout of the behavior-cloned policy; stops at its first Find."""
    prev = "none"
    # Target for the offset feature: best-similarity registry object, else here.
    target = (ctx.pose.x, ctx.pose.y)
    best_sim = -math.inf
    for obj in ctx.emap.registry.values():
        sim = object_similarity(
            obj.label, rt.ia_basic, rt.ia_pref, rt.attr_source, rt.coarse.r_b, rt.coarse.r_p
        )
        if sim > best_sim:
            best_sim, target = sim, (obj.x, obj.y)
    used = 0
    while used < budget and not ctx.done:
        step = FineStepContext(ctx.obs.detections, ctx.pose, prev, target)
        action = rt.bc_policy.act(step, ctx.task.id)
        ctx.do(action)
        used += 1
        prev = action
        if action == "Find":
            break
    return used


# ---------------------------------------------------------------------------
# Entry point


def run_episode(
    agent: str,
    scene: SceneMap,
    task: Task,
    spec: EpisodeSpec,
    seed: int,
    table: EmbeddingTable | None = None,
    model: AttributeModel | None = None,
    coarse: CoarsePolicyConfig | None = None,
    fine: FinePolicyConfig | None = None,
    bc_policy: BCPolicy | None = None,
    noise: DetectorNoise | None = None,
    tour_cache: dict | None = None,
) -> tuple[EpisodeResult, list[dict], list[dict]]:
    """Run one episode; returns (result, step log, coarse events)."""
    if agent not in AGENT_KINDS:
        raise ValueError(f"agent must be one of {AGENT_KINDS}, got {agent!r}")
    ctx = EpisodeContext(scene, task, spec, seed, noise=noise)
    start = ctx.pose
    if agent == "c2f":
        if table is None:
            raise ValueError("c2f agent needs an embedding table")
        rt = C2FRuntime(
            table=table, model=model,
            coarse=coarse or CoarsePolicyConfig(),
            fine=fine or FinePolicyConfig(),
            bc_policy=bc_policy,
        )
        run_c2f(ctx, rt)
    elif agent == "random":
        run_random(ctx)
    elif agent == "fbe":
        run_fbe(ctx)
    elif agent == "mopa":
        run_mopa(ctx)

    l_b = _cached_tour(scene, task, start, spec, "basic", tour_cache)
    l_p = _cached_tour(scene, task, start, spec, "preferred", tour_cache)
    result = episode_result(
        task,
        seed,
        set(ctx.episode.found.categories),
        p=ctx.episode.state.path_length,
        l_basic=l_b,
        l_pref=l_p,
        steps=ctx.episode.state.steps_taken,
        finds=ctx.episode.state.finds_used,
    )
    return result, ctx.log, ctx.coarse_events


def _cached_tour(scene, task, start, spec, which, cache):
    key = (task.id, round(start.x, 6), round(start.y, 6), which)
    if cache is not None and key in cache:
        return cache[key]
    value = shortest_solution_tour(scene, task, start, spec, which).length
    if cache is not None:
        cache[key] = value
    return value

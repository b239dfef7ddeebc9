from __future__ import annotations

import numpy as np
import pytest

from demandnav.attributes.embeddings import EmbeddingTable, instruction_attr_key, object_attr_key
from demandnav.mapping import FREE, BlockGrid, ObservedObject, new_explored_map
from demandnav.explorers.coarse import (
    BlockScore,
    CoarsePolicyConfig,
    ExplorationExhausted,
    block_score,
    select_waypoint,
)


def unit(d, axis):
    v = np.zeros(d)
    v[axis] = 1.0
    return v


def make_attr_source(mapping):
    return lambda label: mapping.get(label)


def obj(i, label, x=0.0, y=0.0):
    return ObservedObject(f"o{i}", label, x, y, 0)


def test_empty_block_scores_zero():
    bs = block_score([], unit(4, 0)[None], unit(4, 1)[None], make_attr_source({}), 1.0, 1.0)
    assert bs.s == 0.0 and bs.basic_part == 0.0 and bs.pref_part == 0.0


def test_perfect_match_scores_rb_plus_rp():
    e = unit(4, 0)
    src = make_attr_source({"alpha": e[None, :]})
    bs = block_score([obj(0, "alpha")], e[None], e[None], src, r_b=0.7, r_p=0.4)
    assert bs.s == pytest.approx(0.7 + 0.4)
    assert bs.basic_part == pytest.approx(1.0)


def test_block_score_matches_pair_oracle():
    rng = np.random.default_rng(3)
    d, k1, k2 = 6, 2, 2
    ia_b = rng.normal(size=(k1, d))
    ia_p = rng.normal(size=(k1, d))
    attrs = {f"c{i}": rng.normal(size=(k2, d)) for i in range(3)}
    members = [obj(i, f"c{i}") for i in range(3)]
    r_b, r_p = 1.3, 0.6
    bs = block_score(members, ia_b, ia_p, make_attr_source(attrs), r_b, r_p)

    def cos(a, b):
        return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

    expect = 0.0
    for i in range(3):
        best_b = max(cos(ia_b[x], attrs[f"c{i}"][y]) for x in range(k1) for y in range(k2))
        best_p = max(cos(ia_p[x], attrs[f"c{i}"][y]) for x in range(k1) for y in range(k2))
        expect += r_b * best_b + r_p * best_p
    assert bs.s == pytest.approx(expect)
    assert bs.s == pytest.approx(r_b * bs.basic_part + r_p * bs.pref_part)


def test_score_linearity_and_invariances():
    rng = np.random.default_rng(9)
    d, k1, k2 = 5, 2, 3
    ia_b = rng.normal(size=(k1, d))
    ia_p = rng.normal(size=(k1, d))
    attrs = {f"c{i}": rng.normal(size=(k2, d)) for i in range(4)}
    members = [obj(i, f"c{i}") for i in range(4)]
    src = make_attr_source(attrs)
    a = block_score(members, ia_b, ia_p, src, 1.0, 0.5)
    doubled = block_score(members, ia_b, ia_p, src, 2.0, 1.0)
    assert doubled.s == pytest.approx(2 * a.s)

    # r_p = 0: arbitrary changes to preferred attrs leave the score alone.
    b1 = block_score(members, ia_b, rng.normal(size=(k1, d)), src, 1.0, 0.0)
    b2 = block_score(members, ia_b, rng.normal(size=(k1, d)), src, 1.0, 0.0)
    assert b1.s == pytest.approx(b2.s)

    # Cosine scores are invariant to positive per-vector scaling.
    scaled = {k: v * rng.uniform(0.5, 4.0) for k, v in attrs.items()}
    c1 = block_score(members, ia_b, ia_p, make_attr_source(scaled), 1.0, 0.5)
    assert c1.s == pytest.approx(a.s)


def test_zero_vector_contributes_zero():
    d = 4
    src = make_attr_source({"z": np.zeros((2, d))})
    bs = block_score([obj(0, "z")], unit(d, 0)[None], unit(d, 1)[None], src, 1.0, 1.0)
    assert bs.s == 0.0


# ---------------------------------------------------------------------------
# select_waypoint


def setup_map(n=24):
    emap = new_explored_map(n, n, 0.25)
    emap.cells[...] = FREE
    return emap, BlockGrid(b=2.0), np.random.default_rng(0)


def test_single_unvisited_block_selected():
    emap, grid, rng = setup_map()
    scores = [BlockScore((0, 0), -5.0, -5.0, 0.0)]
    key, cell = select_waypoint(scores, grid, emap, rng, (12, 12))
    assert key == (0, 0)
    assert grid.key_of((cell[0] + 0.5) * 0.25, (cell[1] + 0.5) * 0.25) == (0, 0)


def test_argmax_block_wins():
    emap, grid, rng = setup_map()
    scores = [BlockScore((0, 0), 0.9, 0.9, 0), BlockScore((1, 1), 1.4, 1.4, 0)]
    key, _ = select_waypoint(scores, grid, emap, rng, (0, 0))
    assert key == (1, 1)


def test_tie_breaks_lowest_key():
    emap, grid, rng = setup_map()
    scores = [BlockScore((2, 0), 1.0, 1, 0), BlockScore((0, 1), 1.0, 1, 0)]
    key, _ = select_waypoint(scores, grid, emap, rng, (0, 0))
    assert key == (0, 1)


def test_visited_blocks_skipped_then_frontier_fallback():
    from demandnav.mapping import UNKNOWN

    emap, grid, rng = setup_map()
    emap.cells[20:, :] = UNKNOWN  # a frontier along y=19
    scores = [BlockScore((0, 0), 2.0, 2, 0)]
    grid.mark_visited((0, 0))
    key, cell = select_waypoint(scores, grid, emap, rng, (2, 2))
    assert key is None
    x, y = cell
    assert y == 19  # frontier row


def test_exploration_exhausted():
    emap, grid, rng = setup_map()
    grid.mark_visited((0, 0))
    with pytest.raises(ExplorationExhausted):
        select_waypoint([BlockScore((0, 0), 1.0, 1, 0)], grid, emap, rng, (2, 2))


def test_waypoint_cell_is_known_free_random():
    from demandnav.mapping import UNKNOWN

    emap, grid, rng = setup_map()
    emap.cells[0:4, 0:4] = UNKNOWN  # part of block (0,0) unknown
    scores = [BlockScore((0, 0), 1.0, 1, 0)]
    for _ in range(20):
        key, cell = select_waypoint(scores, grid, emap, rng, (12, 12))
        assert key == (0, 0)
        assert emap.is_known_free(*cell)


def test_config_validation():
    with pytest.raises(ValueError):
        CoarsePolicyConfig(r_b=0.0, r_p=0.0).validate()
    CoarsePolicyConfig(r_b=0.0, r_p=1.0).validate()

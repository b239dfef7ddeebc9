"""Block-score heatmap rendering (SVG) with rank-based shading.

Shade encodes the RANK of a block's score among the unvisited blocks of
one coarse phase: rank 1 (best) is darkest. Visited blocks carry no score
and render as hatched outlines only.
"""

from __future__ import annotations

import numpy as np


def score_ranks(scores: dict[str, float]) -> dict[str, int]:
    """Dense ranks, 1 = highest score; equal scores share a rank."""
    ordered = sorted(set(scores.values()), reverse=True)
    rank_of = {value: i + 1 for i, value in enumerate(ordered)}
    return {key: rank_of[value] for key, value in scores.items()}


def render_heatmap(
    phase: dict,
    block_size: float = 2.0,
    cell_size: float = 0.25,
    map_img: np.ndarray | None = None,
    px_per_meter: float = 40.0,
) -> str:
    """One coarse phase (as logged by the c2f agent) to an SVG string."""
    entries = phase.get("scores", {})
    unvisited = {k: v["s"] for k, v in entries.items() if not v.get("visited")}
    ranks = score_ranks(unvisited)
    n_ranks = max(ranks.values()) if ranks else 1

    keys = [tuple(int(t) for t in k.split(",")) for k in entries]
    if map_img is not None:
        h, w = map_img.shape
        extent_x, extent_y = w * cell_size, h * cell_size
    else:
        max_bx = max((k[0] for k in keys), default=0) + 1
        max_by = max((k[1] for k in keys), default=0) + 1
        extent_x, extent_y = max_bx * block_size, max_by * block_size

    width_px = extent_x * px_per_meter
    height_px = extent_y * px_per_meter

    def px(x: float) -> float:
        return x * px_per_meter

    def py(y: float) -> float:
        # SVG y grows downward; world y grows upward.
        return height_px - y * px_per_meter

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width_px:.0f}" '
        f'height="{height_px:.0f}" viewBox="0 0 {width_px:.0f} {height_px:.0f}">',
        f'<rect width="{width_px:.0f}" height="{height_px:.0f}" fill="white"/>',
    ]
    if map_img is not None:
        h, w = map_img.shape
        for iy in range(h):
            for ix in range(w):
                v = map_img[iy, ix]
                if v == 128:
                    continue
                color = "#bbbbbb" if v == 0 else "#f2f2f2"
                parts.append(
                    f'<rect x="{px(ix * cell_size):.1f}" y="{py((iy + 1) * cell_size):.1f}" '
                    f'width="{px(cell_size):.1f}" height="{px(cell_size):.1f}" fill="{color}"/>'
                )
    for key_str, entry in sorted(entries.items()):
        bx, by = (int(t) for t in key_str.split(","))
        x0, y0 = bx * block_size, by * block_size
        rect_attrs = (
            f'x="{px(x0):.1f}" y="{py(y0 + block_size):.1f}" '
            f'width="{px(block_size):.1f}" height="{px(block_size):.1f}"'
        )
        if entry.get("visited"):
            parts.append(
                f'<rect {rect_attrs} fill="none" stroke="#888888" '
                f'stroke-dasharray="4,3" data-block="{key_str}" data-visited="true"/>'
            )
            continue
        rank = ranks[key_str]
        # rank 1 -> darkest red; deeper ranks fade toward white.
        lightness = 40 + int(200 * (rank - 1) / max(1, n_ranks - 1)) if n_ranks > 1 else 40
        fill = f"rgb(255,{lightness},{lightness})"
        parts.append(
            f'<rect {rect_attrs} fill="{fill}" fill-opacity="0.75" stroke="#333333" '
            f'data-block="{key_str}" data-rank="{rank}" data-score="{entry["s"]:.6f}"/>'
        )
    chosen = phase.get("chosen")
    if chosen:
        x0, y0 = chosen[0] * block_size, chosen[1] * block_size
        parts.append(
            f'<rect x="{px(x0):.1f}" y="{py(y0 + block_size):.1f}" '
            f'width="{px(block_size):.1f}" height="{px(block_size):.1f}" '
            f'fill="none" stroke="#0044cc" stroke-width="3" data-chosen="true"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)

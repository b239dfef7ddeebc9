"""Discrete attribute codebook: k-means initialization and quantization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Codebook:
    vectors: np.ndarray  # (K, d) float64

    @property
    def K(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, (n, K)."""
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def kmeans_init(
    vectors: np.ndarray, K: int, seed: int = 0, max_iters: int = 100
) -> tuple[Codebook, list[float]]:
    """Lloyd's algorithm with k-means++ seeding.

    Returns the codebook and the per-iteration distortion trace (mean squared
    distance to the assigned center), which is non-increasing.
    """
    pts = np.asarray(vectors, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("vectors must be a 2-D array")
    n_distinct = np.unique(pts, axis=0).shape[0]
    if n_distinct < K:
        raise ValueError(f"need at least K={K} distinct vectors, got {n_distinct}")
    rng = np.random.default_rng(seed)
    n = pts.shape[0]

    # k-means++ seeding.
    centers = [pts[int(rng.integers(n))]]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            # All remaining mass on duplicates of chosen centers; pick any
            # point distinct from the current centers.
            chosen = np.array(centers)
            for p in pts:
                if not (np.abs(chosen - p).sum(axis=1) < 1e-12).any():
                    centers.append(p)
                    break
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r))
            idx = min(idx, n - 1)
            centers.append(pts[idx])
        d2 = np.minimum(d2, np.sum((pts - centers[-1]) ** 2, axis=1))
    centers = np.stack(centers)

    trace: list[float] = []
    assign = np.zeros(n, dtype=int)
    for _ in range(max_iters):
        dists = _sq_dists(pts, centers)
        new_assign = np.argmin(dists, axis=1)
        trace.append(float(dists[np.arange(n), new_assign].mean()))
        # Update step; empty clusters take the point farthest from its center.
        new_centers = centers.copy()
        for k in range(K):
            members = pts[new_assign == k]
            if len(members):
                new_centers[k] = members.mean(axis=0)
        empties = [k for k in range(K) if not (new_assign == k).any()]
        if empties:
            far_order = np.argsort(-dists[np.arange(n), new_assign])
            for k, pi in zip(empties, far_order):
                new_centers[k] = pts[int(pi)]
        if (new_assign == assign).all() and np.allclose(new_centers, centers):
            break
        assign = new_assign
        centers = new_centers
    return Codebook(vectors=centers), trace


def quantize(vectors: np.ndarray, codebook: Codebook) -> tuple[np.ndarray, np.ndarray]:
    """Replace each row by its nearest codebook row (squared Euclidean).

    Ties break toward the lowest codebook index. Returns (quantized rows,
    assignment indices).
    """
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[1] != codebook.dim:
        raise ValueError(f"dim mismatch: vectors {v.shape[1]} vs codebook {codebook.dim}")
    dists = _sq_dists(v, codebook.vectors)
    assign = np.argmin(dists, axis=1)  # argmin returns the first (lowest) index on ties
    return codebook.vectors[assign].copy(), assign

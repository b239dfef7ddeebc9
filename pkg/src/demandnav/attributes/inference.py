"""Navigation-time attribute features: encoder branch and precomputed branch.

Only the table and the trained encoders are used during navigation; the
codebook and decoders stay behind in training.
"""

from __future__ import annotations

import numpy as np

from .embeddings import (
    EmbeddingTable,
    category_key,
    instruction_attr_key,
    instruction_key,
)
from .model import AttributeModel

BRANCH_MLP = "mlp"
BRANCH_PRECOMPUTED = "llm"  # precomputed language-level attributes, looked up

BRANCHES = (BRANCH_MLP, BRANCH_PRECOMPUTED)


def instruction_attributes(
    task_id: str,
    branch: str,
    table: EmbeddingTable,
    model: AttributeModel | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(basic, preferred) instruction attribute features, each (k1, d).

    The mlp branch encodes the two demand parts through the instruction
    encoder; the precomputed branch looks up stored attribute-text
    embeddings (offline language-model output, encoded ahead of time).
    """
    if branch == BRANCH_MLP:
        if model is None:
            raise ValueError("mlp branch needs a trained model")
        basic = model.ins.encode(table.get(instruction_key(task_id, "basic")))
        pref = model.ins.encode(table.get(instruction_key(task_id, "pref")))
        return basic, pref
    if branch == BRANCH_PRECOMPUTED:
        out = []
        for part in ("basic", "pref"):
            rows = []
            i = 0
            while instruction_attr_key(task_id, part, i) in table:
                rows.append(table.get(instruction_attr_key(task_id, part, i)))
                i += 1
            if not rows:
                raise KeyError(
                    f"no precomputed attribute embeddings for task {task_id!r} part {part!r}"
                )
            out.append(np.stack(rows))
        return out[0], out[1]
    raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")


def object_attributes(
    label: str,
    branch: str,
    table: EmbeddingTable,
    model: AttributeModel | None = None,
) -> np.ndarray | None:
    """(k2, d) attribute features for an object category label.

    Returns None when the label has no embedding (unknown category). The
    precomputed branch stacks the stored ground-truth attribute rows.
    """
    from .embeddings import object_attr_key

    if branch == BRANCH_MLP:
        if model is None:
            raise ValueError("mlp branch needs a trained model")
        key = category_key(label)
        if key not in table:
            return None
        return model.obj.encode(table.get(key))
    if branch == BRANCH_PRECOMPUTED:
        rows = []
        i = 0
        while object_attr_key(label, i) in table:
            rows.append(table.get(object_attr_key(label, i)))
            i += 1
        return np.stack(rows) if rows else None
    raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")


def max_pair_cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Max cosine similarity over all row pairs; zero rows contribute 0."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    dots = a @ b.T
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(
            (na[:, None] > 0) & (nb[None, :] > 0), dots / (na[:, None] * nb[None, :]), 0.0
        )
    return float(cos.max()) if cos.size else 0.0

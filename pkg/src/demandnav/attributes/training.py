"""Plain per-sample gradient descent over the five attribute losses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingTable
from .losses import LossWeights, TrainSample, loss_gradients, losses
from .model import AttributeModel

TERM_NAMES = ("attr", "vq", "commit", "recon", "match", "total")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class LossCurve:
    epochs: list[dict[str, float]] = field(default_factory=list)

    def append(self, means: dict[str, float]) -> None:
        self.epochs.append(means)

    def totals(self) -> list[float]:
        return [e["total"] for e in self.epochs]


def train(
    samples: list[TrainSample],
    table: EmbeddingTable,
    model: AttributeModel,
    weights: LossWeights | None = None,
    lr: float = 1e-2,
    epochs: int = 100,
    seed: int = 0,
) -> tuple[AttributeModel, LossCurve]:
    """SGD with the stop-gradient flow of the loss definitions.

    Sample order is shuffled per epoch under the seed; everything else is
    deterministic. The input model is not modified. Raises
    TrainingDiverged on a non-finite loss.
    """
    if lr < 0:
        raise ValueError("lr must be >= 0")
    if not samples:
        raise ValueError("no training samples")
    weights = weights or LossWeights()
    weights.validate()
    model = model.copy()
    rng = np.random.default_rng(seed)
    curve = LossCurve()
    for epoch in range(epochs):
        order = rng.permutation(len(samples))
        sums = dict.fromkeys(TERM_NAMES, 0.0)
        for si in order:
            sample = samples[int(si)]
            terms, trace = losses(sample, table, model, weights)
            if not math.isfinite(terms["total"]):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, sample {sample.instruction_key!r}: {terms}"
                )
            for name in TERM_NAMES:
                sums[name] += terms[name]
            if lr == 0.0:
                continue
            grads = loss_gradients(trace, model, weights)
            for name, g in grads.ins.items():
                getattr(model.ins, name)[...] -= lr * g
            for name, g in grads.obj.items():
                getattr(model.obj, name)[...] -= lr * g
            model.codebook.vectors -= lr * grads.codebook
        curve.append({k: v / len(samples) for k, v in sums.items()})
    return model, curve


def write_loss_curve_csv(curve: LossCurve, path: str) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("epoch",) + TERM_NAMES)
        for i, row in enumerate(curve.epochs):
            writer.writerow([i] + [repr(row[k]) for k in TERM_NAMES])

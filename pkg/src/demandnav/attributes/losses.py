"""The five training losses and their hand-derived gradients.

Per training sample (an instruction paired with one object from a solution):

    attribute:      MSE(GT-IAF, IAF) + MSE(GT-OAF, OAF)
    commitment:     MSE(IAF, sg(Q-IAF)) + MSE(OAF, sg(Q-OAF))
    vq:             MSE(Q-IAF, sg(IAF)) + MSE(Q-OAF, sg(OAF))
    reconstruction: MSE(dec(IAF), IF) + MSE(dec(OAF), OF)
    matching:       min over (i, j) of MSE(IAF_i, OAF_j)

where IAF/OAF are the encoder outputs, Q-* their codebook quantizations and
sg(.) the stop-gradient. MSE is the mean over all elements of its operands.
Ground-truth attribute row i pairs with predicted row i (fixed index order).
The stop-gradients make commitment update only the encoders and vq update
only the codebook; reconstruction decodes the *unquantized* features, so
its gradient flows through decoder and encoder with no straight-through
estimator anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, quantize
from .embeddings import EmbeddingTable
from .model import AttributeEncoder, AttributeModel


@dataclass(frozen=True)
class LossWeights:
    attr: float = 2.0
    vq: float = 1.0
    commit: float = 0.25
    recon: float = 1.0
    match: float = 1.0

    def validate(self) -> None:
        for name in ("attr", "vq", "commit", "recon", "match"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be >= 0")


@dataclass(frozen=True)
class TrainSample:
    instruction_key: str
    object_key: str
    gt_instruction_attr_keys: tuple[str, ...]  # k1 keys
    gt_object_attr_keys: tuple[str, ...]  # k2 keys

    def resolve(self, table: EmbeddingTable):
        x_i = table.get(self.instruction_key)
        x_o = table.get(self.object_key)
        gt_i = table.rows(list(self.gt_instruction_attr_keys))
        gt_o = table.rows(list(self.gt_object_attr_keys))
        return x_i, x_o, gt_i, gt_o


@dataclass
class RoleTrace:
    x: np.ndarray          # raw input feature (d,)
    gt: np.ndarray         # ground-truth attributes (k, d)
    z1: np.ndarray
    h1: np.ndarray
    attrs: np.ndarray      # encoder output (k, d)
    q: np.ndarray          # quantized attributes (k, d)
    assign: np.ndarray     # codebook row per attribute row
    z3: np.ndarray
    h3: np.ndarray
    recon: np.ndarray      # decoder output (d,)


@dataclass
class ForwardTrace:
    ins: RoleTrace
    obj: RoleTrace
    match_pair: tuple[int, int]  # argmin (i, j) of the matching loss


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a - b) ** 2))


def _role_forward(enc: AttributeEncoder, codebook: Codebook, x, gt) -> RoleTrace:
    z1, h1, attrs = enc.encode_trace(x)
    q, assign = quantize(attrs, codebook)
    z3, h3, recon = enc.decode_trace(attrs)
    return RoleTrace(x=x, gt=gt, z1=z1, h1=h1, attrs=attrs, q=q, assign=assign,
                     z3=z3, h3=h3, recon=recon)


def losses(
    sample: TrainSample,
    table: EmbeddingTable,
    model: AttributeModel,
    weights: LossWeights | None = None,
) -> tuple[dict[str, float], ForwardTrace]:
    """Forward pass: the five loss terms, their weighted total, and the trace."""
    weights = weights or LossWeights()
    weights.validate()
    x_i, x_o, gt_i, gt_o = sample.resolve(table)
    ti = _role_forward(model.ins, model.codebook, x_i, gt_i)
    to = _role_forward(model.obj, model.codebook, x_o, gt_o)

    # Matching loss: most similar (lowest-MSE) pair of attribute rows.
    diffs = ti.attrs[:, None, :] - to.attrs[None, :, :]
    pair_mse = np.mean(diffs**2, axis=2)
    flat = int(np.argmin(pair_mse))
    pair = (flat // pair_mse.shape[1], flat % pair_mse.shape[1])

    terms = {
        "attr": _mse(gt_i, ti.attrs) + _mse(gt_o, to.attrs),
        "commit": _mse(ti.attrs, ti.q) + _mse(to.attrs, to.q),
        "vq": _mse(ti.q, ti.attrs) + _mse(to.q, to.attrs),
        "recon": _mse(ti.recon, x_i) + _mse(to.recon, x_o),
        "match": float(pair_mse[pair]),
    }
    terms["total"] = (
        weights.attr * terms["attr"]
        + weights.vq * terms["vq"]
        + weights.commit * terms["commit"]
        + weights.recon * terms["recon"]
        + weights.match * terms["match"]
    )
    return terms, ForwardTrace(ins=ti, obj=to, match_pair=pair)


@dataclass
class Gradients:
    ins: dict[str, np.ndarray]
    obj: dict[str, np.ndarray]
    codebook: np.ndarray


def _role_backward(
    enc: AttributeEncoder,
    trace: RoleTrace,
    d_attrs_external: np.ndarray,
    recon_weight: float,
) -> dict[str, np.ndarray]:
    """Backprop through decoder (reconstruction) and encoder for one role.

    d_attrs_external collects every loss gradient on the encoder output
    except reconstruction, whose decoder chain is handled here.
    """
    grads = {}
    d = enc.d
    # Reconstruction: L = mean((recon - x)^2), gradient through the decoder.
    dy = recon_weight * 2.0 * (trace.recon - trace.x) / d
    grads["V2"] = np.outer(trace.h3, dy)
    grads["c2"] = dy
    dh3 = dy @ enc.V2.T
    dz3 = dh3 * (trace.z3 > 0)
    f = trace.attrs.reshape(enc.k * d)
    grads["V1"] = np.outer(f, dz3)
    grads["c1"] = dz3
    d_attrs = d_attrs_external + (dz3 @ enc.V1.T).reshape(enc.k, d)
    # Encoder chain.
    dz2 = d_attrs.reshape(enc.k * d)
    grads["W2"] = np.outer(trace.h1, dz2)
    grads["b2"] = dz2
    dh1 = dz2 @ enc.W2.T
    dz1 = dh1 * (trace.z1 > 0)
    grads["W1"] = np.outer(trace.x, dz1)
    grads["b1"] = dz1
    return grads


def loss_gradients(
    trace: ForwardTrace, model: AttributeModel, weights: LossWeights | None = None
) -> Gradients:
    """Analytic gradients of the weighted total loss for one sample.

    Stop-gradient semantics: the commitment term treats the quantized rows
    as constants, the vq term reaches only the codebook, and the matching
    term differentiates through its argmin pair alone.
    """
    weights = weights or LossWeights()
    k1, k2, d = model.k1, model.k2, model.dim
    ti, to = trace.ins, trace.obj

    d_iaf = weights.attr * 2.0 * (ti.attrs - ti.gt) / (k1 * d)
    d_oaf = weights.attr * 2.0 * (to.attrs - to.gt) / (k2 * d)
    d_iaf += weights.commit * 2.0 * (ti.attrs - ti.q) / (k1 * d)
    d_oaf += weights.commit * 2.0 * (to.attrs - to.q) / (k2 * d)
    i_star, j_star = trace.match_pair
    match_diff = 2.0 * (ti.attrs[i_star] - to.attrs[j_star]) / d
    d_iaf[i_star] += weights.match * match_diff
    d_oaf[j_star] -= weights.match * match_diff

    ins_grads = _role_backward(model.ins, ti, d_iaf, weights.recon)
    obj_grads = _role_backward(model.obj, to, d_oaf, weights.recon)

    d_codebook = np.zeros_like(model.codebook.vectors)
    for role_trace, k in ((ti, k1), (to, k2)):
        coeff = weights.vq * 2.0 / (k * d)
        for row, cb_idx in enumerate(role_trace.assign):
            d_codebook[cb_idx] += coeff * (role_trace.q[row] - role_trace.attrs[row])
    return Gradients(ins=ins_grads, obj=obj_grads, codebook=d_codebook)


def total_loss_frozen_stops(
    sample: TrainSample,
    table: EmbeddingTable,
    model: AttributeModel,
    frozen: ForwardTrace,
    weights: LossWeights | None = None,
) -> float:
    """Total loss with every stop-gradient operand pinned to a reference trace.

    Replaces sg(.) arguments, codebook assignments and the matching argmin
    pair with the values from ``frozen``, yielding a plain differentiable
    function whose exact gradient is loss_gradients(frozen). Used by the
    finite-difference tests.
    """
    weights = weights or LossWeights()
    x_i, x_o, gt_i, gt_o = sample.resolve(table)
    out = 0.0
    for enc, x, gt, ref, k in (
        (model.ins, x_i, gt_i, frozen.ins, model.k1),
        (model.obj, x_o, gt_o, frozen.obj, model.k2),
    ):
        attrs = enc.encode(x)
        q_of_codebook = model.codebook.vectors[ref.assign]  # frozen assignments
        recon = enc.decode(attrs)
        out += weights.attr * _mse(gt, attrs)
        out += weights.commit * _mse(attrs, ref.q)  # sg(Q) frozen
        out += weights.vq * _mse(q_of_codebook, ref.attrs)  # sg(IAF/OAF) frozen
        out += weights.recon * _mse(recon, x)
    i_star, j_star = frozen.match_pair
    iaf = model.ins.encode(x_i)
    oaf = model.obj.encode(x_o)
    out += weights.match * _mse(iaf[i_star], oaf[j_star])
    return out

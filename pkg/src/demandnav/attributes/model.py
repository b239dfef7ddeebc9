"""Per-role attribute encoders and decoders (plain numpy MLPs).

The encoder maps one d-dim feature to k attribute features: a rectified
hidden layer of width 2d, then a linear layer to k*d reshaped to (k, d).
The decoder mirrors it back from (k, d) to a single d-dim vector. Both are
trained with hand-derived gradients; see losses.py.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook


@dataclass
class AttributeEncoder:
    """Parameters for one role (instruction or object)."""

    k: int
    d: int
    W1: np.ndarray  # (d, 2d)
    b1: np.ndarray  # (2d,)
    W2: np.ndarray  # (2d, k*d)
    b2: np.ndarray  # (k*d,)
    V1: np.ndarray  # (k*d, 2d)
    c1: np.ndarray  # (2d,)
    V2: np.ndarray  # (2d, d)
    c2: np.ndarray  # (d,)

    PARAM_NAMES = ("W1", "b1", "W2", "b2", "V1", "c1", "V2", "c2")

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def copy(self) -> "AttributeEncoder":
        return AttributeEncoder(
            k=self.k, d=self.d,
            **{n: getattr(self, n).copy() for n in self.PARAM_NAMES},
        )

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Forward pass: d-vector -> (k, d) attribute features."""
        _, _, a = self.encode_trace(x)
        return a

    def encode_trace(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=np.float64)
        if not np.isfinite(x).all():
            raise ValueError("encoder input contains non-finite values")
        z1 = x @ self.W1 + self.b1
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ self.W2 + self.b2
        return z1, h1, z2.reshape(self.k, self.d)

    def decode(self, attrs: np.ndarray) -> np.ndarray:
        _, _, y = self.decode_trace(attrs)
        return y

    def decode_trace(self, attrs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        f = np.asarray(attrs, dtype=np.float64).reshape(self.k * self.d)
        z3 = f @ self.V1 + self.c1
        h3 = np.maximum(z3, 0.0)
        y = h3 @ self.V2 + self.c2
        return z3, h3, y


def init_encoder(k: int, d: int, rng: np.random.Generator) -> AttributeEncoder:
    """He-style scaled Gaussian init, deterministic under the given generator."""
    hidden = 2 * d

    def w(shape):
        fan_in = shape[0]
        return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)

    return AttributeEncoder(
        k=k, d=d,
        W1=w((d, hidden)), b1=np.zeros(hidden),
        W2=w((hidden, k * d)), b2=np.zeros(k * d),
        V1=w((k * d, hidden)), c1=np.zeros(hidden),
        V2=w((hidden, d)), c2=np.zeros(d),
    )


@dataclass
class AttributeModel:
    """Both role encoders plus the shared codebook."""

    ins: AttributeEncoder
    obj: AttributeEncoder
    codebook: Codebook

    @property
    def k1(self) -> int:
        return self.ins.k

    @property
    def k2(self) -> int:
        return self.obj.k

    @property
    def dim(self) -> int:
        return self.ins.d

    def copy(self) -> "AttributeModel":
        return AttributeModel(
            ins=self.ins.copy(), obj=self.obj.copy(),
            codebook=Codebook(self.codebook.vectors.copy()),
        )


def init_model(d: int, k1: int, k2: int, codebook: Codebook, seed: int = 0) -> AttributeModel:
    rng = np.random.default_rng(seed)
    ins = init_encoder(k1, d, rng)
    obj = init_encoder(k2, d, rng)
    return AttributeModel(ins=ins, obj=obj, codebook=codebook)


# ---------------------------------------------------------------------------
# Model file: byte-stable binary, magic ATM1, JSON header + raw f64 arrays.


MODEL_MAGIC = b"ATM1"


def save_model(model: AttributeModel, path: str) -> None:
    header = {
        "d": model.dim,
        "k1": model.k1,
        "k2": model.k2,
        "K": model.codebook.K,
        "arrays": [],
    }
    blobs = []
    for role, enc in (("ins", model.ins), ("obj", model.obj)):
        for name, arr in enc.params().items():
            header["arrays"].append({"name": f"{role}.{name}", "shape": list(arr.shape)})
            blobs.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    header["arrays"].append({"name": "codebook", "shape": list(model.codebook.vectors.shape)})
    blobs.append(np.ascontiguousarray(model.codebook.vectors, dtype="<f8").tobytes())
    hjson = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(hjson)))
        fh.write(hjson)
        for blob in blobs:
            fh.write(blob)


def load_model(path: str) -> AttributeModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise ValueError(f"bad model magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for meta in header["arrays"]:
            shape = tuple(meta["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * n)
            arrays[meta["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    d, k1, k2 = header["d"], header["k1"], header["k2"]

    def enc(role: str, k: int) -> AttributeEncoder:
        return AttributeEncoder(
            k=k, d=d, **{n: arrays[f"{role}.{n}"] for n in AttributeEncoder.PARAM_NAMES}
        )

    return AttributeModel(
        ins=enc("ins", k1), obj=enc("obj", k2), codebook=Codebook(arrays["codebook"])
    )

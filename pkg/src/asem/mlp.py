"""Projection encoders: one-hidden-layer MLPs with explicit forward/backward.

Each modality gets its own head mapping raw feature vectors to the shared
embedding space: ``y = relu(x @ w1 + b1) @ w2 + b2``. The backward pass is
hand-derived so the whole training chain stays finite-difference checkable.

Checkpoints store any number of heads in a small binary container plus a JSON
sidecar describing the dimensions and run metadata.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CacheMismatchError, ShapeMismatchError
from .fileio import atomic_write_bytes
from .linalg import as_matrix

CHECKPOINT_MAGIC = b"ASEM"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpParams:
    """Weights of a one-hidden-layer MLP head."""

    w1: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    b2: np.ndarray = field(repr=False)

    def __post_init__(self):
        w1 = as_matrix(self.w1, "w1")
        w2 = as_matrix(self.w2, "w2")
        b1 = np.asarray(self.b1, dtype=np.float64)
        b2 = np.asarray(self.b2, dtype=np.float64)
        if b1.ndim != 1 or b2.ndim != 1:
            raise ShapeMismatchError("biases must be 1-D")
        if w1.shape[1] != b1.shape[0] or w2.shape[0] != b1.shape[0]:
            raise ShapeMismatchError("hidden dimensions of w1, b1, w2 disagree")
        if w2.shape[1] != b2.shape[0]:
            raise ShapeMismatchError("output dimensions of w2, b2 disagree")
        for name, v in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains non-finite values")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", b2)

    @property
    def d_in(self) -> int:
        return self.w1.shape[0]

    @property
    def d_hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def d_out(self) -> int:
        return self.w2.shape[1]

    def as_list(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order (the optimizer update order)."""
        return [self.w1, self.b1, self.w2, self.b2]

    @staticmethod
    def from_list(arrays) -> "MlpParams":
        w1, b1, w2, b2 = arrays
        return MlpParams(w1, b1, w2, b2)


@dataclass(frozen=True)
class MlpCache:
    """Forward-pass intermediates needed by the backward pass."""

    x: np.ndarray = field(repr=False)
    h_pre: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class MlpGrads:
    """Gradients with respect to every parameter and the input batch."""

    w1: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    w2: np.ndarray = field(repr=False)
    b2: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)

    def as_list(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


def mlp_init(d_in: int, d_out: int, d_hidden: int | None = None, seed=0) -> MlpParams:
    """Deterministically initialize a head.

    Weights are uniform on +-sqrt(6 / fan_in), biases start at zero. The
    hidden width defaults to the output width. ``seed`` may be an int or a
    sequence of ints.
    """
    if d_hidden is None:
        d_hidden = d_out
    if d_in < 1 or d_hidden < 1 or d_out < 1:
        raise ValueError(f"dimensions must be positive, got {(d_in, d_hidden, d_out)}")
    rng = np.random.default_rng(seed)
    bound1 = np.sqrt(6.0 / d_in)
    bound2 = np.sqrt(6.0 / d_hidden)
    w1 = rng.uniform(-bound1, bound1, size=(d_in, d_hidden))
    w2 = rng.uniform(-bound2, bound2, size=(d_hidden, d_out))
    return MlpParams(w1, np.zeros(d_hidden), w2, np.zeros(d_out))


def mlp_forward(params: MlpParams, x) -> tuple[np.ndarray, MlpCache]:
    """Apply the head to a batch of rows. Returns (output, cache)."""
    x = as_matrix(x, "x")
    if x.shape[1] != params.d_in:
        raise ShapeMismatchError(
            f"input dim {x.shape[1]} does not match head d_in {params.d_in}"
        )
    h_pre = x @ params.w1 + params.b1
    h = np.maximum(h_pre, 0.0)
    y = h @ params.w2 + params.b2
    return y, MlpCache(x, h_pre, h)


def mlp_backward(params: MlpParams, cache: MlpCache, grad_y) -> MlpGrads:
    """Backward pass through the head.

    ``grad_y`` must match the output of the forward call that produced
    ``cache``. The ReLU derivative is taken as 0 at exactly 0.
    """
    grad_y = as_matrix(grad_y, "grad_y")
    if grad_y.shape != (cache.x.shape[0], params.d_out):
        raise CacheMismatchError(
            f"grad_y shape {grad_y.shape} does not match cached batch "
            f"({cache.x.shape[0]}, {params.d_out})"
        )
    if cache.x.shape[1] != params.d_in or cache.h.shape[1] != params.d_hidden:
        raise CacheMismatchError("cache was produced by a head with different dims")

    grad_w2 = cache.h.T @ grad_y
    grad_b2 = grad_y.sum(axis=0)
    grad_h = (grad_y @ params.w2.T) * (cache.h_pre > 0)
    grad_w1 = cache.x.T @ grad_h
    grad_b1 = grad_h.sum(axis=0)
    grad_x = grad_h @ params.w1.T
    return MlpGrads(grad_w1, grad_b1, grad_w2, grad_b2, grad_x)


def save_checkpoint(path, heads, meta: dict | None = None) -> None:
    """Serialize MLP heads to ``path`` and a JSON sidecar to ``path + ".json"``.

    Binary layout (all integers little-endian u32, all floats little-endian
    float64, matrices row-major):
      magic "ASEM" | version | n_heads | per-head (d_in, d_hidden, d_out)
      | per-head w1, b1, w2, b2.
    Both files are written atomically.
    """
    heads = list(heads)
    if not heads:
        raise ValueError("checkpoint needs at least one head")
    parts = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(heads))]
    for h in heads:
        parts.append(struct.pack("<III", h.d_in, h.d_hidden, h.d_out))
    for h in heads:
        for arr in h.as_list():
            parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    atomic_write_bytes(str(path), b"".join(parts))

    sidecar = {
        "version": CHECKPOINT_VERSION,
        "heads": [
            {"d_in": h.d_in, "d_hidden": h.d_hidden, "d_out": h.d_out} for h in heads
        ],
    }
    if meta:
        sidecar.update(meta)
    atomic_write_bytes(str(path) + ".json", (json.dumps(sidecar, indent=2) + "\n").encode())


def load_checkpoint(path) -> tuple[list[MlpParams], dict]:
    """Load heads saved by :func:`save_checkpoint`. Returns (heads, sidecar dict)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic {blob[:4]!r})")
    version, n_heads = struct.unpack_from("<II", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    dims = []
    for _ in range(n_heads):
        dims.append(struct.unpack_from("<III", blob, offset))
        offset += 12
    heads = []
    for d_in, d_hidden, d_out in dims:
        arrays = []
        for shape in ((d_in, d_hidden), (d_hidden,), (d_hidden, d_out), (d_out,)):
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
            arrays.append(arr.reshape(shape).astype(np.float64))
            offset += count * 8
        heads.append(MlpParams.from_list(arrays))
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes after checkpoint payload")

    sidecar_path = str(path) + ".json"
    meta = {}
    if os.path.exists(sidecar_path):
        with open(sidecar_path, encoding="utf-8") as fh:
            meta = json.load(fh)
    return heads, meta

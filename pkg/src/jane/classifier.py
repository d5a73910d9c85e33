"""Two-layer softmax network over the concatenated features ``[X U]``.

``probs = softmax(relu([X U] @ W0) @ W1)``. Gradients are computed by plain
backpropagation, including the gradient with respect to the ``U`` block of
the input, which is what couples the classifier to the latent embedding.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyLabelSet, NonPositiveScale, ShapeMismatch

PROB_FLOOR = 1e-12


@dataclass
class ClassifierParams:
    W0: np.ndarray  # (d + k, h)
    W1: np.ndarray  # (h, M)

    @property
    def h(self) -> int:
        return int(self.W0.shape[1])

    @property
    def in_dim(self) -> int:
        return int(self.W0.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.W1.shape[1])

    def copy(self) -> "ClassifierParams":
        return ClassifierParams(self.W0.copy(), self.W1.copy())


@dataclass
class ForwardTrace:
    inputs: np.ndarray  # [X U] after input dropout
    z0: np.ndarray
    a0: np.ndarray  # relu(z0), after hidden dropout when training
    a1: np.ndarray  # row-wise softmax probabilities
    in_mask: np.ndarray | None = None  # inverted-dropout multipliers
    hid_mask: np.ndarray | None = None


def init_params(in_dim: int, h: int, n_classes: int, rng: np.random.Generator) -> ClassifierParams:
    """Glorot-uniform initialisation."""
    a0 = np.sqrt(6.0 / (in_dim + h))
    a1 = np.sqrt(6.0 / (h + n_classes))
    return ClassifierParams(W0=rng.uniform(-a0, a0, size=(in_dim, h)),
                            W1=rng.uniform(-a1, a1, size=(h, n_classes)))


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _concat(X, U, params):
    X = np.asarray(X, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if X.ndim != 2 or U.ndim != 2 or X.shape[0] != U.shape[0]:
        raise ShapeMismatch(f"X {X.shape} and U {U.shape} must be 2-D with equal rows")
    H = np.concatenate([X, U], axis=1)
    if H.shape[1] != params.in_dim:
        raise ShapeMismatch(f"[X U] has {H.shape[1]} columns but W0 expects {params.in_dim}")
    return H


def _dropout_mask(shape, rate, rng):
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def forward(X, U, params: ClassifierParams, dropout: float = 0.0,
            rng: np.random.Generator | None = None) -> ForwardTrace:
    """Forward pass. Dropout is active only when ``dropout > 0``.

    Inverted dropout is applied to the input of each layer, i.e. to ``[X U]``
    and to the hidden activations.
    """
    if not 0.0 <= dropout < 1.0:
        raise ValueError(f"dropout must be in [0, 1), got {dropout}")
    H = _concat(X, U, params)
    in_mask = hid_mask = None
    if dropout > 0.0:
        if rng is None:
            raise ValueError("dropout needs an rng")
        in_mask = _dropout_mask(H.shape, dropout, rng)
        H = H * in_mask
    z0 = H @ params.W0
    a0 = np.maximum(z0, 0.0)
    if dropout > 0.0:
        hid_mask = _dropout_mask(a0.shape, dropout, rng)
        a0 = a0 * hid_mask
    a1 = softmax(a0 @ params.W1)
    return ForwardTrace(inputs=H, z0=z0, a0=a0, a1=a1, in_mask=in_mask, hid_mask=hid_mask)


def _labelled(y, idx):
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise EmptyLabelSet("no labelled nodes")
    return idx, np.asarray(y, dtype=np.int64)[idx]


def nll_loss(trace: ForwardTrace, y, idx) -> float:
    """Mean negative log-probability of the true class over ``idx``."""
    idx, labels = _labelled(y, idx)
    p = trace.a1[idx, labels]
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


def backward(trace: ForwardTrace, y, idx, params: ClassifierParams, weight_decay: float = 0.0):
    """Gradients ``(dW0, dW1, dH)`` of ``nll_loss + wd/2 * |W|^2``.

    ``dH`` is the gradient with respect to the undropped input ``[X U]``
    (the weight-decay term does not touch it).
    """
    idx, labels = _labelled(y, idx)
    delta = np.zeros_like(trace.a1)
    delta[idx] = trace.a1[idx]
    delta[idx, labels] -= 1.0
    delta /= idx.size

    dW1 = trace.a0.T @ delta + weight_decay * params.W1
    da0 = delta @ params.W1.T
    if trace.hid_mask is not None:
        da0 = da0 * trace.hid_mask
    dz0 = np.where(trace.z0 > 0.0, da0, 0.0)
    dW0 = trace.inputs.T @ dz0 + weight_decay * params.W0
    dH = dz0 @ params.W0.T
    if trace.in_mask is not None:
        dH = dH * trace.in_mask
    return dW0, dW1, dH


def grad_params(trace, X, U, y, idx, params, weight_decay: float = 0.0):
    """``(dW0, dW1)`` for the mean NLL plus L2 weight decay."""
    dW0, dW1, _ = backward(trace, y, idx, params, weight_decay)
    return dW0, dW1


def grad_U_supervised(trace, X, U, y, idx, params) -> np.ndarray:
    """Gradient of the mean NLL with respect to ``U``; zero outside ``idx``."""
    d = np.asarray(X).shape[1]
    k = np.asarray(U).shape[1]
    _, _, dH = backward(trace, y, idx, params, 0.0)
    return dH[:, d:d + k].copy()


def grad_U_adjacency(g, state) -> np.ndarray:
    """Gradient of the surrogate adjacency NLL with respect to ``U``.

    Row i is ``sum_{j~i} 2(u_i-u_j)/s^2 - sum_{j!~i} 2(u_i-u_j)/s^2 exp(-|u_i-u_j|^2/s^2)``.
    """
    U = np.asarray(state.U)
    if g.n != U.shape[0]:
        raise ShapeMismatch(f"graph has {g.n} nodes but U has {U.shape[0]} rows")
    if not state.scale_sq > 0:
        raise NonPositiveScale("scale_sq must be positive")
    return kernels.adjacency_grad(g, U, state.scale_sq)


def predict_proba(X, U, params) -> np.ndarray:
    return forward(X, U, params).a1


def predict(X, U, params) -> np.ndarray:
    """Most probable class per node; ties go to the lowest class index."""
    return np.argmax(predict_proba(X, U, params), axis=1)


def accuracy(pred, y, idx) -> float:
    idx = np.asarray(idx, dtype=np.int64)
    idx = idx[np.asarray(y)[idx] >= 0]
    if idx.size == 0:
        return float("nan")
    return float(np.mean(np.asarray(pred)[idx] == np.asarray(y)[idx]))


# -- checkpoints -------------------------------------------------------------
# Layout (all little-endian):
#   8 bytes   magic b"JANECKPT"
#   uint32    format version (1)
#   uint32    header length in bytes
#   header    UTF-8 JSON: {"h": int, "in_dim": int, "n_classes": int,
#             "dtype": "<f8", "arrays": [["W0", [r, c]], ["W1", [r, c]]],
#             "extra": {...}}
#   payload   each array in header order, row-major float64

CHECKPOINT_MAGIC = b"JANECKPT"
CHECKPOINT_VERSION = 1


def save_checkpoint(params: ClassifierParams, path, extra: dict | None = None) -> None:
    arrays = [("W0", params.W0), ("W1", params.W1)]
    header = {
        "h": params.h,
        "in_dim": params.in_dim,
        "n_classes": params.n_classes,
        "dtype": "<f8",
        "arrays": [[name, list(a.shape)] for name, a in arrays],
        "extra": extra or {},
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(raw)))
        fh.write(raw)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Return ``(params, extra)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<II", blob[8:16])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(blob[16:16 + hlen].decode("utf-8"))
    offset = 16 + hlen
    out = {}
    for name, shape in header["arrays"]:
        size = int(np.prod(shape)) * 8
        out[name] = np.frombuffer(blob[offset:offset + size], dtype="<f8").reshape(shape).astype(np.float64)
        offset += size
    if offset != len(blob):
        raise ValueError(f"{path}: trailing or missing payload bytes")
    return ClassifierParams(W0=out["W0"], W1=out["W1"]), header.get("extra", {})

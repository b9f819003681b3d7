"""Minimal dense numeric kernel for the sequence models.

Everything is 64-bit; the gradient checker needs the precision and the
corpus sizes here never justify float32. Gradients are hand-derived per
model, so this module only supplies elementwise ops, the softmax /
cross-entropy pieces, SGD with global-norm clipping, seeded init, a
finite-difference checker, and a flat binary snapshot format for
parameter dictionaries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

Params = dict[str, np.ndarray]


class ShapeError(ValueError):
    """Raised when operand shapes do not conform."""


class NumericError(RuntimeError):
    """Raised on NaN/Inf in places they must never appear."""


def _check_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not match")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    return a @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(np.asarray(a), np.asarray(b), "add")
    return a + b


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_shape(np.asarray(a), np.asarray(b), "hadamard")
    return a * b


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def dtanh_from_output(y: np.ndarray) -> np.ndarray:
    return 1.0 - y * y


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dsigmoid_from_output(y: np.ndarray) -> np.ndarray:
    return y * (1.0 - y)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Stable softmax; entries > 0 and each slice sums to 1."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=axis, keepdims=True)


@dataclass
class SgdConfig:
    """Mini-batch SGD settings; defaults follow the reference training setup."""

    learning_rate: float = 0.002
    clip_threshold: float = 5.0
    batch_size: int = 50
    epochs: int = 100

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.clip_threshold <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("clip_threshold, batch_size and epochs must be > 0")


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    return float(np.sqrt(total))


def clip_gradients(grads: Params, threshold: float, mode: str = "norm") -> Params:
    """Clip gradients in place and return them.

    ``norm`` rescales so the global L2 norm is at most ``threshold``
    (idempotent); ``value`` clips each element to [-threshold, threshold].
    """
    if mode == "value":
        for g in grads.values():
            np.clip(g, -threshold, threshold, out=g)
        return grads
    if mode != "norm":
        raise ValueError(f"unknown clip mode {mode!r}")
    norm = global_norm(grads)
    if norm > threshold:
        scale = threshold / norm
        for g in grads.values():
            g *= scale
    return grads


def sgd_step(params: Params, grads: Mapping[str, np.ndarray], config: SgdConfig,
             clip_mode: str = "norm") -> Params:
    """Clip, then update ``params`` in place: p <- p - lr * g."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in parameter block {name!r}")
    clip_gradients(dict(grads), config.clip_threshold, clip_mode)
    for name, g in grads.items():
        params[name] -= config.learning_rate * g
    return params


def xavier_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Glorot uniform init; fan counts from the trailing two dims."""
    if len(shape) == 1:
        fan_in = fan_out = shape[0]
    else:
        fan_out, fan_in = shape[-2], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def grad_check(
    loss_fn: Callable[[], float],
    params: Params,
    grads: Mapping[str, np.ndarray],
    eps: float = 1e-5,
    samples_per_block: int = 8,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between ``grads`` and central differences.

    ``loss_fn`` must read the (perturbed in place) ``params``; each block
    is probed at ``samples_per_block`` coordinates (all of them when the
    block is small). Error per coordinate is |a - n| / max(|a|, |n|, 1e-8).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name, g in grads.items():
        p = params[name]
        n_coords = p.size
        if n_coords <= samples_per_block:
            coords = np.arange(n_coords)
        else:
            coords = rng.choice(n_coords, size=samples_per_block, replace=False)
        flat = p.reshape(-1)
        gflat = np.asarray(g).reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            f_plus = loss_fn()
            flat[c] = orig - eps
            f_minus = loss_fn()
            flat[c] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            analytic = gflat[c]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


# --- flat binary parameter snapshots ---------------------------------------
#
# layout: magic b"CSQPARAM" | u16 version | u32 block count |
#         per block: u16 name length, utf-8 name, u8 ndim, u32 dims... |
#         all block data as little-endian float64 in header order.

SNAPSHOT_MAGIC = b"CSQPARAM"
SNAPSHOT_VERSION = 1


def save_params(path, params: Mapping[str, np.ndarray]) -> None:
    names = sorted(params)
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<HI", SNAPSHOT_VERSION, len(names)))
        for name in names:
            raw = name.encode("utf-8")
            arr = params[name]
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for name in names:
            fh.write(np.ascontiguousarray(params[name], dtype="<f8").tobytes())


def load_params(path) -> Params:
    with open(path, "rb") as fh:
        magic = fh.read(len(SNAPSHOT_MAGIC))
        if magic != SNAPSHOT_MAGIC:
            raise NumericError(f"{path}: not a parameter snapshot")
        version, count = struct.unpack("<HI", fh.read(6))
        if version != SNAPSHOT_VERSION:
            raise NumericError(f"{path}: unsupported snapshot version {version}")
        headers = []
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim)) if ndim else ()
            headers.append((name, shape))
        params: Params = {}
        for name, shape in headers:
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(np.float64)
            params[name] = data.reshape(shape)
    return params

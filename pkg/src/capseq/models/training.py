"""Session encoding and the mini-batch training loop shared by the
recurrent models.

Sessions become (input, target) index pairs under teacher forcing, with
per-step attribute vectors and one per-sequence feature vector. Batches
are right-padded with the model's padding token and loss-masked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import numerics
from ..data.types import Encodings, Session
from ..features import ATTRIBUTE_DIM, FeatureTables

MAX_STEPS = 25  # cap on teacher-forcing steps per session


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite during epoch {epoch}")
        self.epoch = epoch


@dataclass
class EncodedSequence:
    inputs: np.ndarray   # (T,) int
    targets: np.ndarray  # (T,) int
    attrs: np.ndarray    # (T, attribute_dim)
    feat: np.ndarray     # (feature_dim,)


@dataclass
class Batch:
    inputs: np.ndarray   # (B, T) int
    targets: np.ndarray  # (B, T) int
    mask: np.ndarray     # (B, T) 0/1
    attrs: np.ndarray    # (B, T, attribute_dim)
    feats: np.ndarray    # (B, feature_dim)


def encode_session(
    session: Session,
    tables: FeatureTables,
    encodings: Encodings,
    max_steps: int = MAX_STEPS,
) -> EncodedSequence:
    """Teacher-forcing encoding of one session (length >= 2)."""
    if len(session) < 2:
        raise ValueError("training sessions must have at least two visits")
    visits = session.visits[: max_steps + 1]
    ixs = [encodings.poi(v.poi.poi_id) for v in visits]
    T = len(ixs) - 1
    attrs = np.zeros((T, ATTRIBUTE_DIM))
    for t in range(T):
        prev = ixs[t - 1] if t > 0 else None
        attrs[t] = tables.attribute_vector(ixs[t], visits[t].hour, prev)
    attrs /= tables.attribute_scale
    feat = tables.feature_vector(session) / tables.feature_scale
    return EncodedSequence(
        inputs=np.asarray(ixs[:-1], dtype=np.int64),
        targets=np.asarray(ixs[1:], dtype=np.int64),
        attrs=attrs,
        feat=feat,
    )


def encode_sessions(
    sessions: Sequence[Session],
    tables: FeatureTables,
    encodings: Encodings,
    max_steps: int = MAX_STEPS,
) -> list:
    return [
        encode_session(s, tables, encodings, max_steps)
        for s in sessions
        if len(s) >= 2
    ]


def make_batch(sequences: Sequence[EncodedSequence], pad_ix: int) -> Batch:
    B = len(sequences)
    T = max(len(s.inputs) for s in sequences)
    a_dim = sequences[0].attrs.shape[1]
    inputs = np.full((B, T), pad_ix, dtype=np.int64)
    targets = np.zeros((B, T), dtype=np.int64)
    mask = np.zeros((B, T))
    attrs = np.zeros((B, T, a_dim))
    feats = np.zeros((B, len(sequences[0].feat)))
    for b, seq in enumerate(sequences):
        n = len(seq.inputs)
        inputs[b, :n] = seq.inputs
        targets[b, :n] = seq.targets
        mask[b, :n] = 1.0
        attrs[b, :n, :] = seq.attrs
        feats[b] = seq.feat
    return Batch(inputs, targets, mask, attrs, feats)


def mean_nll(net, sequences: Sequence[EncodedSequence], batch_size: int = 50) -> float:
    """Dataset mean of per-sequence NLL without updating anything."""
    total = 0.0
    for start in range(0, len(sequences), batch_size):
        chunk = sequences[start : start + batch_size]
        batch = make_batch(chunk, net.pad_ix)
        total += net.batch_nll(batch) * len(chunk)
    return total / len(sequences)


def train(
    net,
    sequences: Sequence[EncodedSequence],
    config: numerics.SgdConfig | None = None,
    seed: int = 0,
) -> list:
    """Shuffled mini-batch SGD with clipped gradients.

    Returns the loss curve: entry 0 is the pre-training dataset NLL,
    entry e >= 1 the mean batch loss seen during epoch e.
    """
    if not sequences:
        raise ValueError("training requires at least one encoded session")
    config = config or numerics.SgdConfig()
    rng = np.random.default_rng(seed)
    curve = [mean_nll(net, sequences, config.batch_size)]
    n = len(sequences)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            chunk = [sequences[i] for i in order[start : start + config.batch_size]]
            batch = make_batch(chunk, net.pad_ix)
            loss, grads = net.loss_and_grads(batch)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            numerics.sgd_step(net.params, grads, config)
            total += loss * len(chunk)
        curve.append(total / n)
    return curve

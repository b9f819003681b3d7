from .base import BaseEstimator, NotFittedError, SequenceRecommender
from .lstm import ContextLstm
from .rnn import ContextRnn
from .training import (
    MAX_STEPS,
    Batch,
    EncodedSequence,
    TrainingDivergedError,
    encode_session,
    encode_sessions,
    make_batch,
    mean_nll,
    train,
)
from .recommenders import (
    KIND_CAPS_LSTM,
    KIND_CAPS_RNN,
    KIND_PLAIN_RNN,
    MODEL_KINDS,
    CapsLstmRecommender,
    CapsRnnRecommender,
    PlainRnnRecommender,
    encodings_hash,
    load_checkpoint,
)

__all__ = [
    "BaseEstimator",
    "Batch",
    "CapsLstmRecommender",
    "CapsRnnRecommender",
    "ContextLstm",
    "ContextRnn",
    "EncodedSequence",
    "KIND_CAPS_LSTM",
    "KIND_CAPS_RNN",
    "KIND_PLAIN_RNN",
    "MAX_STEPS",
    "MODEL_KINDS",
    "NotFittedError",
    "PlainRnnRecommender",
    "SequenceRecommender",
    "TrainingDivergedError",
    "encode_session",
    "encode_sessions",
    "encodings_hash",
    "load_checkpoint",
    "make_batch",
    "mean_nll",
    "train",
]

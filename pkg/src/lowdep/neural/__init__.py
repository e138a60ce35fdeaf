from .checkpoint import load_checkpoint, save_checkpoint
from .encoder import Batch, SentenceEncoder, embed_tokens, make_batch
from .layers import (
    MLP,
    Biaffine,
    BiLSTMEncoder,
    CharEncoder,
    Embedder,
    EncoderConfig,
    biaffine_score,
    flatten_params,
    init_embeddings_,
    softmax_cross_entropy,
    unflatten_params,
)
from .training import EvalPoint, OptimizerConfig, TrainingError, TrainResult, train
from .vocab import Vocab

__all__ = [
    "MLP", "Batch", "Biaffine", "BiLSTMEncoder", "CharEncoder", "Embedder", "EncoderConfig",
    "EvalPoint", "OptimizerConfig", "SentenceEncoder", "TrainResult", "TrainingError", "Vocab",
    "biaffine_score", "embed_tokens", "flatten_params", "init_embeddings_", "load_checkpoint",
    "make_batch", "save_checkpoint", "softmax_cross_entropy", "train", "unflatten_params",
]

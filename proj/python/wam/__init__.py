"""Word embedding alignment with a localized multi-scale MMD loss."""

from ._core import (
    ConfigError,
    batch_mmd_loss,
    evaluate,
    evaluate_checkpoint,
    knn_accuracy,
    load_dictionary,
    load_embeddings,
    multiscale_rbf,
    pair_r2,
    sentence_mmd,
    synth_cipher_corpus,
    tokenize,
    train,
    write_cipher_corpus,
)

__all__ = [
    "ConfigError",
    "batch_mmd_loss",
    "evaluate",
    "evaluate_checkpoint",
    "knn_accuracy",
    "load_dictionary",
    "load_embeddings",
    "multiscale_rbf",
    "pair_r2",
    "sentence_mmd",
    "synth_cipher_corpus",
    "tokenize",
    "train",
    "write_cipher_corpus",
]

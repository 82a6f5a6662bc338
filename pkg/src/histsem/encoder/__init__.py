"""Contextual encoder abstraction: deterministic mock, toy trainable
masked-LM, and a subprocess adapter slot for external pre-trained models."""

from __future__ import annotations

from typing import Optional

from ..usage import Usage
from .adapter import ExternalEncoderAdapter
from .checkpoint import MOCK, TOY, Checkpoint, new_mock_checkpoint
from .config import EncoderConfig
from .mock import mock_encode
from .states import (
    EmbeddingRecord,
    HiddenStates,
    extract_usage_embedding,
    read_embeddings,
    write_embeddings,
)
from .tokenizer import TOKENIZER, WordPieceTokenizer
from .toy import (
    continue_pretraining,
    fresh_toy_checkpoint,
    masked_prediction_accuracy,
    toy_encode,
    train_toy,
)

__all__ = [
    "Checkpoint",
    "EncoderConfig",
    "EmbeddingRecord",
    "HiddenStates",
    "ExternalEncoderAdapter",
    "WordPieceTokenizer",
    "TOKENIZER",
    "MOCK",
    "TOY",
    "new_mock_checkpoint",
    "fresh_toy_checkpoint",
    "encode",
    "extract_usage_embedding",
    "train_toy",
    "continue_pretraining",
    "masked_prediction_accuracy",
    "batch_extract",
    "read_embeddings",
    "write_embeddings",
]


def encode(checkpoint: Checkpoint, tokens: list[str]) -> HiddenStates:
    """All layers' hidden vectors plus the word -> subtoken span map."""
    if checkpoint.model_type == MOCK:
        return mock_encode(checkpoint, tokens)
    return toy_encode(checkpoint, tokens)


def batch_extract(
    checkpoint: Checkpoint,
    usages: list[Usage],
    last_k: Optional[int] = None,
) -> list[EmbeddingRecord]:
    """One EmbeddingRecord per usage, order-preserving.

    ``last_k`` defaults to min(4, num_layers) so shallow toy encoders work
    with the same call sites as deeper ones.
    """
    seen: set[str] = set()
    for u in usages:
        if u.usage_id in seen:
            raise ValueError(f"duplicate usage_id: {u.usage_id}")
        seen.add(u.usage_id)
    k = last_k if last_k is not None else min(4, checkpoint.config.num_layers)
    encoder_id = checkpoint.encoder_id
    records = []
    for u in usages:
        try:
            states = encode(checkpoint, u.tokens)
            vector = extract_usage_embedding(states, u.focus_index, last_k=k)
        except Exception as exc:
            raise RuntimeError(f"extraction failed for usage {u.usage_id}: {exc}") from exc
        records.append(
            EmbeddingRecord(
                word=u.word,
                usage_id=u.usage_id,
                decade=u.decade,
                vector=vector,
                encoder_id=encoder_id,
            )
        )
    return records

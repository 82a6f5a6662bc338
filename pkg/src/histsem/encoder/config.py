"""Encoder hyperparameter bundle."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class EncoderConfig:
    """Pre-training hyperparameters plus desk-scale encoder dimensions.

    Defaults mirror the published continued-pre-training recipe where it
    applies (sequence length 128, 15% masking, batch 32, lr 2e-5); the
    encoder itself defaults to a small 2-layer, 64-dim model so training
    runs on a desktop CPU.
    """

    max_seq_length: int = 128
    max_predictions_per_seq: int = 20
    masked_lm_prob: float = 0.15
    train_batch_size: int = 32
    num_warmup_steps: int = 10_000
    num_train_steps: int = 10_000
    learning_rate: float = 2e-5
    hidden_dim: int = 64
    num_layers: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.masked_lm_prob < 1.0:
            raise ValueError("masked_lm_prob must be in (0, 1)")
        for name in ("max_seq_length", "max_predictions_per_seq", "train_batch_size", "hidden_dim", "num_layers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("num_warmup_steps", "num_train_steps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.max_predictions_per_seq > self.max_seq_length:
            raise ValueError("max_predictions_per_seq must not exceed max_seq_length")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "EncoderConfig":
        return cls(**data)

    def digest(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

"""Deterministic, training-free mock encoder.

Each position's vector is drawn from a Gaussian seeded by a stable digest
of (subtoken, +/-2 subtoken context window, layer index) and mapped to the
unit sphere, so the same sentence always encodes identically while the same
word in different contexts gets different vectors.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .checkpoint import Checkpoint
from .states import HiddenStates
from .tokenizer import CLS, SEP, TOKENIZER

_CONTEXT_WINDOW = 2


def _position_vector(subtoken: str, context: tuple[str, ...], layer: int, dim: int) -> np.ndarray:
    key = f"{subtoken}|{' '.join(context)}|{layer}".encode("utf-8")
    seed = int.from_bytes(hashlib.sha256(key).digest()[:8], "little")
    vec = np.random.default_rng(seed).standard_normal(dim)
    return vec / np.linalg.norm(vec)


def mock_encode(checkpoint: Checkpoint, tokens: list[str]) -> HiddenStates:
    if not tokens:
        raise ValueError("cannot encode an empty token list")
    cfg = checkpoint.config
    ids, spans = TOKENIZER.encode_words(tokens)
    pieces = TOKENIZER.decode(ids)
    limit = cfg.max_seq_length - 2  # room for [CLS]/[SEP]
    if len(pieces) > limit:
        pieces = pieces[:limit]
    sequence = [CLS] + pieces + [SEP]
    token_spans = {
        w: (s + 1, e + 1) for w, (s, e) in enumerate(spans) if e <= len(pieces)
    }
    layers = []
    for layer in range(cfg.num_layers):
        mat = np.empty((len(sequence), cfg.hidden_dim), dtype=np.float64)
        for j, piece in enumerate(sequence):
            lo = max(0, j - _CONTEXT_WINDOW)
            hi = min(len(sequence), j + _CONTEXT_WINDOW + 1)
            mat[j] = _position_vector(piece, tuple(sequence[lo:hi]), layer, cfg.hidden_dim)
        layers.append(mat)
    return HiddenStates(layers=layers, token_spans=token_spans)

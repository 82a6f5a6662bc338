"""Hidden states, focus-word embedding extraction, and the embedding store."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..corpus import DecadeLabel


@dataclass
class HiddenStates:
    """Per-layer hidden vectors for one encoded sentence.

    ``layers`` is ordered bottom to top, one (seq_len, hidden_dim) array per
    encoder layer. ``token_spans`` maps input word index -> [start, end)
    subtoken range within the sequence (special tokens excluded from spans).
    """

    layers: list[np.ndarray]
    token_spans: dict[int, tuple[int, int]]

    def __post_init__(self) -> None:
        shapes = {layer.shape for layer in self.layers}
        if len(shapes) != 1:
            raise ValueError(f"all layers must share one shape, got {shapes}")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def hidden_dim(self) -> int:
        return self.layers[0].shape[1]


def extract_usage_embedding(states: HiddenStates, focus_word_index: int, last_k: int = 4) -> np.ndarray:
    """Mean-pool the focus word's subtoken vectors in each of the top
    ``last_k`` layers, then sum the pooled vectors dimension-wise."""
    if focus_word_index not in states.token_spans:
        raise IndexError(f"focus word index {focus_word_index} not in token spans")
    if not 1 <= last_k <= states.num_layers:
        raise ValueError(f"last_k must be in [1, {states.num_layers}], got {last_k}")
    start, end = states.token_spans[focus_word_index]
    result = np.zeros(states.hidden_dim, dtype=np.float64)
    for layer in states.layers[-last_k:]:
        result += layer[start:end].mean(axis=0)
    return result


@dataclass
class EmbeddingRecord:
    word: str
    usage_id: str
    decade: DecadeLabel
    vector: np.ndarray
    encoder_id: str

    def __post_init__(self) -> None:
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if not np.all(np.isfinite(self.vector)):
            raise ValueError(f"non-finite embedding for {self.usage_id}")

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "usage_id": self.usage_id,
            "decade": self.decade.start_year,
            "encoder_id": self.encoder_id,
            "dim": int(self.vector.shape[0]),
            "vector": [float(v) for v in self.vector],
        }

    @classmethod
    def from_json(cls, data: dict) -> "EmbeddingRecord":
        vec = np.asarray(data["vector"], dtype=np.float64)
        if len(vec) != data["dim"]:
            raise ValueError(f"vector length {len(vec)} != declared dim {data['dim']}")
        return cls(
            word=data["word"],
            usage_id=data["usage_id"],
            decade=DecadeLabel(data["decade"]),
            vector=vec,
            encoder_id=data["encoder_id"],
        )


def write_embeddings(records: Iterable[EmbeddingRecord], path: Path) -> None:
    """JSON Lines embedding store, one record per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True))
            fh.write("\n")


def read_embeddings(path: Path) -> list[EmbeddingRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        data = json.loads(line)
        if "_meta" in data:  # optional run-metadata header line
            continue
        records.append(EmbeddingRecord.from_json(data))
    return records

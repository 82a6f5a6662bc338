"""Subprocess adapter for plugging in an external pre-trained encoder.

Protocol: the adapter writes JSON Lines of {"usage_id", "tokens",
"focus_index"} to the subprocess's stdin and reads JSON Lines of
{"usage_id", "layers": [[...], ...]} from its stdout, where ``layers`` are
the focus position's per-layer hidden vectors, bottom to top. The adapter
sums the last ``last_k`` layers, matching the in-process extraction rule.
"""

from __future__ import annotations

import json
import subprocess
from typing import Sequence

import numpy as np

from ..usage import Usage
from .states import EmbeddingRecord


class ExternalEncoderAdapter:
    def __init__(self, command: Sequence[str], encoder_id: str, last_k: int = 4):
        if not command:
            raise ValueError("adapter command must be non-empty")
        self.command = list(command)
        self.encoder_id = encoder_id
        self.last_k = last_k

    def encode_usages(self, usages: list[Usage]) -> list[EmbeddingRecord]:
        request = "".join(
            json.dumps(
                {"usage_id": u.usage_id, "tokens": u.tokens, "focus_index": u.focus_index},
                sort_keys=True,
            )
            + "\n"
            for u in usages
        )
        proc = subprocess.run(
            self.command,
            input=request.encode("utf-8"),
            stdout=subprocess.PIPE,
            check=True,
        )
        responses: dict[str, np.ndarray] = {}
        for line in proc.stdout.decode("utf-8").splitlines():
            if not line.strip():
                continue
            data = json.loads(line)
            layers = np.asarray(data["layers"], dtype=np.float64)
            if layers.ndim != 2:
                raise ValueError(f"adapter returned malformed layers for {data.get('usage_id')}")
            if self.last_k > layers.shape[0]:
                raise ValueError(f"adapter returned {layers.shape[0]} layers, need {self.last_k}")
            responses[data["usage_id"]] = layers[-self.last_k :].sum(axis=0)
        missing = [u.usage_id for u in usages if u.usage_id not in responses]
        if missing:
            raise ValueError(f"adapter returned no vectors for: {missing}")
        return [
            EmbeddingRecord(
                word=u.word,
                usage_id=u.usage_id,
                decade=u.decade,
                vector=responses[u.usage_id],
                encoder_id=self.encoder_id,
            )
            for u in usages
        ]

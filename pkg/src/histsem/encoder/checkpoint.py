"""Checkpoint container and its single-file serialization format.

Layout: one compact JSON header line (model type, config, provenance,
parameter table, digest) terminated by a newline, followed by the raw
parameter blocks as IEEE-754 single precision, little-endian, concatenated
in header order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import EncoderConfig

MOCK = "mock"
TOY = "toy"

_FORMAT = "histsem-checkpoint-v1"


@dataclass
class Checkpoint:
    model_type: str  # MOCK or TOY
    config: EncoderConfig
    parameters: dict[str, np.ndarray] = field(default_factory=dict)
    provenance: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.model_type not in (MOCK, TOY):
            raise ValueError(f"unknown model type: {self.model_type}")
        self.parameters = {k: np.asarray(v, dtype=np.float32) for k, v in self.parameters.items()}

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.model_type.encode("utf-8"))
        h.update(json.dumps(self.config.to_json(), sort_keys=True).encode("utf-8"))
        h.update(json.dumps(self.provenance, sort_keys=True).encode("utf-8"))
        for name in sorted(self.parameters):
            h.update(name.encode("utf-8"))
            h.update(self.parameters[name].astype("<f4").tobytes())
        return h.hexdigest()

    @property
    def encoder_id(self) -> str:
        return f"{self.model_type}-{self.digest()[:16]}"

    def with_provenance(self, entry: dict) -> "Checkpoint":
        return Checkpoint(
            model_type=self.model_type,
            config=self.config,
            parameters={k: v.copy() for k, v in self.parameters.items()},
            provenance=self.provenance + [entry],
        )

    def save(self, path: Path) -> None:
        names = sorted(self.parameters)
        table = []
        offset = 0
        for name in names:
            arr = self.parameters[name].astype("<f4")
            size = arr.size * 4
            table.append({"name": name, "shape": list(arr.shape), "offset": offset, "bytes": size})
            offset += size
        header = {
            "format": _FORMAT,
            "model_type": self.model_type,
            "config": self.config.to_json(),
            "provenance": self.provenance,
            "params": table,
            "digest": self.digest(),
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            for name in names:
                fh.write(self.parameters[name].astype("<f4").tobytes())

    @classmethod
    def load(cls, path: Path) -> "Checkpoint":
        with open(path, "rb") as fh:
            header_line = fh.readline()
            blob = fh.read()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("format") != _FORMAT:
            raise ValueError(f"not a checkpoint file: {path}")
        params: dict[str, np.ndarray] = {}
        for entry in header["params"]:
            raw = blob[entry["offset"] : entry["offset"] + entry["bytes"]]
            params[entry["name"]] = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"]).copy()
        ckpt = cls(
            model_type=header["model_type"],
            config=EncoderConfig.from_json(header["config"]),
            parameters=params,
            provenance=list(header["provenance"]),
        )
        if ckpt.digest() != header["digest"]:
            raise ValueError(f"checkpoint digest mismatch in {path}")
        return ckpt


def new_mock_checkpoint(config: EncoderConfig) -> Checkpoint:
    """Parameter-free deterministic test-double encoder."""
    return Checkpoint(model_type=MOCK, config=config, parameters={}, provenance=[{"kind": "mock-init"}])

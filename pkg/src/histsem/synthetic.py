"""Bundled synthetic corpus generator for demos and offline pipeline tests.

Documents are built from the shipped encoder vocabulary, so everything
tokenizes into known subwords. Generation is fully determined by the seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .encoder.tokenizer import _COMMON_WORDS

TOPIC_VEHICLE = [
    "horse", "horses", "wheel", "wheels", "road", "travel", "driver",
    "passenger", "journey", "street", "stage",
]
TOPIC_SPORT = [
    "team", "player", "game", "sport", "practice", "season", "win",
    "race", "football", "basketball",
]
_FILLER = [w for w in _COMMON_WORDS if len(w) > 1][:120]


def _sentence(rng: np.random.Generator, topic: list[str], keyword: str | None, length: int) -> str:
    words = [topic[int(rng.integers(len(topic)))] for _ in range(length)]
    for i in range(0, len(words), 3):
        words[i] = _FILLER[int(rng.integers(len(_FILLER)))]
    if keyword is not None:
        words[int(rng.integers(len(words)))] = keyword
    return " ".join(words) + " ."


def make_synthetic_corpus(
    out_dir: Path,
    seed: int = 0,
    docs_per_decade: int = 4,
    sentences_per_doc: int = 6,
    decades: tuple[int, int] = (1910, 2000),
    keyword: str = "coach",
) -> list[Path]:
    """Write doc_<year>_<id>.txt files covering the decade range.

    Early-decade documents use the keyword in vehicle contexts, late-decade
    documents in sport contexts, so the corpus carries a planted sense
    shift.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    midpoint = (decades[0] + decades[1]) // 2
    paths = []
    for decade in range(decades[0], decades[1] + 1, 10):
        topic = TOPIC_VEHICLE if decade <= midpoint else TOPIC_SPORT
        for d in range(docs_per_decade):
            year = decade + int(rng.integers(10))
            lines = []
            for s in range(sentences_per_doc):
                use_keyword = keyword if s % 2 == 0 else None
                lines.append(_sentence(rng, topic, use_keyword, length=9))
            path = out_dir / f"doc_{year}_{decade}s{d}.txt"
            path.write_text(" ".join(lines) + "\n", encoding="utf-8")
            paths.append(path)
    return paths

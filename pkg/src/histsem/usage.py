"""Focus-word usages, DUPS-format human judgments, and per-word similarity
matrices (human and model sides share one matrix type and id ordering).

DUPS interchange format: CSV with header
  word, usage_a_text, usage_a_focus_offset, usage_a_interval,
  usage_b_text, usage_b_focus_offset, usage_b_interval, score_1..score_5
where intervals are "1910-1920"-style strings and offsets are character
positions of the focus word within the raw snippet.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .corpus import DecadeLabel, Sentence, normalize_text
from .stats import cosine_similarity

logger = logging.getLogger(__name__)

__all__ = [
    "Usage",
    "AnnotatedPair",
    "DupsDataset",
    "SimilarityMatrix",
    "find_usages",
    "load_dups",
    "write_dups",
    "build_human_matrix",
    "build_model_matrix",
]

DUPS_COLUMNS = [
    "word",
    "usage_a_text",
    "usage_a_focus_offset",
    "usage_a_interval",
    "usage_b_text",
    "usage_b_focus_offset",
    "usage_b_interval",
    "score_1",
    "score_2",
    "score_3",
    "score_4",
    "score_5",
]


def _focus_matches(token: str, word: str) -> bool:
    # the focus token may carry punctuation or clitics; whole-token match
    # on the normalized form is required
    return word in normalize_text(token).split()


@dataclass
class Usage:
    usage_id: str
    word: str
    tokens: list[str]
    focus_index: int
    decade: DecadeLabel

    def __post_init__(self) -> None:
        if not 0 <= self.focus_index < len(self.tokens):
            raise ValueError(f"focus_index {self.focus_index} out of range for {self.usage_id}")
        if not _focus_matches(self.tokens[self.focus_index], self.word):
            raise ValueError(
                f"focus token {self.tokens[self.focus_index]!r} does not match word {self.word!r}"
            )


@dataclass
class AnnotatedPair:
    word: str
    usage_a: Usage
    usage_b: Usage
    scores: list[float]

    def __post_init__(self) -> None:
        if len(self.scores) != 5:
            raise ValueError(f"expected exactly 5 annotator scores, got {len(self.scores)}")

    @property
    def mean_score(self) -> float:
        return sum(self.scores) / 5.0


@dataclass
class DupsDataset:
    words: list[str]
    pairs: list[AnnotatedPair]

    def pairs_for(self, word: str) -> list[AnnotatedPair]:
        return [p for p in self.pairs if p.word == word]

    def pair_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {w: 0 for w in self.words}
        for p in self.pairs:
            counts[p.word] += 1
        return counts


@dataclass
class SimilarityMatrix:
    """Square symmetric per-word matrix over an ordered list of usage ids.

    Missing cells are NaN. ``source`` is "human" or an encoder id.
    """

    word: str
    usage_ids: list[str]
    values: np.ndarray
    source: str

    def __post_init__(self) -> None:
        n = len(self.usage_ids)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (n, n):
            raise ValueError(f"matrix shape {self.values.shape} != ({n}, {n})")

    @property
    def n(self) -> int:
        return len(self.usage_ids)

    def defined_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def to_json(self) -> dict:
        vals = [[None if not np.isfinite(v) else float(v) for v in row] for row in self.values]
        return {"word": self.word, "usage_ids": self.usage_ids, "values": vals, "source": self.source}

    @classmethod
    def from_json(cls, data: dict) -> "SimilarityMatrix":
        vals = np.array(
            [[np.nan if v is None else float(v) for v in row] for row in data["values"]],
            dtype=np.float64,
        )
        return cls(word=data["word"], usage_ids=list(data["usage_ids"]), values=vals, source=data["source"])

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "SimilarityMatrix":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def find_usages(sentences: Iterable[Sentence], word: str) -> list[Usage]:
    """One Usage per occurrence of the word; a sentence containing the word
    twice yields two usages. Decade inherited from the sentence."""
    if word != normalize_text(word) or " " in word:
        raise ValueError(f"word must be a normalized single token: {word!r}")
    usages: list[Usage] = []
    for sent in sentences:
        occurrence = 0
        for i, tok in enumerate(sent.tokens):
            if _focus_matches(tok, word):
                usages.append(
                    Usage(
                        usage_id=f"{word}:{sent.doc_id}:{sent.index}:{occurrence}",
                        word=word,
                        tokens=list(sent.tokens),
                        focus_index=i,
                        decade=sent.decade,
                    )
                )
                occurrence += 1
    return usages


def _parse_interval(raw: str) -> DecadeLabel:
    parts = raw.strip().split("-")
    if len(parts) != 2 or not parts[0].isdigit() or not parts[1].isdigit():
        raise ValueError(f"missing or malformed decade interval: {raw!r}")
    return DecadeLabel.of_year(int(parts[0]))


def _snippet_usage(word: str, text: str, offset: int, interval: str) -> Usage:
    if not 0 <= offset < len(text):
        raise ValueError(f"focus offset {offset} out of range for snippet")
    tokens = text.split()
    # locate the whitespace token covering the character offset
    pos = 0
    focus_index = None
    for i, tok in enumerate(tokens):
        start = text.index(tok, pos)
        end = start + len(tok)
        if start <= offset < end:
            focus_index = i
            break
        pos = end
    if focus_index is None:
        raise ValueError(f"focus offset {offset} does not land on a token")
    digest = hashlib.sha1(f"{word}|{text}|{offset}|{interval}".encode("utf-8")).hexdigest()[:12]
    return Usage(
        usage_id=f"{word}#{digest}",
        word=word,
        tokens=tokens,
        focus_index=focus_index,
        decade=_parse_interval(interval),
    )


def load_dups(path: Path) -> DupsDataset:
    """Parse a DUPS-format CSV into usages and annotated pairs."""
    words: list[str] = []
    pairs: list[AnnotatedPair] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != DUPS_COLUMNS:
            raise ValueError(f"unexpected DUPS header: {header}")
        for row_no, row in enumerate(reader, 2):
            if len(row) != len(DUPS_COLUMNS):
                raise ValueError(f"row {row_no}: expected {len(DUPS_COLUMNS)} columns, got {len(row)}")
            word = row[0]
            try:
                scores = [float(s) for s in row[7:12]]
            except ValueError as exc:
                raise ValueError(f"row {row_no}: non-numeric score") from exc
            usage_a = _snippet_usage(word, row[1], int(row[2]), row[3])
            usage_b = _snippet_usage(word, row[4], int(row[5]), row[6])
            pairs.append(AnnotatedPair(word=word, usage_a=usage_a, usage_b=usage_b, scores=scores))
            if word not in words:
                words.append(word)
    dataset = DupsDataset(words=words, pairs=pairs)
    for word, count in dataset.pair_counts().items():
        logger.debug("DUPS word %s: %d pairs", word, count)
    return dataset


def write_dups(pairs: Iterable[tuple], path: Path) -> None:
    """Write rows of (word, text_a, off_a, interval_a, text_b, off_b,
    interval_b, s1..s5) as a DUPS CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DUPS_COLUMNS)
        for row in pairs:
            writer.writerow(row)


def _collect_usages(dataset: DupsDataset, word: str) -> tuple[list[str], dict[str, Usage]]:
    ids: list[str] = []
    by_id: dict[str, Usage] = {}
    for pair in dataset.pairs_for(word):
        for u in (pair.usage_a, pair.usage_b):
            if u.usage_id not in by_id:
                by_id[u.usage_id] = u
                ids.append(u.usage_id)
    return ids, by_id


def dups_usages(dataset: DupsDataset, word: Optional[str] = None) -> list[Usage]:
    """All distinct usages in the dataset (optionally one word), in first
    appearance order."""
    words = [word] if word is not None else dataset.words
    out: list[Usage] = []
    for w in words:
        ids, by_id = _collect_usages(dataset, w)
        out.extend(by_id[i] for i in ids)
    return out


def build_human_matrix(dataset: DupsDataset, word: str) -> SimilarityMatrix:
    """Square matrix over every usage of the word appearing in any annotated
    pair; annotated cells hold mean scores (mirrored), duplicates averaged,
    everything else missing."""
    if word not in dataset.words:
        raise ValueError(f"word not in dataset: {word}")
    ids, _ = _collect_usages(dataset, word)
    index = {uid: i for i, uid in enumerate(ids)}
    n = len(ids)
    sums = np.zeros((n, n))
    counts = np.zeros((n, n), dtype=np.int64)
    for pair in dataset.pairs_for(word):
        i = index[pair.usage_a.usage_id]
        j = index[pair.usage_b.usage_id]
        sums[i, j] += pair.mean_score
        sums[j, i] += pair.mean_score
        counts[i, j] += 1
        counts[j, i] += 1
    dupes = int(np.sum(np.triu(counts, 1) > 1))
    if dupes:
        logger.info("word %s: %d duplicated pair annotations averaged", word, dupes)
    values = np.full((n, n), np.nan)
    defined = counts > 0
    values[defined] = sums[defined] / counts[defined]
    return SimilarityMatrix(word=word, usage_ids=ids, values=values, source="human")


def build_model_matrix(records, word: str, mask: SimilarityMatrix) -> SimilarityMatrix:
    """Fill the defined cells of ``mask`` with cosine similarities of the
    corresponding embedding pairs; diagonal is 1.0; missing cells stay
    missing."""
    by_id: dict[str, np.ndarray] = {}
    encoder_ids = set()
    for rec in records:
        if rec.word == word:
            by_id[rec.usage_id] = np.asarray(rec.vector, dtype=np.float64)
            encoder_ids.add(rec.encoder_id)
    missing = [uid for uid in mask.usage_ids if uid not in by_id]
    if missing:
        raise ValueError(f"embeddings missing for usage ids: {missing}")
    if len(encoder_ids) != 1:
        raise ValueError(f"records must come from a single encoder, got {sorted(encoder_ids)}")
    n = mask.n
    values = np.full((n, n), np.nan)
    defined = mask.defined_mask()
    for i in range(n):
        values[i, i] = 1.0
        for j in range(i + 1, n):
            if defined[i, j]:
                sim = cosine_similarity(by_id[mask.usage_ids[i]], by_id[mask.usage_ids[j]])
                values[i, j] = sim
                values[j, i] = sim
    return SimilarityMatrix(word=word, usage_ids=list(mask.usage_ids), values=values, source=encoder_ids.pop())

"""Corpus preparation: normalization, sentence splitting, decade bucketing,
and emission of pre-training text files.

The output format is one sentence per line, documents separated by exactly
one blank line, no trailing blank line. All operations are deterministic
given their inputs and a seed, so output files are byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "RawDocument",
    "Sentence",
    "DecadeLabel",
    "CorpusManifest",
    "normalize_text",
    "rejoin_contractions",
    "split_sentences",
    "bucket_by_decade",
    "select_by_keyword",
    "write_pretraining_corpus",
    "read_pretraining_corpus",
    "load_documents",
    "prepare_document",
]

# Clitic tokens that COHA-style tokenization splits off and that we glue
# back onto the preceding token (Penn-style inventory).
CLITICS = ("n't", "'s", "'re", "'ve", "'ll", "'d", "'m")

# Abbreviation stems (period-less, lowercase) that do not end a sentence.
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "vs", "etc",
        "inc", "co", "corp", "capt", "gen", "gov", "rev", "sen", "rep",
    }
)

_SENTENCE_FINAL = {".", "!", "?"}


@dataclass(frozen=True)
class DecadeLabel:
    """A decade [start_year, start_year + 9]."""

    start_year: int

    def __post_init__(self) -> None:
        if self.start_year % 10 != 0:
            raise ValueError(f"decade start year must be divisible by 10: {self.start_year}")

    @classmethod
    def of_year(cls, year: int) -> "DecadeLabel":
        return cls((year // 10) * 10)

    def contains(self, year: int) -> bool:
        return self.start_year <= year <= self.start_year + 9

    @property
    def label(self) -> str:
        return f"{self.start_year}s"

    def __str__(self) -> str:
        return self.label


@dataclass
class RawDocument:
    doc_id: str
    year: int
    text: str
    genre: Optional[str] = None


@dataclass
class Sentence:
    doc_id: str
    index: int
    tokens: list[str]
    decade: DecadeLabel

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("sentence tokens must be non-empty")
        if self.index < 0:
            raise ValueError("sentence index must be non-negative")
        for tok in self.tokens:
            if any(ch.isspace() for ch in tok):
                raise ValueError(f"token contains whitespace: {tok!r}")


@dataclass
class CorpusManifest:
    """Partition of documents into decade buckets plus bookkeeping."""

    buckets: dict[int, list[str]]  # decade start year -> sorted doc ids
    token_counts: dict[int, int]  # decade start year -> token count
    excluded: list[str] = field(default_factory=list)
    seed: Optional[int] = None
    config_digest: Optional[str] = None
    content_digest: Optional[str] = None

    def decade_of(self, doc_id: str) -> Optional[int]:
        for start, ids in self.buckets.items():
            if doc_id in ids:
                return start
        return None

    def all_doc_ids(self) -> list[str]:
        out: list[str] = []
        for start in sorted(self.buckets):
            out.extend(self.buckets[start])
        return out

    def to_json(self) -> dict:
        return {
            "buckets": {str(k): v for k, v in sorted(self.buckets.items())},
            "token_counts": {str(k): v for k, v in sorted(self.token_counts.items())},
            "excluded": sorted(self.excluded),
            "excluded_count": len(self.excluded),
            "seed": self.seed,
            "config_digest": self.config_digest,
            "content_digest": self.content_digest,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CorpusManifest":
        return cls(
            buckets={int(k): list(v) for k, v in data["buckets"].items()},
            token_counts={int(k): int(v) for k, v in data["token_counts"].items()},
            excluded=list(data.get("excluded", [])),
            seed=data.get("seed"),
            config_digest=data.get("config_digest"),
            content_digest=data.get("content_digest"),
        )

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "CorpusManifest":
        return cls.from_json(json.loads(path.read_text(encoding="utf-8")))


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_text(raw: str) -> str:
    """Lowercase, strip combining accent marks, split punctuation off words.

    Apostrophes flanked by alphanumerics are kept in place so contraction
    tokens (n't, 's, ...) and possessives survive; everything else in the
    punctuation category gets padded with spaces. Idempotent.
    """
    decomposed = unicodedata.normalize("NFD", raw)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    lowered = stripped.lower()
    out: list[str] = []
    n = len(lowered)
    for i, ch in enumerate(lowered):
        if _is_punct(ch):
            word_internal = (
                ch == "'"
                and i > 0
                and i + 1 < n
                and lowered[i - 1].isalnum()
                and lowered[i + 1].isalnum()
            )
            if word_internal:
                out.append(ch)
            else:
                out.append(f" {ch} ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def rejoin_contractions(text: str) -> str:
    """Glue split clitic tokens back onto the preceding token.

    "do n't" -> "don't"; also handles the fully split form where
    normalization detached the apostrophe ("we ' ll" -> "we'll"). A clitic
    with no preceding token is left alone. Idempotent on its own output.
    """
    tokens = text.split()
    out: list[str] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in CLITICS and out:
            out[-1] = out[-1] + tok
        elif (
            tok == "'"
            and out
            and i + 1 < len(tokens)
            and "'" + tokens[i + 1] in CLITICS
        ):
            out[-1] = out[-1] + "'" + tokens[i + 1]
            i += 1
        else:
            out.append(tok)
        i += 1
    return " ".join(out)


def split_sentences(
    doc: RawDocument,
    abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
) -> list[Sentence]:
    """Rule-based split of a normalized document into sentences.

    A boundary follows a sentence-final punctuation token (or a token
    ending in one) unless the word it terminates is a known abbreviation.
    Token concatenation over all sentences reproduces the input stream.
    A document with no alphabetic content yields no sentences.
    """
    tokens = doc.text.split()
    if not any(any(ch.isalpha() for ch in tok) for tok in tokens):
        return []
    decade = DecadeLabel.of_year(doc.year)
    sentences: list[Sentence] = []
    current: list[str] = []

    def flush() -> None:
        if current:
            sentences.append(Sentence(doc.doc_id, len(sentences), list(current), decade))
            current.clear()

    for tok in tokens:
        current.append(tok)
        if tok in _SENTENCE_FINAL:
            prev = current[-2] if len(current) >= 2 else ""
            if prev.rstrip(".").lower() not in abbreviations:
                flush()
        elif len(tok) > 1 and tok[-1] in _SENTENCE_FINAL:
            if tok[:-1].lower() not in abbreviations:
                flush()
    flush()
    return sentences


def prepare_document(doc: RawDocument) -> RawDocument:
    """Normalize + rejoin a raw document's text (convenience pipeline step)."""
    return RawDocument(
        doc_id=doc.doc_id,
        year=doc.year,
        text=rejoin_contractions(normalize_text(doc.text)),
        genre=doc.genre,
    )


def bucket_by_decade(
    docs: Iterable[RawDocument],
    decade_range: tuple[DecadeLabel, DecadeLabel],
) -> CorpusManifest:
    """Partition documents into decade buckets; out-of-range docs are
    excluded and recorded, not an error."""
    start, end = decade_range
    if start.start_year > end.start_year:
        raise ValueError("decade range start must not exceed end")
    buckets: dict[int, list[str]] = {}
    token_counts: dict[int, int] = {}
    excluded: list[str] = []
    seen: set[str] = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise ValueError(f"duplicate doc_id: {doc.doc_id}")
        seen.add(doc.doc_id)
        if start.start_year <= doc.year <= end.start_year + 9:
            decade = DecadeLabel.of_year(doc.year).start_year
            buckets.setdefault(decade, []).append(doc.doc_id)
            token_counts[decade] = token_counts.get(decade, 0) + len(doc.text.split())
        else:
            excluded.append(doc.doc_id)
    for ids in buckets.values():
        ids.sort()
    return CorpusManifest(buckets=buckets, token_counts=token_counts, excluded=excluded)


def select_by_keyword(docs: Iterable[RawDocument], keyword: str) -> list[RawDocument]:
    """Documents whose normalized token stream contains the keyword as a
    whole token, original order preserved."""
    if not keyword:
        raise ValueError("keyword must be non-empty")
    if keyword != normalize_text(keyword) or " " in keyword:
        raise ValueError(f"keyword must be a normalized single token: {keyword!r}")
    selected = []
    for doc in docs:
        tokens = rejoin_contractions(normalize_text(doc.text)).split()
        if keyword in tokens:
            selected.append(doc)
    return selected


def _decade_filename(start_year: int) -> str:
    return f"coha_{start_year}s.txt"


def write_pretraining_corpus(
    manifest: CorpusManifest,
    sentences_by_doc: dict[str, list[Sentence]],
    out_dir: Path,
    truncate_fraction: float = 0.0,
    seed: int = 0,
) -> dict[int, Path]:
    """Emit one pre-training file per decade.

    A deterministic pseudo-random ``truncate_fraction`` of sentences is
    shortened to a uniform prefix of [1, len-1] tokens; single-token
    sentences are never truncated (a truncated sentence must be a strict
    prefix). Byte-identical output for identical (inputs, seed).
    """
    if not 0.0 <= truncate_fraction <= 1.0:
        raise ValueError("truncate_fraction must be in [0, 1]")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths: dict[int, Path] = {}
    for start in sorted(manifest.buckets):
        blocks: list[str] = []
        for doc_id in sorted(manifest.buckets[start]):
            if doc_id not in sentences_by_doc:
                raise KeyError(f"manifest references missing document: {doc_id}")
            lines: list[str] = []
            for sent in sentences_by_doc[doc_id]:
                tokens = sent.tokens
                if truncate_fraction > 0 and rng.random() < truncate_fraction and len(tokens) >= 2:
                    cut = int(rng.integers(1, len(tokens)))
                    tokens = tokens[:cut]
                lines.append(" ".join(tokens))
            if lines:
                blocks.append("\n".join(lines))
        path = out_dir / _decade_filename(start)
        path.write_text("\n\n".join(blocks) + "\n" if blocks else "", encoding="utf-8", newline="\n")
        paths[start] = path
    return paths


def read_pretraining_corpus(path: Path) -> list[list[list[str]]]:
    """Parse a pre-training file back into documents -> sentences -> tokens."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return []
    docs = []
    for block in text.rstrip("\n").split("\n\n"):
        docs.append([line.split() for line in block.split("\n") if line])
    return docs


_DOC_FILENAME_RE = re.compile(r"^doc_(\d{4})_(.+)\.txt$")


def load_documents(input_dir: Path, manifest_tsv: Optional[Path] = None) -> list[RawDocument]:
    """Load raw documents from a directory.

    With a TSV manifest (doc_id, year, genre, path), paths are resolved
    relative to the directory. Otherwise files named doc_<year>_<id>.txt
    are picked up directly.
    """
    input_dir = Path(input_dir)
    docs: list[RawDocument] = []
    if manifest_tsv is not None:
        for line_no, line in enumerate(Path(manifest_tsv).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"manifest line {line_no}: expected 4 tab-separated fields")
            doc_id, year, genre, rel = parts
            docs.append(
                RawDocument(
                    doc_id=doc_id,
                    year=int(year),
                    genre=genre or None,
                    text=(input_dir / rel).read_text(encoding="utf-8"),
                )
            )
    else:
        for path in sorted(input_dir.glob("doc_*.txt")):
            m = _DOC_FILENAME_RE.match(path.name)
            if not m:
                continue
            docs.append(
                RawDocument(
                    doc_id=m.group(2),
                    year=int(m.group(1)),
                    text=path.read_text(encoding="utf-8"),
                )
            )
    return docs


def corpus_digest(paths: Iterable[Path]) -> str:
    """Stable content digest over a set of corpus files."""
    h = hashlib.sha256()
    for path in sorted(Path(p) for p in paths):
        h.update(path.name.encode("utf-8"))
        h.update(b"\x00")
        h.update(path.read_bytes())
    return h.hexdigest()

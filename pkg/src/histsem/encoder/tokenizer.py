"""Small fixed subword vocabulary and greedy longest-match tokenizer.

The vocabulary ships with the package: special tokens, all ASCII letters,
digits and common punctuation (standalone and as ## continuations), a few
frequent suffix pieces, and a couple hundred common English word forms.
Any word composed of covered characters tokenizes; anything else becomes
[UNK].
"""

from __future__ import annotations

import string

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
SPECIAL_TOKENS = [PAD, UNK, CLS, SEP, MASK]

_PUNCT = list(".,!?'\"-:;()")

_SUFFIX_PIECES = ["##s", "##es", "##ed", "##ing", "##er", "##est", "##ly", "##y", "##'s", "##n't"]

_COMMON_WORDS = """
the a an and or of to in on at by for with from as is was are were be been
it he she they we you i his her their our this that these those not no but
if then when where who what which one two three old new man men woman women
people time day year years city town country said went came left made make
take took see saw go come get got has have had do did does will would can
could may must very more most some all many much into over under about after
before between through down up out long great little good small large
coach stage express horse horses wheel wheels road travel train sport team
player game bag leather brand river water boat fish stream bank engine motor
machine metal steel wire signal mirror glass light energy virus disease
blood cell card brick wall stone house leaf tree green sphere ball round
net disk virtual federal compact optical spine book page mr mrs dr street
driver passenger journey luggage handbag pumpkin cinderella football
basketball practice season win lost race speed fast slow north south east
west rain sun wind snow fire cold warm red blue black white gold silver
paper letter word sentence story news market money trade work school child
children family friend king queen war peace army ship sea land farm field
""".split()


def _build_vocab() -> list[str]:
    vocab = list(SPECIAL_TOKENS)
    chars = list(string.ascii_lowercase) + list(string.digits) + _PUNCT
    vocab.extend(chars)
    vocab.extend("##" + c for c in chars)
    vocab.extend(_SUFFIX_PIECES)
    seen = set(vocab)
    for word in _COMMON_WORDS:
        if word not in seen:
            vocab.append(word)
            seen.add(word)
    return vocab


VOCAB: list[str] = _build_vocab()


class WordPieceTokenizer:
    """Greedy longest-match subword tokenizer over the fixed vocabulary."""

    def __init__(self, vocab: list[str] = VOCAB):
        self.vocab = list(vocab)
        self.token_to_id = {tok: i for i, tok in enumerate(self.vocab)}
        self.pad_id = self.token_to_id[PAD]
        self.unk_id = self.token_to_id[UNK]
        self.cls_id = self.token_to_id[CLS]
        self.sep_id = self.token_to_id[SEP]
        self.mask_id = self.token_to_id[MASK]
        self.special_ids = {self.token_to_id[t] for t in SPECIAL_TOKENS}

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def wordpiece(self, word: str) -> list[str]:
        """Split one whitespace token into subword pieces ([UNK] if any
        stretch is uncoverable)."""
        if word in self.token_to_id:
            return [word]
        pieces: list[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            piece = None
            while end > start:
                candidate = word[start:end]
                if start > 0:
                    candidate = "##" + candidate
                if candidate in self.token_to_id:
                    piece = candidate
                    break
                end -= 1
            if piece is None:
                return [UNK]
            pieces.append(piece)
            start = end
        return pieces

    def encode_words(self, words: list[str]) -> tuple[list[int], list[tuple[int, int]]]:
        """Subtoken ids plus per-word (start, end) spans into that id list."""
        ids: list[int] = []
        spans: list[tuple[int, int]] = []
        for word in words:
            pieces = self.wordpiece(word)
            start = len(ids)
            ids.extend(self.token_to_id[p] for p in pieces)
            spans.append((start, len(ids)))
        return ids, spans

    def decode(self, ids: list[int]) -> list[str]:
        return [self.vocab[i] for i in ids]


TOKENIZER = WordPieceTokenizer()

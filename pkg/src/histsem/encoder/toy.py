"""Desk-scale trainable masked-LM encoder (tiny transformer, torch CPU).

Training runs the two classic objectives: masked-token prediction (each
non-special subtoken selected independently with probability
``masked_lm_prob``, capped at ``max_predictions_per_seq``) and
next-sentence prediction over consecutive sentence pairs, with 50% of
pairs swapped for a random sentence from another document. Optimization is
plain gradient descent with linear learning-rate warmup. Everything is
deterministic under a fixed seed.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import torch
from torch import nn

from ..corpus import corpus_digest, read_pretraining_corpus
from .checkpoint import TOY, Checkpoint
from .config import EncoderConfig
from .states import HiddenStates
from .tokenizer import TOKENIZER

_IGNORE = -100


class _Block(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        heads = 4 if dim % 4 == 0 else 1
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.ln1 = nn.LayerNorm(dim)
        self.ln2 = nn.LayerNorm(dim)
        self.ff = nn.Sequential(nn.Linear(dim, 2 * dim), nn.GELU(), nn.Linear(2 * dim, dim))

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        attn_out, _ = self.attn(x, x, x, key_padding_mask=pad_mask, need_weights=False)
        x = self.ln1(x + attn_out)
        return self.ln2(x + self.ff(x))


class TinyEncoderModel(nn.Module):
    def __init__(self, config: EncoderConfig, vocab_size: int = TOKENIZER.vocab_size):
        super().__init__()
        dim = config.hidden_dim
        self.config = config
        self.tok_emb = nn.Embedding(vocab_size, dim, padding_idx=TOKENIZER.pad_id)
        self.pos_emb = nn.Embedding(config.max_seq_length, dim)
        self.seg_emb = nn.Embedding(2, dim)
        self.emb_norm = nn.LayerNorm(dim)
        self.blocks = nn.ModuleList(_Block(dim) for _ in range(config.num_layers))
        self.mlm_head = nn.Linear(dim, vocab_size)
        self.nsp_head = nn.Linear(dim, 2)

    def hidden_states(self, ids: torch.Tensor, segs: torch.Tensor, pad_mask: torch.Tensor) -> list[torch.Tensor]:
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        x = self.emb_norm(self.tok_emb(ids) + self.pos_emb(positions) + self.seg_emb(segs))
        states = []
        for block in self.blocks:
            x = block(x, pad_mask)
            states.append(x)
        return states


def _build_model(config: EncoderConfig, parameters: Optional[dict] = None) -> TinyEncoderModel:
    torch.manual_seed(config.seed)
    model = TinyEncoderModel(config)
    if parameters is not None:
        state = {k: torch.from_numpy(np.asarray(v, dtype=np.float32)) for k, v in parameters.items()}
        model.load_state_dict(state)
    model.eval()
    return model


def _params_of(model: TinyEncoderModel) -> dict[str, np.ndarray]:
    return {k: v.detach().numpy().astype(np.float32).copy() for k, v in model.state_dict().items()}


def fresh_toy_checkpoint(config: EncoderConfig) -> Checkpoint:
    """Deterministically initialized untrained toy encoder."""
    model = _build_model(config)
    return Checkpoint(
        model_type=TOY,
        config=config,
        parameters=_params_of(model),
        provenance=[{"kind": "fresh-init", "seed": config.seed}],
    )


def toy_encode(checkpoint: Checkpoint, tokens: list[str]) -> HiddenStates:
    if not tokens:
        raise ValueError("cannot encode an empty token list")
    cfg = checkpoint.config
    ids, spans = TOKENIZER.encode_words(tokens)
    limit = cfg.max_seq_length - 2
    if len(ids) > limit:
        ids = ids[:limit]
    seq = [TOKENIZER.cls_id] + ids + [TOKENIZER.sep_id]
    token_spans = {w: (s + 1, e + 1) for w, (s, e) in enumerate(spans) if e <= len(ids)}
    model = _build_model(cfg, checkpoint.parameters)
    with torch.no_grad():
        ids_t = torch.tensor([seq], dtype=torch.long)
        segs = torch.zeros_like(ids_t)
        pad = torch.zeros_like(ids_t, dtype=torch.bool)
        states = model.hidden_states(ids_t, segs, pad)
    layers = [s[0].numpy().astype(np.float64) for s in states]
    return HiddenStates(layers=layers, token_spans=token_spans)


def _load_tokenized_docs(corpus_files: Iterable[Path]) -> list[list[list[int]]]:
    docs: list[list[list[int]]] = []
    for path in sorted(Path(p) for p in corpus_files):
        for doc in read_pretraining_corpus(path):
            tokenized = []
            for sent in doc:
                ids, _ = TOKENIZER.encode_words(sent)
                if ids:
                    tokenized.append(ids)
            if tokenized:
                docs.append(tokenized)
    return docs


def _build_instances(docs: list[list[list[int]]], rng: np.random.Generator) -> list[tuple[list[int], list[int], int]]:
    """(segment_a, segment_b, is_next) triples with 50% random negatives."""
    all_sents = [(d, i) for d, doc in enumerate(docs) for i in range(len(doc))]
    instances = []
    for d, doc in enumerate(docs):
        pairs = [(doc[i], doc[i + 1]) for i in range(len(doc) - 1)]
        if not pairs:
            pairs = [(doc[0], doc[0])]  # single-sentence doc: degenerate positive
        for a, b in pairs:
            if len(all_sents) > 1 and rng.random() < 0.5:
                while True:
                    rd, ri = all_sents[int(rng.integers(len(all_sents)))]
                    if rd != d or len(docs) == 1:
                        break
                instances.append((a, docs[rd][ri], 0))
            else:
                instances.append((a, b, 1))
    return instances


def _make_sequence(a: list[int], b: list[int], max_len: int) -> tuple[list[int], list[int]]:
    a, b = list(a), list(b)
    while len(a) + len(b) + 3 > max_len:
        if len(a) >= len(b):
            a.pop()
        else:
            b.pop()
    ids = [TOKENIZER.cls_id] + a + [TOKENIZER.sep_id] + b + [TOKENIZER.sep_id]
    segs = [0] * (len(a) + 2) + [1] * (len(b) + 1)
    return ids, segs


def mask_sequence(
    ids: list[int],
    config: EncoderConfig,
    rng: np.random.Generator,
) -> tuple[list[int], list[int]]:
    """Select non-special positions i.i.d. with masked_lm_prob (capped at
    max_predictions_per_seq), replace them with [MASK], and return
    (masked ids, per-position labels with _IGNORE elsewhere)."""
    candidates = [i for i, t in enumerate(ids) if t not in TOKENIZER.special_ids]
    picks = [i for i in candidates if rng.random() < config.masked_lm_prob]
    if len(picks) > config.max_predictions_per_seq:
        keep = rng.choice(len(picks), size=config.max_predictions_per_seq, replace=False)
        picks = [picks[k] for k in sorted(keep)]
    masked = list(ids)
    labels = [_IGNORE] * len(ids)
    for i in picks:
        labels[i] = ids[i]
        masked[i] = TOKENIZER.mask_id
    return masked, labels


def train_toy(
    checkpoint: Optional[Checkpoint],
    corpus_files: Iterable[Path],
    config: EncoderConfig,
    provenance_extra: Optional[dict] = None,
) -> Checkpoint:
    """Continue (or start) masked-LM + next-sentence training.

    With num_train_steps == 0 the input checkpoint is returned unchanged
    (a fresh-init checkpoint when none was given).
    """
    corpus_files = [Path(p) for p in corpus_files]
    if checkpoint is None:
        checkpoint = fresh_toy_checkpoint(config)
    elif checkpoint.model_type != TOY:
        raise ValueError("only toy checkpoints are trainable")
    if config.num_train_steps == 0:
        return checkpoint

    docs = _load_tokenized_docs(corpus_files)
    if not docs:
        raise ValueError("training corpus is empty")
    rng = np.random.default_rng(config.seed)
    instances = _build_instances(docs, rng)

    model = _build_model(config, checkpoint.parameters)
    model.train()
    optimizer = torch.optim.SGD(model.parameters(), lr=config.learning_rate)
    mlm_loss_fn = nn.CrossEntropyLoss(ignore_index=_IGNORE)
    nsp_loss_fn = nn.CrossEntropyLoss()

    for step in range(config.num_train_steps):
        warmup = max(1, config.num_warmup_steps)
        lr = config.learning_rate * min(1.0, (step + 1) / warmup)
        for group in optimizer.param_groups:
            group["lr"] = lr

        batch_idx = rng.integers(0, len(instances), size=config.train_batch_size)
        seqs, seg_lists, label_lists, nsp_labels = [], [], [], []
        for idx in batch_idx:
            a, b, is_next = instances[int(idx)]
            ids, segs = _make_sequence(a, b, config.max_seq_length)
            masked, labels = mask_sequence(ids, config, rng)
            seqs.append(masked)
            seg_lists.append(segs)
            label_lists.append(labels)
            nsp_labels.append(is_next)
        max_len = max(len(s) for s in seqs)
        pad = TOKENIZER.pad_id
        ids_t = torch.tensor([s + [pad] * (max_len - len(s)) for s in seqs], dtype=torch.long)
        segs_t = torch.tensor([s + [0] * (max_len - len(s)) for s in seg_lists], dtype=torch.long)
        labels_t = torch.tensor(
            [s + [_IGNORE] * (max_len - len(s)) for s in label_lists], dtype=torch.long
        )
        pad_mask = ids_t == pad
        nsp_t = torch.tensor(nsp_labels, dtype=torch.long)

        states = model.hidden_states(ids_t, segs_t, pad_mask)
        top = states[-1]
        mlm_logits = model.mlm_head(top)
        nsp_logits = model.nsp_head(top[:, 0])
        loss = nsp_loss_fn(nsp_logits, nsp_t)
        if (labels_t != _IGNORE).any():
            loss = loss + mlm_loss_fn(mlm_logits.reshape(-1, mlm_logits.shape[-1]), labels_t.reshape(-1))
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

    model.eval()
    entry = {
        "kind": "train",
        "corpus_digest": corpus_digest(corpus_files),
        "files": [p.name for p in sorted(corpus_files)],
        "steps": config.num_train_steps,
        "seed": config.seed,
    }
    if provenance_extra:
        entry.update(provenance_extra)
    return Checkpoint(
        model_type=TOY,
        config=checkpoint.config,
        parameters=_params_of(model),
        provenance=checkpoint.provenance + [entry],
    )


def continue_pretraining(
    base: Checkpoint,
    decade_corpora: Iterable[Path],
    config: EncoderConfig,
) -> Checkpoint:
    """train_toy starting from ``base`` over the given per-decade files;
    provenance records the decade coverage."""
    files = [Path(p) for p in decade_corpora]
    if not files:
        raise ValueError("continued pre-training needs at least one decade corpus")
    if base.config.hidden_dim != config.hidden_dim or base.config.num_layers != config.num_layers:
        raise ValueError("base checkpoint dimensions do not match config")
    decades = []
    for path in sorted(files):
        stem = path.stem
        digits = "".join(ch for ch in stem if ch.isdigit())
        if digits:
            decades.append(int(digits))
    extra = {"kind": "continue-pretraining", "decades": sorted(decades), "num_decades": len(files)}
    return train_toy(base, files, config, provenance_extra=extra)


def masked_prediction_accuracy(checkpoint: Checkpoint, tokens: list[str]) -> float:
    """Mask each subtoken of the sentence in turn and score argmax recovery."""
    cfg = checkpoint.config
    ids, _ = TOKENIZER.encode_words(tokens)
    seq = [TOKENIZER.cls_id] + ids + [TOKENIZER.sep_id]
    model = _build_model(cfg, checkpoint.parameters)
    hits = 0
    with torch.no_grad():
        for pos in range(1, len(seq) - 1):
            masked = list(seq)
            masked[pos] = TOKENIZER.mask_id
            ids_t = torch.tensor([masked], dtype=torch.long)
            segs = torch.zeros_like(ids_t)
            pad = torch.zeros_like(ids_t, dtype=torch.bool)
            top = model.hidden_states(ids_t, segs, pad)[-1]
            pred = int(model.mlm_head(top[0, pos]).argmax())
            hits += int(pred == seq[pos])
    return hits / len(ids)

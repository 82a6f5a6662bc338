"""Command-line orchestration of the pipeline.

Exit codes: 0 success, 2 malformed input or usage error, 3 I/O failure,
4 data mismatch between inputs (e.g. usage ids that do not line up).
Every report embeds the seed, a digest of the run configuration, and
digests of the input files, and reruns with identical inputs and seed are
byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__, corpus as corpus_mod, stats, usage as usage_mod
from .corpus import CorpusManifest, DecadeLabel, Sentence, corpus_digest
from .encoder import (
    Checkpoint,
    EncoderConfig,
    ExternalEncoderAdapter,
    batch_extract,
    continue_pretraining,
    new_mock_checkpoint,
    read_embeddings,
    train_toy,
)
from .stats import cosine_similarity, embedding_shift, mantel_test, pca_project
from .usage import build_human_matrix, build_model_matrix, dups_usages, load_dups

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MISMATCH = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _default_seed() -> int:
    return int(os.environ.get("HISTSEM_SEED", "0"))


def _file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _run_digest(args: dict) -> str:
    return hashlib.sha256(json.dumps(args, sort_keys=True, default=str).encode("utf-8")).hexdigest()


def _meta(seed: int, config: dict, input_digests: dict) -> dict:
    return {
        "tool": f"histsem {__version__}",
        "seed": seed,
        "config_digest": _run_digest(config),
        "input_digests": input_digests,
    }


def _meta_comment_lines(meta: dict) -> list[str]:
    lines = [f"# tool: {meta['tool']}", f"# seed: {meta['seed']}", f"# config_digest: {meta['config_digest']}"]
    for name in sorted(meta["input_digests"]):
        lines.append(f"# input {name}: {meta['input_digests'][name]}")
    return lines


def _parse_decades(spec: str) -> tuple[DecadeLabel, DecadeLabel]:
    try:
        lo, hi = spec.split(":")
        return DecadeLabel(int(lo)), DecadeLabel(int(hi))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"bad --decades value {spec!r}; expected like 1910:2000") from exc


def _corpus_files(corpus_dir: Path) -> list[Path]:
    files = sorted(Path(corpus_dir).glob("coha_*s.txt"))
    if not files:
        raise CliError(EXIT_USAGE, f"no pre-training files (coha_*s.txt) under {corpus_dir}")
    return files


def _load_corpus_sentences(corpus_dir: Path) -> list[Sentence]:
    """Sentences from per-decade pre-training files, decades from filenames."""
    sentences = []
    for path in _corpus_files(corpus_dir):
        decade = DecadeLabel(int("".join(ch for ch in path.stem if ch.isdigit())))
        for doc_idx, doc in enumerate(corpus_mod.read_pretraining_corpus(path)):
            doc_id = f"{path.stem}:{doc_idx}"
            for sent_idx, tokens in enumerate(doc):
                sentences.append(Sentence(doc_id, sent_idx, tokens, decade))
    return sentences


# --- commands ---------------------------------------------------------------


def cmd_preprocess(args: argparse.Namespace) -> int:
    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        raise CliError(EXIT_USAGE, f"input directory does not exist: {in_dir}")
    decades = _parse_decades(args.decades)
    docs = corpus_mod.load_documents(in_dir, Path(args.manifest) if args.manifest else None)
    if not docs:
        raise CliError(EXIT_USAGE, f"no documents found under {in_dir}")
    if args.keyword:
        docs = corpus_mod.select_by_keyword(docs, args.keyword)
    docs = [corpus_mod.prepare_document(d) for d in docs]
    manifest = corpus_mod.bucket_by_decade(docs, decades)
    kept = set(manifest.all_doc_ids())
    sentences = {d.doc_id: corpus_mod.split_sentences(d) for d in docs if d.doc_id in kept}
    out_dir = Path(args.out_dir)
    paths = corpus_mod.write_pretraining_corpus(
        manifest, sentences, out_dir, truncate_fraction=args.truncate_fraction, seed=args.seed
    )
    manifest.seed = args.seed
    manifest.config_digest = _run_digest(
        {
            "command": "preprocess",
            "decades": args.decades,
            "keyword": args.keyword,
            "truncate_fraction": args.truncate_fraction,
            "seed": args.seed,
        }
    )
    manifest.content_digest = corpus_digest(paths.values())
    manifest.save(out_dir / "manifest.json")
    print(f"wrote {len(paths)} decade files and manifest.json to {out_dir}")
    return EXIT_OK


def _toy_config(args: argparse.Namespace, steps: int) -> EncoderConfig:
    return EncoderConfig(
        max_seq_length=args.max_seq_length,
        max_predictions_per_seq=min(20, args.max_seq_length),
        masked_lm_prob=0.15,
        train_batch_size=args.batch_size,
        num_warmup_steps=args.warmup,
        num_train_steps=steps,
        learning_rate=args.lr,
        hidden_dim=args.hidden_dim,
        num_layers=args.layers,
        seed=args.seed,
    )


def cmd_pretrain_toy(args: argparse.Namespace) -> int:
    files = _corpus_files(Path(args.corpus))
    config = _toy_config(args, args.steps)
    if args.base:
        base = Checkpoint.load(Path(args.base))
        if args.steps == 0:
            ckpt = base
        else:
            ckpt = continue_pretraining(base, files, config)
    else:
        ckpt = train_toy(None, files, config)
    ckpt.save(Path(args.out))
    print(f"checkpoint {ckpt.encoder_id} -> {args.out}")
    return EXIT_OK


def _select_checkpoint(args: argparse.Namespace) -> Checkpoint:
    if args.ckpt:
        return Checkpoint.load(Path(args.ckpt))
    if args.encoder == "mock":
        config = EncoderConfig(hidden_dim=args.hidden_dim, num_layers=args.layers, seed=args.seed)
        return new_mock_checkpoint(config)
    raise CliError(EXIT_USAGE, "need --ckpt, or --encoder mock with dimensions")


def cmd_extract(args: argparse.Namespace) -> int:
    if args.dups:
        dataset = load_dups(Path(args.dups))
        usages = dups_usages(dataset, args.word if args.word else None)
        input_digests = {"dups": _file_digest(Path(args.dups))}
    else:
        if not args.corpus or not args.word:
            raise CliError(EXIT_USAGE, "need --corpus and --word (or --dups)")
        sentences = _load_corpus_sentences(Path(args.corpus))
        usages = usage_mod.find_usages(sentences, args.word)
        input_digests = {"corpus": corpus_digest(_corpus_files(Path(args.corpus)))}
    if args.encoder == "external":
        if not args.adapter_cmd:
            raise CliError(EXIT_USAGE, "--encoder external needs --adapter-cmd")
        command = shlex.split(args.adapter_cmd)
        adapter = ExternalEncoderAdapter(
            command, encoder_id=f"external-{_run_digest({'cmd': command})[:16]}", last_k=args.last_k
        )
        records = adapter.encode_usages(usages)
        encoder_id = adapter.encoder_id
    else:
        ckpt = _select_checkpoint(args)
        records = batch_extract(ckpt, usages)
        encoder_id = ckpt.encoder_id
    if not records:
        print(f"warning: no usages found for word {args.word!r}", file=sys.stderr)
    meta = _meta(args.seed, {"command": "extract", "word": args.word, "encoder_id": encoder_id}, input_digests)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
    print(f"wrote {len(records)} embedding records to {out}")
    return EXIT_OK


def cmd_eval_dups(args: argparse.Namespace) -> int:
    dataset = load_dups(Path(args.dups))
    records = read_embeddings(Path(args.emb))
    rows = []
    for word in dataset.words:
        human = build_human_matrix(dataset, word)
        try:
            model = build_model_matrix(records, word, human)
        except ValueError as exc:
            raise CliError(EXIT_MISMATCH, f"word {word!r}: {exc}") from exc
        result = mantel_test(human, model, permutations=args.perms, seed=args.seed, method="sampled")
        rows.append((word, result.rho, result.p_value))
    meta = _meta(
        args.seed,
        {"command": "eval-dups", "perms": args.perms},
        {"dups": _file_digest(Path(args.dups)), "emb": _file_digest(Path(args.emb))},
    )
    out = Path(args.out) if args.out else None
    if args.format == "json":
        payload = {"_meta": meta, "results": [{"word": w, "rho": r, "p": p} for w, r, p in rows]}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = _meta_comment_lines(meta)
        lines.append("word\trho\tp")
        lines.extend(f"{w}\t{r:.4f}\t{p:.4f}" for w, r, p in rows)
        text = "\n".join(lines) + "\n"
    if out:
        out.write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _pair_sims(records) -> tuple[str, dict]:
    by_id = {r.usage_id: r for r in records}
    ids = sorted(by_id)
    sims = {}
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            sims[(a, b)] = cosine_similarity(by_id[a].vector, by_id[b].vector)
    word = records[0].word if records else ""
    return word, sims


def cmd_shift_report(args: argparse.Namespace) -> int:
    old_records = read_embeddings(Path(args.old))
    new_records = read_embeddings(Path(args.new))
    old_ids = {r.usage_id for r in old_records}
    new_ids = {r.usage_id for r in new_records}
    shared = old_ids & new_ids
    if not shared:
        raise CliError(EXIT_MISMATCH, "embedding stores have disjoint usage ids")
    word, sims_old = _pair_sims([r for r in old_records if r.usage_id in shared])
    _, sims_new = _pair_sims([r for r in new_records if r.usage_id in shared])
    report = embedding_shift(sims_old, sims_new, word=word)
    meta = _meta(
        args.seed,
        {"command": "shift-report"},
        {"old": _file_digest(Path(args.old)), "new": _file_digest(Path(args.new))},
    )
    payload = {"_meta": meta, **report.to_json()}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    print(
        f"average shift {report.average:+.4f}, max increase {report.max_increase[1]:+.4f}, "
        f"max decrease {report.max_decrease[1]:+.4f}"
    )
    return EXIT_OK


def _svg_scatter(points: list[tuple[str, float, float, str]], meta: dict) -> str:
    width, height, pad = 640, 480, 40
    xs = [p[1] for p in points]
    ys = [p[2] for p in points]
    span_x = max(xs) - min(xs) or 1.0
    span_y = max(ys) - min(ys) or 1.0

    def sx(x: float) -> float:
        return pad + (x - min(xs)) / span_x * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - (y - min(ys)) / span_y * (height - 2 * pad)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- seed: {meta['seed']} config_digest: {meta['config_digest']} -->",
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for label, x, y, color in points:
        cx, cy = sx(x), sy(y)
        lines.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{color}"/>')
        lines.append(
            f'<text x="{cx + 4:.2f}" y="{cy - 4:.2f}" font-size="10" '
            f'font-family="sans-serif" fill="{color}">{label}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_pca_plot(args: argparse.Namespace) -> int:
    if args.dims != 2:
        raise CliError(EXIT_USAGE, "plots are 2-D; use the library API for other dimensions")
    base_records = read_embeddings(Path(args.emb))
    if not base_records:
        raise CliError(EXIT_USAGE, f"no embedding records in {args.emb}")
    input_digests = {"emb": _file_digest(Path(args.emb))}
    labels = [str(i + 1) for i in range(len(base_records))]
    vectors = [r.vector for r in base_records]
    colors = ["#1f77b4"] * len(base_records)
    if args.emb_new:
        new_records = read_embeddings(Path(args.emb_new))
        by_id = {r.usage_id: r for r in new_records}
        missing = [r.usage_id for r in base_records if r.usage_id not in by_id]
        if missing:
            raise CliError(EXIT_MISMATCH, f"retrained store missing usage ids: {missing}")
        for i, rec in enumerate(base_records):
            labels.append(f"{i + 1}_new")
            vectors.append(by_id[rec.usage_id].vector)
            colors.append("#d62728")
        input_digests["emb_new"] = _file_digest(Path(args.emb_new))
    projection = pca_project(np.array(vectors), d=2)
    meta = _meta(args.seed, {"command": "pca-plot"}, input_digests)
    csv_lines = _meta_comment_lines(meta)
    csv_lines.append("label,x,y")
    points = []
    for label, coord, color in zip(labels, projection.coordinates, colors):
        csv_lines.append(f"{label},{coord[0]:.8f},{coord[1]:.8f}")
        points.append((label, float(coord[0]), float(coord[1]), color))
    Path(args.out_csv).write_text("\n".join(csv_lines) + "\n", encoding="utf-8", newline="\n")
    Path(args.out_svg).write_text(_svg_scatter(points, meta), encoding="utf-8", newline="\n")
    print(f"wrote {args.out_csv} and {args.out_svg}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="histsem", description=__doc__)
    parser.add_argument("--jobs", type=int, default=1, help="parallelism bound (currently serial)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize documents and emit per-decade corpus files")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--manifest", help="optional TSV manifest (doc_id, year, genre, path)")
    p.add_argument("--decades", default="1910:2000")
    p.add_argument("--keyword", help="keep only documents containing this token")
    p.add_argument("--truncate-fraction", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("pretrain-toy", help="train or continue the toy encoder")
    p.add_argument("--base", help="base checkpoint to continue from (omit for fresh init)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--max-seq-length", type=int, default=64)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_pretrain_toy)

    p = sub.add_parser("extract", help="extract focus-word embeddings into a JSONL store")
    p.add_argument("--word")
    p.add_argument("--corpus")
    p.add_argument("--dups", help="extract for DUPS snippet usages instead of a corpus")
    p.add_argument("--ckpt")
    p.add_argument("--encoder", choices=["toy", "mock", "external"], default="toy")
    p.add_argument("--adapter-cmd", help="external encoder subprocess command")
    p.add_argument("--last-k", type=int, default=4)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval-dups", help="Mantel correlation of model vs human matrices")
    p.add_argument("--dups", required=True)
    p.add_argument("--emb", required=True)
    p.add_argument("--perms", type=int, default=999)
    p.add_argument("--out")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_eval_dups)

    p = sub.add_parser("shift-report", help="pairwise similarity shifts between two stores")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_shift_report)

    p = sub.add_parser("pca-plot", help="PCA coordinates CSV + SVG scatter")
    p.add_argument("--emb", required=True)
    p.add_argument("--emb-new", help="retrained store; points labelled <n>_new")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-svg", required=True)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_pca_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

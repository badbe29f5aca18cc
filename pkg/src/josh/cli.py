"""Command-line entry point: ``josh <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import TrainConfig
from .corpus import EmptyCorpusError
from .evaluation import classification_f1, topic_coherence
from .miner import classify_corpus, format_topics, mine_topics, read_labels, read_topics, write_labels, write_topics
from .model import ModelFormatError, export_embeddings, load_model, save_model
from .synth import SynthConfig, generate, write_synth
from .taxonomy import TaxonomyError
from .trainer import PROGRESS_HEADER, run

log = logging.getLogger("josh")


class CliError(Exception):
    pass


def _positive(kind):
    def conv(text):
        val = kind(text)
        if val <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val
    return conv


def _existing_file(text):
    if not Path(text).is_file():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return text


def _setup_logging() -> None:
    level = os.environ.get("JOSH_LOG", "info").upper()
    root = logging.getLogger("josh")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.setLevel(getattr(logging, level, logging.INFO))
    root.propagate = False


def cmd_train(args) -> int:
    try:
        cfg = TrainConfig(dim=args.dim, window=args.window, k=args.k, alpha0=args.alpha, margin=args.margin,
                          margin_intra=args.margin_intra, min_count=args.min_count,
                          epochs_per_mstep=args.epochs_per_step, tree_passes_per_mstep=args.tree_passes,
                          threads=args.threads, seed=args.seed, subsample=args.subsample,
                          warmup_mstep=not args.no_warmup)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    progress = logging.FileHandler(out / "progress.tsv", mode="w", encoding="utf-8")
    progress.setFormatter(logging.Formatter("%(message)s"))
    train_log = logging.getLogger("josh.train")
    train_log.addHandler(progress)
    try:
        topics, state = run(cfg, args.corpus, args.taxonomy)
    finally:
        train_log.removeHandler(progress)
        progress.close()
    save_model(state, out)
    write_topics(topics, out / "topics.tsv")
    write_topics(topics, out / "topics_scored.tsv", scored=True)
    sys.stdout.write(format_topics(topics))
    return 0


def cmd_mine(args) -> int:
    state = load_model(args.model)
    topics = mine_topics(state, args.k)
    text = format_topics(topics, scored=args.scored)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_classify(args) -> int:
    state = load_model(args.model)
    labels, summary = classify_corpus(state, level=args.level, leaves_only=args.leaves)
    write_labels(labels, args.out)
    sys.stdout.write("".join(f"{name}\t{count}\n" for name, count in summary.items()))
    sys.stdout.write(f"total\t{len(labels)}\n")
    return 0


def cmd_eval_coherence(args) -> int:
    topics = read_topics(args.topics)
    with open(args.corpus, encoding="utf-8") as fh:
        docs = [line.split() for line in fh]
    report = topic_coherence(topics, docs, args.window)
    if args.json:
        sys.stdout.write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    else:
        lines = [f"{name}\t{tc:.6f}" for name, tc in report.per_topic.items()]
        lines.append(f"mean\t{report.mean:.6f}")
        lines.append(f"pairs_used\t{report.pairs_used}")
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_eval_f1(args) -> int:
    pred = read_labels(args.pred)
    gold = read_labels(args.gold)
    try:
        macro, micro = classification_f1(pred, gold)
    except KeyError as exc:
        raise CliError(str(exc)) from exc
    if args.json:
        sys.stdout.write(json.dumps({"macro_f1": macro, "micro_f1": micro, "n": len(gold)}, sort_keys=True) + "\n")
    else:
        sys.stdout.write(f"macro_f1\t{macro:.6f}\nmicro_f1\t{micro:.6f}\nn\t{len(gold)}\n")
    return 0


def cmd_export(args) -> int:
    state = load_model(args.model)
    for path in export_embeddings(state, args.out):
        log.info("wrote %s", path)
    return 0


def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(n_super=args.super, n_sub=args.sub, vocab_per_topic=args.vocab_per_topic,
                          n_docs=args.docs, doc_len=args.doc_len, noise=args.noise,
                          parent_share=args.parent_share, noise_vocab=args.noise_vocab, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    paths = write_synth(generate(cfg), args.out)
    for kind, path in paths.items():
        log.info("%s\t%s", kind, path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="josh", description="Taxonomy-guided topic mining on the unit sphere.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train embeddings and mine topics")
    p.add_argument("--corpus", required=True, type=_existing_file)
    p.add_argument("--taxonomy", required=True, type=_existing_file)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.025)
    p.add_argument("--margin", type=float, default=0.25)
    p.add_argument("--margin-intra", type=float, default=0.9)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--epochs-per-step", type=int, default=2)
    p.add_argument("--tree-passes", type=int, default=50)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--subsample", type=float, default=0.0, help="frequent-word subsampling threshold (0 = off)")
    p.add_argument("--no-warmup", action="store_true", help="skip the name-only M-step before the first E-step")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("mine", help="re-extract topics from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=_positive(int), default=None)
    p.add_argument("--scored", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("classify", help="label training documents with the vMF classifier")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--level", type=_positive(int))
    group.add_argument("--leaves", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eval-coherence", help="NPMI topic coherence against a reference corpus")
    p.add_argument("--topics", required=True, type=_existing_file)
    p.add_argument("--corpus", required=True, type=_existing_file)
    p.add_argument("--window", type=_positive(int), default=10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_coherence)

    p = sub.add_parser("eval-f1", help="Macro/Micro F1 of predicted vs gold labels")
    p.add_argument("--pred", required=True, type=_existing_file)
    p.add_argument("--gold", required=True, type=_existing_file)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_f1)

    p = sub.add_parser("export-embeddings", help="write u/v/doc/cat text embeddings")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth", help="generate a planted-topic corpus, taxonomy and gold labels")
    p.add_argument("--out", required=True)
    p.add_argument("--super", type=_positive(int), default=3)
    p.add_argument("--sub", type=_positive(int), default=3)
    p.add_argument("--vocab-per-topic", type=_positive(int), default=50)
    p.add_argument("--docs", type=_positive(int), default=3000)
    p.add_argument("--doc-len", type=_positive(int), default=60)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--parent-share", type=float, default=0.2)
    p.add_argument("--noise-vocab", type=_positive(int), default=200)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging()
    try:
        return args.func(args)
    except (CliError, TaxonomyError, EmptyCorpusError, ModelFormatError, ValueError, OSError, KeyError) as exc:
        log.error("error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Planted-topic benchmark: generate a synthetic corpus, train, score recovery.

Reports top-K precision against the planted leaf vocabularies, leaf-level and
super-level classification F1, NPMI coherence and wall time, one TSV row per
seed.

    python3 scripts/planted_benchmark.py --seeds 1 2 3 --dim 50
"""

import argparse
import tempfile
import time
from pathlib import Path

import numpy as np

from josh.config import TrainConfig
from josh.evaluation import classification_f1, topic_coherence
from josh.miner import classify_corpus
from josh.synth import SynthConfig, generate, write_synth
from josh.trainer import run


def score(sc, topics, state, k):
    terms = {t.category: t.terms for t in topics}
    leaf_prec = np.mean([np.mean([w in set(sc.vocab_of[leaf]) for w in terms[leaf][:k]]) for leaf in sc.leaves])
    gold_leaf = dict(enumerate(sc.gold))
    gold_super = {i: sc.parent_of(g) for i, g in gold_leaf.items()}
    leaf_labels, _ = classify_corpus(state, leaves_only=True)
    super_labels, _ = classify_corpus(state, level=1)
    leaf_f1 = classification_f1({lab.doc_id: lab.name for lab in leaf_labels}, gold_leaf)
    super_f1 = classification_f1({lab.doc_id: lab.name for lab in super_labels}, gold_super)
    tc = topic_coherence(terms, sc.docs).mean
    return leaf_prec, leaf_f1, super_f1, tc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[42])
    ap.add_argument("--dim", type=int, default=50)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--noise", type=float, default=0.2)
    ap.add_argument("--docs", type=int, default=3000)
    ap.add_argument("--no-warmup", action="store_true")
    args = ap.parse_args()

    print("seed\tleaf_precision\tleaf_macro_f1\tleaf_micro_f1\tsuper_macro_f1\tsuper_micro_f1\tnpmi\tseconds")
    for seed in args.seeds:
        sc = generate(SynthConfig(noise=args.noise, n_docs=args.docs, seed=seed))
        cfg = TrainConfig(dim=args.dim, threads=args.threads, seed=seed, warmup_mstep=not args.no_warmup)
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_synth(sc, Path(tmp))
            start = time.perf_counter()
            topics, state = run(cfg, paths["corpus"], paths["taxonomy"])
            secs = time.perf_counter() - start
        prec, (lma, lmi), (sma, smi), tc = score(sc, topics, state, cfg.k)
        print(f"{seed}\t{prec:.3f}\t{lma:.3f}\t{lmi:.3f}\t{sma:.3f}\t{smi:.3f}\t{tc:.3f}\t{secs:.1f}")


if __name__ == "__main__":
    main()

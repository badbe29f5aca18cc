"""Planted-topic corpus generator used by the acceptance benchmark.

A two-level taxonomy with ``n_super`` super-categories of ``n_sub`` leaves
each. Every category owns a disjoint topical vocabulary whose first token is
the category name; a shared pool of noise tokens belongs to nobody. A
document picks a leaf uniformly, then draws each token from the noise pool
with probability ``noise``; otherwise from the parent's vocabulary with
probability ``parent_share`` and from the leaf's own vocabulary the rest of
the time. Super-category vocabularies exist so that internal category names
occur in the corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .taxonomy import ROOT


@dataclass
class SynthConfig:
    n_super: int = 3
    n_sub: int = 3
    vocab_per_topic: int = 50
    n_docs: int = 3000
    doc_len: int = 60
    noise: float = 0.2
    parent_share: float = 0.2
    noise_vocab: int = 200
    seed: int = 42

    def __post_init__(self):
        for name in ("n_super", "n_sub", "vocab_per_topic", "n_docs", "doc_len", "noise_vocab"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.noise <= 1.0 or not 0.0 <= self.parent_share <= 1.0:
            raise ValueError("noise and parent_share must lie in [0, 1]")


@dataclass
class SynthCorpus:
    config: SynthConfig
    docs: list[list[str]]
    edges: list[tuple[str, str]]
    gold: list[str]
    vocab_of: dict[str, list[str]] = field(repr=False)
    noise_pool: list[str] = field(repr=False)

    @property
    def leaves(self) -> list[str]:
        return [c for _, c in self.edges if c.startswith("leaf")]

    def parent_of(self, name: str) -> str:
        return dict((c, p) for p, c in self.edges)[name]


def _topic_vocab(name: str, size: int) -> list[str]:
    return [name] + [f"{name}_w{k:03d}" for k in range(1, size)]


def generate(cfg: SynthConfig) -> SynthCorpus:
    rng = np.random.default_rng(cfg.seed)
    edges, vocab_of = [], {}
    leaves, parent = [], {}
    for s in range(cfg.n_super):
        sup = f"super{s}"
        edges.append((ROOT, sup))
        vocab_of[sup] = _topic_vocab(sup, cfg.vocab_per_topic)
        for c in range(cfg.n_sub):
            leaf = f"leaf{s}_{c}"
            edges.append((sup, leaf))
            vocab_of[leaf] = _topic_vocab(leaf, cfg.vocab_per_topic)
            leaves.append(leaf)
            parent[leaf] = sup
    noise_pool = [f"noise{k:04d}" for k in range(cfg.noise_vocab)]

    docs, gold = [], []
    leaf_idx = rng.integers(len(leaves), size=cfg.n_docs)
    for li in leaf_idx:
        leaf = leaves[li]
        u = rng.random(cfg.doc_len)
        src = np.where(u < cfg.noise, 0, np.where(u < cfg.noise + (1 - cfg.noise) * cfg.parent_share, 1, 2))
        picks = rng.integers(cfg.vocab_per_topic, size=cfg.doc_len)
        noise_picks = rng.integers(cfg.noise_vocab, size=cfg.doc_len)
        pools = (noise_pool, vocab_of[parent[leaf]], vocab_of[leaf])
        doc = [pools[s][noise_picks[i] if s == 0 else picks[i]] for i, s in enumerate(src)]
        docs.append(doc)
        gold.append(leaf)
    return SynthCorpus(cfg, docs, edges, gold, vocab_of, noise_pool)


def write_synth(corpus: SynthCorpus, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"corpus": out / "corpus.txt", "taxonomy": out / "taxonomy.tsv", "gold": out / "gold.tsv"}
    paths["corpus"].write_text("".join(" ".join(d) + "\n" for d in corpus.docs), encoding="utf-8")
    paths["taxonomy"].write_text("".join(f"{p}\t{c}\n" for p, c in corpus.edges), encoding="utf-8")
    paths["gold"].write_text("".join(f"{i}\t{g}\n" for i, g in enumerate(corpus.gold)), encoding="utf-8")
    return paths

"""Corpus ingestion, vocabulary, negative sampling and context windows.

Corpus files hold one document per line with tokens separated by single
spaces; multi-word phrases arrive pre-joined with underscores.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

NEG_POWER = 0.75
MAX_NEG_RETRIES = 100


class EmptyCorpusError(ValueError):
    pass


@dataclass
class Vocabulary:
    tokens: list[str]
    counts: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __getitem__(self, token: str) -> int:
        return self.index[token]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.tokens == other.tokens and np.array_equal(self.counts, other.counts)


@dataclass(frozen=True)
class Document:
    doc_id: int
    token_ids: np.ndarray


def _iter_lines(path) -> Iterator[list[str]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            yield line.split()


def build_vocabulary(corpus_path, min_count: int = 5) -> Vocabulary:
    """Count tokens and keep those seen at least ``min_count`` times.

    Ids follow descending count, ties broken lexicographically.
    """
    if min_count < 1:
        raise ValueError("min_count must be positive")
    counter: Counter[str] = Counter()
    for toks in _iter_lines(corpus_path):
        counter.update(toks)
    kept = [(tok, c) for tok, c in counter.items() if c >= min_count]
    if not kept:
        raise EmptyCorpusError(f"no token in {corpus_path} occurs >= {min_count} times")
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary([t for t, _ in kept], np.array([c for _, c in kept], dtype=np.int64))


def load_documents(corpus_path, vocab: Vocabulary) -> list[Document]:
    docs = []
    for toks in _iter_lines(corpus_path):
        ids = [vocab.index[t] for t in toks if t in vocab.index]
        if ids:
            docs.append(Document(len(docs), np.array(ids, dtype=np.int32)))
    return docs


def flatten_documents(docs: list[Document]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate token ids; returns ``(tokens, offsets)`` with ``len(offsets) == len(docs) + 1``."""
    offsets = np.zeros(len(docs) + 1, dtype=np.int64)
    for i, doc in enumerate(docs):
        offsets[i + 1] = offsets[i] + len(doc.token_ids)
    if docs:
        tokens = np.concatenate([doc.token_ids for doc in docs]).astype(np.int32)
    else:
        tokens = np.zeros(0, dtype=np.int32)
    return tokens, offsets


def negative_table(counts: np.ndarray, power: float = NEG_POWER) -> np.ndarray:
    """Cumulative distribution over ids with weights ``count**power``."""
    w = np.asarray(counts, dtype=np.float64) ** power
    cum = np.cumsum(w)
    cum /= cum[-1]
    return cum


class NegativeSampler:
    """Draws negative words with probability proportional to ``count**0.75``."""

    def __init__(self, counts, seed: int = 0, power: float = NEG_POWER):
        counts = np.asarray(counts)
        if len(counts) < 2:
            raise ValueError("negative sampling needs at least two vocabulary entries")
        self.cum_table = negative_table(counts, power)
        self.rng = np.random.default_rng(seed)

    @property
    def probabilities(self) -> np.ndarray:
        return np.diff(self.cum_table, prepend=0.0)

    def draw(self) -> int:
        return int(np.searchsorted(self.cum_table, self.rng.random(), side="right"))

    def draw_many(self, n: int) -> np.ndarray:
        """``n`` unconditioned draws (no exclusion)."""
        return np.searchsorted(self.cum_table, self.rng.random(n), side="right")


def sample_negative(sampler: NegativeSampler, exclude: int) -> int:
    for _ in range(MAX_NEG_RETRIES):
        w = sampler.draw()
        if w != exclude:
            return w
    n = len(sampler.cum_table)
    w = int(sampler.rng.integers(n - 1))
    return w + 1 if w >= exclude else w


def context_pairs(doc: Document, h: int) -> Iterator[tuple[int, int, int]]:
    """Yield ``(center, context, doc_id)`` for every offset ``0 < |k| <= h`` inside the document."""
    if h < 1:
        raise ValueError("window size must be >= 1")
    ids = doc.token_ids
    n = len(ids)
    for j in range(n):
        lo = max(0, j - h)
        hi = min(n, j + h + 1)
        for k in range(lo, hi):
            if k != j:
                yield int(ids[j]), int(ids[k]), doc.doc_id

"""Automatic evaluation: NPMI topic coherence and classification F1."""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

log = logging.getLogger("josh.eval")

NPMI_EPS = 1e-12
DEFAULT_WINDOW = 10


@dataclass
class CoherenceReport:
    per_topic: dict[str, float]
    mean: float
    pairs_used: int
    pairs_skipped: int

    def to_dict(self) -> dict:
        return {"per_topic": self.per_topic, "mean": self.mean,
                "pairs_used": self.pairs_used, "pairs_skipped": self.pairs_skipped}


class WindowCounts:
    """Boolean sliding-window document frequencies for a fixed set of terms."""

    def __init__(self, docs, terms, window: int = DEFAULT_WINDOW):
        if window < 1:
            raise ValueError("window must be >= 1")
        terms = set(terms)
        self.single: Counter[str] = Counter()
        self.joint: Counter[tuple[str, str]] = Counter()
        self.n_windows = 0
        for doc in docs:
            doc = list(doc)
            if not doc:
                continue
            n_win = max(1, len(doc) - window + 1)
            for start in range(n_win):
                present = sorted(terms.intersection(doc[start:start + window]))
                self.n_windows += 1
                self.single.update(present)
                self.joint.update(itertools.combinations(present, 2))

    def npmi(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        key = (a, b) if a < b else (b, a)
        n = self.n_windows
        p_a = self.single[a] / n
        p_b = self.single[b] / n
        p_ab = (self.joint[key] + NPMI_EPS) / n
        denom = -math.log(p_ab)
        if denom <= 0.0:
            # the pair fills every window
            return 1.0
        # the epsilon on the joint count can push a perfect pair a hair past 1
        return min(1.0, max(-1.0, math.log(p_ab / (p_a * p_b)) / denom))


def topic_coherence(topics: dict[str, list[str]], reference_docs, window: int = DEFAULT_WINDOW) -> CoherenceReport:
    """Mean NPMI over unordered term pairs per topic, macro-averaged over topics.

    ``reference_docs`` is an iterable of token lists. Pairs involving a term
    that never occurs in the reference corpus are skipped.
    """
    if not topics:
        raise ValueError("no topics to score")
    vocab = {w for terms in topics.values() for w in terms}
    counts = WindowCounts(reference_docs, vocab, window)
    per_topic = {}
    used = skipped = 0
    for name, terms in topics.items():
        vals = []
        for a, b in itertools.combinations(terms, 2):
            if counts.single[a] == 0 or counts.single[b] == 0:
                log.warning("skipping pair (%s, %s): term absent from reference corpus", a, b)
                skipped += 1
                continue
            vals.append(counts.npmi(a, b))
        used += len(vals)
        per_topic[name] = float(np.mean(vals)) if vals else float("nan")
    finite = [v for v in per_topic.values() if not math.isnan(v)]
    mean = float(np.mean(finite)) if finite else float("nan")
    return CoherenceReport(per_topic, mean, used, skipped)


def classification_f1(predicted: dict, gold: dict) -> tuple[float, float]:
    """Macro- and micro-averaged F1 for single-label multi-class predictions.

    Both arguments map doc id to label; every gold id must be predicted.
    Macro-F1 averages over the union of gold and predicted labels.
    """
    missing = set(gold) - set(predicted)
    if missing:
        raise KeyError(f"{len(missing)} gold documents have no prediction, e.g. {sorted(missing)[:5]}")
    if not gold:
        return 0.0, 0.0
    ids = sorted(gold)
    y_true = [gold[i] for i in ids]
    y_pred = [predicted[i] for i in ids]
    labels = sorted(set(y_true) | set(y_pred))
    tp = Counter(t for t, p in zip(y_true, y_pred) if t == p)
    n_pred = Counter(y_pred)
    n_true = Counter(y_true)
    f1s = []
    for lab in labels:
        denom = n_pred[lab] + n_true[lab]
        f1s.append(2.0 * tp[lab] / denom if denom else 0.0)
    micro = sum(tp.values()) / len(ids)
    return float(np.mean(f1s)), float(micro)

"""Topic extraction and the vMF generative document classifier."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import log_vmf_normalizer
from .model import ModelState


@dataclass
class TopicResult:
    category: str
    terms: list[str]
    scores: list[float]


@dataclass
class DocLabel:
    doc_id: int
    node_id: int
    name: str
    log_density: float
    scores: np.ndarray = field(repr=False)


def mine_topics(state: ModelState, k: int | None = None) -> list[TopicResult]:
    """Top ``k`` terms per category with the category's own name excluded."""
    k = state.config.k if k is None else k
    out = []
    for node in state.taxonomy.categories:
        nid = node.node_id
        kappa = state.kappa[nid]
        scores = log_vmf_normalizer(state.dim, kappa) + kappa * (state.u @ state.centers[nid])
        order = np.argsort(-scores, kind="stable")[: k + 1]
        name_id = state.vocab.index.get(node.name, -1)
        order = [w for w in order if w != name_id][:k]
        out.append(TopicResult(node.name, [state.vocab.tokens[w] for w in order],
                               [float(scores[w]) for w in order]))
    return out


def format_topics(topics: list[TopicResult], scored: bool = False) -> str:
    lines = []
    for tr in topics:
        if scored:
            fields = [f"{w}:{s:.6f}" for w, s in zip(tr.terms, tr.scores)]
        else:
            fields = list(tr.terms)
        lines.append("\t".join([tr.category] + fields))
    return "\n".join(lines) + "\n" if lines else ""


def write_topics(topics: list[TopicResult], path, scored: bool = False) -> None:
    Path(path).write_text(format_topics(topics, scored), encoding="utf-8")


def read_topics(path) -> dict[str, list[str]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if parts and parts[0]:
                out[parts[0]] = [p.rsplit(":", 1)[0] if ":" in p else p for p in parts[1:]]
    return out


def candidate_nodes(state: ModelState, level: int | None = None, leaves_only: bool = False) -> np.ndarray:
    nodes = state.taxonomy.categories
    if leaves_only:
        nodes = [n for n in nodes if not n.children]
    if level is not None:
        nodes = [n for n in nodes if n.level == level]
    if not nodes:
        raise ValueError("no candidate categories (empty taxonomy or level)")
    return np.array([n.node_id for n in nodes], dtype=np.int64)


def class_scores(state: ModelState, doc_vecs: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """log vMF density of each document row under each candidate node."""
    lognorm = np.array([log_vmf_normalizer(state.dim, state.kappa[n]) for n in nodes])
    return lognorm + state.kappa[nodes] * (np.atleast_2d(doc_vecs) @ state.centers[nodes].T)


def classify(state: ModelState, doc_vec, doc_id: int = -1, level: int | None = None,
             leaves_only: bool = False) -> DocLabel:
    nodes = candidate_nodes(state, level, leaves_only)
    scores = class_scores(state, np.asarray(doc_vec, dtype=np.float64), nodes)[0]
    best = int(np.argmax(scores))
    nid = int(nodes[best])
    return DocLabel(doc_id, nid, state.taxonomy[nid].name, float(scores[best]), scores)


def classify_corpus(state: ModelState, doc_ids=None, level: int | None = None,
                    leaves_only: bool = False) -> tuple[list[DocLabel], dict[str, int]]:
    doc_ids = range(state.doc.shape[0]) if doc_ids is None else doc_ids
    doc_ids = list(doc_ids)
    if not doc_ids:
        return [], {}
    nodes = candidate_nodes(state, level, leaves_only)
    scores = class_scores(state, state.doc[doc_ids], nodes)
    best = np.argmax(scores, axis=1)
    labels = [
        DocLabel(d, int(nodes[b]), state.taxonomy[int(nodes[b])].name, float(scores[i, b]), scores[i])
        for i, (d, b) in enumerate(zip(doc_ids, best))
    ]
    summary = dict(sorted(Counter(lab.name for lab in labels).items()))
    return labels, summary


def write_labels(labels: list[DocLabel], path) -> None:
    text = "".join(f"{lab.doc_id}\t{lab.name}\t{lab.log_density:.6f}\n" for lab in labels)
    Path(path).write_text(text, encoding="utf-8")


def read_labels(path) -> dict[int, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) >= 2:
                out[int(parts[0])] = parts[1]
    return out

"""EM training loop: E-step term assignment, M-step Riemannian SGD.

Each EM iteration ``t`` (2..K+1) re-ranks the vocabulary under every
category's vMF distribution, keeps the top ``t`` words as that category's
representative terms, re-estimates the concentrations and then runs the
M-step: corpus epochs of the text hinge (with lazy category attraction),
a category sweep and repeated passes of the tree hinge with margins frozen
at the values they had when the M-step started.

Multi-threaded corpus epochs follow the lock-free convention: workers own a
shard of documents and write shared embedding rows without synchronisation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import TrainConfig
from .corpus import Document, Vocabulary, build_vocabulary, flatten_documents, load_documents, negative_table
from .geometry import log_vmf_normalizer
from .model import ModelState, init_model
from .taxonomy import Taxonomy, compute_level_margins, local_tree_arrays, margins_array, parse_taxonomy

log = logging.getLogger("josh.train")

KAPPA_MIN = 1.0
KAPPA_MAX = 1e5
RBAR_EPS = 1e-4
ALPHA_FLOOR_RATIO = 1e-4


@dataclass
class CorpusData:
    """Flattened corpus plus the sampling tables the compiled loop needs."""

    vocab: Vocabulary
    tokens: np.ndarray
    offsets: np.ndarray
    cum_table: np.ndarray
    keep_prob: np.ndarray

    @classmethod
    def from_documents(cls, vocab: Vocabulary, docs: list[Document], subsample: float = 0.0) -> "CorpusData":
        tokens, offsets = flatten_documents(docs)
        keep = np.ones(len(vocab))
        if subsample > 0:
            freq = vocab.counts / vocab.total
            keep = (np.sqrt(freq / subsample) + 1.0) * subsample / freq
        return cls(vocab, tokens, offsets, negative_table(vocab.counts), np.minimum(keep, 1.0))

    @property
    def n_docs(self) -> int:
        return len(self.offsets) - 1

    @property
    def n_tokens(self) -> int:
        return int(self.offsets[-1])


@dataclass
class Schedule:
    """Linear learning-rate decay over the whole run, floored at ``alpha0 * 1e-4``."""

    alpha0: float
    total_words: int
    done: int = 0

    @property
    def floor(self) -> float:
        return self.alpha0 * ALPHA_FLOOR_RATIO

    @property
    def alpha(self) -> float:
        return max(self.alpha0 * (1.0 - self.done / max(self.total_words, 1)), self.floor)


def epoch_seed(seed: int, t: int, epoch: int, worker: int = 0) -> int:
    return int(np.random.SeedSequence([seed, t, epoch, worker]).generate_state(1)[0])


def _csr(lists: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    for i, items in enumerate(lists):
        ptr[i + 1] = ptr[i] + len(items)
    idx = np.array([x for items in lists for x in items], dtype=np.int64)
    return ptr, idx


def word_category_index(state: ModelState) -> tuple[np.ndarray, np.ndarray]:
    by_word: list[list[int]] = [[] for _ in range(len(state.vocab))]
    for cat, reps in enumerate(state.rep_terms):
        for w in reps:
            by_word[w].append(cat)
    return _csr(by_word)


# ---------------------------------------------------------------- E-step


def rank_terms(state: ModelState, node_id: int) -> tuple[np.ndarray, np.ndarray]:
    """Vocabulary ids sorted by log vMF density under ``node_id`` (ties by id), plus the scores."""
    scores = log_vmf_normalizer(state.dim, state.kappa[node_id]) + state.kappa[node_id] * (state.u @ state.centers[node_id])
    order = np.argsort(-scores, kind="stable")
    return order, scores


def e_step(state: ModelState, t: int) -> list[list[int]]:
    """Assign the top ``t`` words to every category. ROOT keeps an empty set."""
    if t < 2:
        raise ValueError("the E-step runs from t=2; t=1 is the name-only initialisation")
    for node in state.taxonomy.categories:
        order, _ = rank_terms(state, node.node_id)
        state.rep_terms[node.node_id] = order[:t].tolist()
    state.t = t
    return state.rep_terms


def estimate_kappa(mean_cos: float, dim: int) -> float:
    r = min(max(mean_cos, RBAR_EPS), 1.0 - RBAR_EPS)
    kappa = r * (dim - r * r) / (1.0 - r * r)
    return min(max(kappa, KAPPA_MIN), KAPPA_MAX)


def update_kappa(state: ModelState) -> np.ndarray:
    for node in state.taxonomy.categories:
        reps = state.rep_terms[node.node_id]
        if not reps:
            continue
        rbar = float(np.mean(state.u[reps] @ state.centers[node.node_id]))
        state.kappa[node.node_id] = estimate_kappa(rbar, state.dim)
    return state.kappa


# ---------------------------------------------------------------- single steps


def text_step(state: ModelState, center: int, context: int, doc_id: int, neg: int, alpha: float) -> bool:
    buf = np.empty((4, state.dim))
    return bool(K.text_update(state.u, state.v, state.doc, center, context, doc_id, neg,
                              alpha, state.config.margin, buf))


def category_step(state: ModelState, node_id: int, word: int, alpha: float) -> bool:
    buf = np.empty((2, state.dim))
    return bool(K.category_update(state.u, state.centers, word, node_id, alpha, state.config.margin_intra, buf))


def tree_step(state: ModelState, root: int, i: int, j: int, margin: float, alpha: float) -> bool:
    if i == j:
        raise ValueError("sibling pair must be two distinct nodes")
    buf = np.empty((3, state.dim))
    return bool(K.tree_update(state.centers, i, j, root, margin, alpha, buf))


def text_hinge_grads(uw, un, vc, d) -> np.ndarray:
    out = np.empty((4, len(uw)))
    K.text_grads(*(np.ascontiguousarray(x, dtype=np.float64) for x in (uw, un, vc, d)), out)
    return out


def category_term_grads(uw, c, kappa: float) -> np.ndarray:
    out = np.empty((2, len(uw)))
    K.category_grads(np.ascontiguousarray(uw, dtype=np.float64), np.ascontiguousarray(c, dtype=np.float64),
                     float(kappa), out)
    return out


def tree_hinge_grads(ci, cj, cr) -> np.ndarray:
    out = np.empty((3, len(ci)))
    K.tree_grads(*(np.ascontiguousarray(x, dtype=np.float64) for x in (ci, cj, cr)), out)
    return out


# ---------------------------------------------------------------- objectives


def tree_objective(state: ModelState, margins: dict[int, float]) -> float:
    tax = state.taxonomy
    c = state.centers
    total = 0.0
    for node in tax:
        m = margins.get(node.level, 0.0)
        for i in node.children:
            for j in node.children:
                if i != j:
                    total += min(0.0, c[i] @ c[node.node_id] - c[i] @ c[j] - m)
    return total


def category_objective(state: ModelState) -> float:
    total = 0.0
    m_intra = state.config.margin_intra
    for node in state.taxonomy.categories:
        nid = node.node_id
        lognorm = log_vmf_normalizer(state.dim, state.kappa[nid])
        for w in state.rep_terms[nid]:
            cos = state.u[w] @ state.centers[nid]
            if cos < m_intra:
                total += lognorm + state.kappa[nid] * cos
    return total


def corpus_objective(state: ModelState, data: CorpusData, seed: int) -> float:
    """Corpus hinge sum with the negatives a training pass seeded by ``seed`` would draw."""
    stats = np.zeros(5)
    wc_ptr, wc_idx = word_category_index(state)
    K.text_epoch(data.tokens, data.offsets, 0, data.n_docs, state.u, state.v, state.doc, state.centers,
                 data.cum_table, data.keep_prob, wc_ptr, wc_idx, state.config.window, state.config.margin,
                 state.config.margin_intra, 0.0, 0.0, 0, 1, 1, seed, True, stats)
    return float(stats[4])


def total_objective(state: ModelState, data: CorpusData, margins: dict[int, float], seed: int) -> float:
    return corpus_objective(state, data, seed) + category_objective(state) + tree_objective(state, margins)


def mean_category_cosine(state: ModelState) -> float:
    vals = [state.u[w] @ state.centers[n.node_id] for n in state.taxonomy.categories for w in state.rep_terms[n.node_id]]
    return float(np.mean(vals)) if vals else float("nan")


# ---------------------------------------------------------------- M-step


def _shards(n_docs: int, n: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n_docs, n + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def corpus_epoch(state: ModelState, data: CorpusData, t: int, epoch: int, schedule: Schedule) -> np.ndarray:
    """Text hinge and lazy category steps over the whole corpus. Returns the kernel stats."""
    cfg = state.config
    wc_ptr, wc_idx = word_category_index(state)
    shards = _shards(data.n_docs, cfg.threads)
    start = schedule.done
    stats = np.zeros((max(len(shards), 1), 5))

    def work(k: int) -> int:
        lo, hi = shards[k]
        return K.text_epoch(data.tokens, data.offsets, lo, hi, state.u, state.v, state.doc, state.centers,
                            data.cum_table, data.keep_prob, wc_ptr, wc_idx, cfg.window, cfg.margin,
                            cfg.margin_intra, schedule.alpha0, schedule.floor, start, schedule.total_words,
                            len(shards), epoch_seed(cfg.seed, t, epoch, k), False, stats[k])

    if len(shards) <= 1:
        for k in range(len(shards)):
            work(k)
    else:
        with ThreadPoolExecutor(max_workers=len(shards)) as pool:
            list(pool.map(work, range(len(shards))))
    schedule.done += data.n_tokens
    return stats.sum(axis=0)


def tree_sweep(state: ModelState, margins: dict[int, float], alpha: float, n_passes: int) -> int:
    """``n_passes`` sweeps of the tree hinge over every ordered sibling pair. Returns active-step count."""
    roots, ptr, children = local_tree_arrays(state.taxonomy)
    return int(K.tree_passes(state.centers, roots, ptr, children, margins_array(state.taxonomy, margins),
                             alpha, n_passes))


def run_epoch(state: ModelState, data: CorpusData, margins: dict[int, float], t: int, epoch: int,
              schedule: Schedule) -> dict:
    cfg = state.config
    stats = corpus_epoch(state, data, t, epoch, schedule)
    alpha = schedule.alpha
    rep_ptr, rep_idx = _csr(state.rep_terms)
    cat_active = K.category_sweep(state.u, state.centers, rep_ptr, rep_idx, alpha, cfg.margin_intra)
    tree_active = tree_sweep(state, margins, alpha, cfg.tree_passes_per_mstep)
    return {
        "t": t,
        "epoch": epoch,
        "alpha": alpha,
        "pairs": int(stats[0]),
        "active_fraction": stats[1] / stats[0] if stats[0] else 0.0,
        "category_active": int(stats[3]) + int(cat_active),
        "tree_active": int(tree_active),
        "mean_category_cosine": mean_category_cosine(state),
        "margins": dict(margins),
    }


def progress_line(rec: dict) -> str:
    levels = ",".join(f"L{lvl}={m:.4f}" for lvl, m in sorted(rec["margins"].items()))
    return (f"{rec['t']}\t{rec['epoch']}\t{rec['alpha']:.6g}\t{rec['active_fraction']:.4f}\t"
            f"{rec['mean_category_cosine']:.4f}\t{levels}")


PROGRESS_HEADER = "t\tepoch\tlr\tactive_frac\tmean_cat_cos\tm_inter"


def m_step(state: ModelState, data: CorpusData, t: int, schedule: Schedule | None = None,
           on_epoch=None) -> list[dict]:
    cfg = state.config
    if schedule is None:
        schedule = Schedule(cfg.alpha0, cfg.epochs_per_mstep * data.n_tokens)
    margins = compute_level_margins(state.taxonomy, state.centers)
    records = []
    for epoch in range(cfg.epochs_per_mstep):
        rec = run_epoch(state, data, margins, t, epoch, schedule)
        log.info(progress_line(rec))
        if on_epoch is not None:
            on_epoch(rec)
        records.append(rec)
    return records


# ---------------------------------------------------------------- full run


def train(state: ModelState, data: CorpusData, on_epoch=None) -> ModelState:
    cfg = state.config
    schedule = Schedule(cfg.alpha0, cfg.k * cfg.epochs_per_mstep * data.n_tokens)
    t = 1
    if cfg.warmup_mstep:
        # name-only sets: lets the corpus shape u before the first ranking
        schedule.total_words += cfg.epochs_per_mstep * data.n_tokens
        m_step(state, data, 1, schedule, on_epoch)
    while t < cfg.k + 1:
        t += 1
        e_step(state, t)
        update_kappa(state)
        m_step(state, data, t, schedule, on_epoch)
    return state


def prepare(config: TrainConfig, corpus_path, taxonomy_path) -> tuple[ModelState, CorpusData]:
    vocab = build_vocabulary(corpus_path, config.min_count)
    docs = load_documents(corpus_path, vocab)
    tax: Taxonomy = parse_taxonomy(taxonomy_path, vocab)
    state = init_model(vocab, len(docs), tax, config)
    return state, CorpusData.from_documents(vocab, docs, config.subsample)


def run(config: TrainConfig, corpus_path, taxonomy_path, on_epoch=None):
    """Full pipeline: init, K EM iterations, then topic extraction. Returns ``(topics, state)``."""
    from .miner import mine_topics

    state, data = prepare(config, corpus_path, taxonomy_path)
    log.info(PROGRESS_HEADER)
    train(state, data, on_epoch)
    return mine_topics(state), state

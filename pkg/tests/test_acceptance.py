"""Acceptance suite: one test per primary criterion.

Each test records a pass/fail line that is printed in the terminal summary
under "acceptance criteria", then asserts.
"""

import time

import mpmath
import numpy as np
import pytest

from conftest import ACCEPTANCE, DEMO_EDGES, unit_rows
from josh import trainer
from josh.cli import main
from josh.config import TrainConfig
from josh.corpus import Vocabulary
from josh.geometry import log_vmf_normalizer
from josh.miner import candidate_nodes, class_scores, classify_corpus, read_topics
from josh.model import init_model, load_model
from josh.synth import SynthConfig, generate
from josh.taxonomy import ROOT, compute_level_margins, taxonomy_from_edges
from josh.evaluation import classification_f1
from test_taxonomy import brute_force_margins, random_edges

pytestmark = pytest.mark.acceptance


def record(num, title, ok, detail):
    ACCEPTANCE[num] = (title, bool(ok), detail)
    print(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
    assert ok, detail


# ---------------------------------------------------------------- 1. geometry


def mp_series_log_normalizer(dim, kappa):
    """log n_p(kappa) with I_nu summed from its ascending series in 60-digit arithmetic."""
    with mpmath.workdps(60):
        nu = mpmath.mpf(dim) / 2 - 1
        k = mpmath.mpf(kappa)
        x2 = (k / 2) ** 2
        term = (k / 2) ** nu / mpmath.gamma(nu + 1)
        total = term
        m = 0
        while True:
            term *= x2 / ((m + 1) * (m + 1 + nu))
            total += term
            m += 1
            if m > kappa and term < total * mpmath.mpf(10) ** -45:
                break
        val = nu * mpmath.log(k) - (mpmath.mpf(dim) / 2) * mpmath.log(2 * mpmath.pi) - mpmath.log(total)
        return float(val)


def closed_form_log_normalizer(dim, kappa):
    with mpmath.workdps(60):
        k = mpmath.mpf(kappa)
        if dim == 2:
            return float(-mpmath.log(2 * mpmath.pi * mpmath.besseli(0, k)))
        return float(mpmath.log(k) - mpmath.log(4 * mpmath.pi * mpmath.sinh(k)))


def test_criterion_1_geometry_oracle():
    kappas = [1e-6, 0.1, 1.0, 10.0, 100.0, 1e4]
    dims = [2, 3, 10, 100, 200]
    oracle = {}
    for p in dims:
        for k in kappas:
            oracle[p, k] = [mp_series_log_normalizer(p, k)]
            if p in (2, 3):
                oracle[p, k].append(closed_form_log_normalizer(p, k))
    start = time.perf_counter()
    ours = {key: log_vmf_normalizer(*key) for key in oracle}
    elapsed = time.perf_counter() - start
    worst = max(abs(ours[key] - ref) / abs(ref) for key, refs in oracle.items() for ref in refs)
    record(1, "geometry oracle", worst <= 1e-9 and elapsed < 5.0,
           f"worst rel err {worst:.2e} over {len(oracle)} (p, kappa) pairs (tol 1e-9); {elapsed * 1e3:.1f} ms")


# ---------------------------------------------------------------- 2. gradients


def tangent_basis(x):
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(len(x))[:, : len(x) - 1]]))
    return q[:, 1:]


def fd_riemannian_grad(f, args, k, h=1e-5):
    """Riemannian gradient of ``f`` in argument ``k`` via central differences along great circles."""
    x = args[k]
    basis = tangent_basis(x)
    comps = []
    for j in range(basis.shape[1]):
        xi = basis[:, j]
        vals = []
        for eps in (h, -h):
            moved = list(args)
            moved[k] = np.cos(eps) * x + np.sin(eps) * xi
            vals.append(f(*moved))
        comps.append((vals[0] - vals[1]) / (2 * h))
    return basis @ np.array(comps)


def check_term(rng, n_args, dim, active, f_of, grads_of, n_configs=500):
    worst_tan = worst_fd = 0.0
    done = 0
    while done < n_configs:
        args = list(unit_rows(rng, n_args, dim))
        extra = rng.uniform(1.0, 500.0)
        if not active(args):
            continue
        g = grads_of(args, extra)
        f = f_of(extra)
        for k in range(n_args):
            worst_tan = max(worst_tan, abs(g[k] @ args[k]))
            fd = fd_riemannian_grad(f, args, k)
            worst_fd = max(worst_fd, np.linalg.norm(fd - g[k]) / np.linalg.norm(g[k]))
        done += 1
    return worst_tan, worst_fd


def test_criterion_2_riemannian_gradients():
    rng = np.random.default_rng(2024)
    dim, margin, m_intra, m_inter = 10, 0.25, 0.9, 0.5
    start = time.perf_counter()
    results = {
        "text": check_term(
            rng, 4, dim,
            lambda a: a[2] @ a[0] + a[0] @ a[3] - a[2] @ a[1] - a[1] @ a[3] < margin,
            lambda _: (lambda uw, un, vc, d: vc @ uw + uw @ d - vc @ un - un @ d),
            lambda a, _: trainer.text_hinge_grads(*a)),
        "category": check_term(
            rng, 2, dim,
            lambda a: a[0] @ a[1] < m_intra,
            lambda kappa: (lambda uw, c: log_vmf_normalizer(dim, kappa) + kappa * (uw @ c)),
            lambda a, kappa: trainer.category_term_grads(a[0], a[1], kappa)),
        "tree": check_term(
            rng, 3, dim,
            lambda a: a[0] @ a[2] - a[0] @ a[1] < m_inter,
            lambda _: (lambda ci, cj, cr: ci @ cr - ci @ cj),
            lambda a, _: trainer.tree_hinge_grads(*a)),
    }
    elapsed = time.perf_counter() - start
    tan_ok = all(r[0] <= 1e-9 for r in results.values())
    fd_ok = all(r[1] <= 1e-4 for r in results.values())
    detail = "; ".join(f"{k}: tan {t:.1e}, fd rel {e:.1e}" for k, (t, e) in results.items())
    record(2, "Riemannian gradients", tan_ok and fd_ok and elapsed < 30.0,
           f"500 active configs per term; {detail}; {elapsed:.1f} s")


# ---------------------------------------------------------------- 3, 6, 8. planted benchmark


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    root = tmp_path_factory.mktemp("planted")
    assert main(["synth", "--out", str(root / "data")]) == 0
    data = root / "data"
    args = ["train", "--corpus", str(data / "corpus.txt"), "--taxonomy", str(data / "taxonomy.tsv"),
            "--dim", "50", "--threads", "1"]
    start = time.perf_counter()
    assert main(args + ["--out", str(root / "run1")]) == 0
    elapsed = time.perf_counter() - start
    return {"root": root, "data": data, "run": root / "run1", "args": args, "seconds": elapsed}


def test_criterion_3_unit_norms(planted):
    state = load_model(planted["run"])
    worst = 0.0
    for mat in (state.u, state.v, state.doc, state.centers):
        worst = max(worst, float(np.max(np.abs(np.linalg.norm(mat, axis=1) - 1.0))))
    n_rows = sum(m.shape[0] for m in (state.u, state.v, state.doc, state.centers))
    record(3, "unit-norm invariant", worst <= 1e-6, f"max |norm-1| = {worst:.2e} over {n_rows} rows (tol 1e-6)")


def test_criterion_6_planted_recovery(planted, tmp_path):
    sc = generate(SynthConfig())
    topics = read_topics(planted["run"] / "topics.tsv")
    precisions = []
    for leaf in sc.leaves:
        terms = topics[leaf][:5]
        precisions.append(sum(t in set(sc.vocab_of[leaf]) for t in terms) / 5)
    precision = float(np.mean(precisions))

    state = load_model(planted["run"])
    labels, _ = classify_corpus(state, leaves_only=True)
    pred = {lab.doc_id: lab.name for lab in labels}
    gold = dict(enumerate(sc.gold))
    _, micro = classification_f1(pred, gold)
    secs = planted["seconds"]
    record(6, "planted-topic recovery", precision >= 0.80 and micro >= 0.85 and secs < 180,
           f"top-5 leaf precision {precision:.3f} (>= 0.80), leaf Micro-F1 {micro:.3f} (>= 0.85), "
           f"train {secs:.1f} s (< 180 s)")


def test_criterion_8_determinism(planted):
    run2 = planted["root"] / "run2"
    assert main(planted["args"] + ["--out", str(run2)]) == 0
    same = {name: (run2 / name).read_bytes() == (planted["run"] / name).read_bytes()
            for name in ("topics.tsv", "model.bin")}
    record(8, "strict-mode determinism", all(same.values()),
           ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))


# ---------------------------------------------------------------- 4. E-step


def test_criterion_4_e_step_equivalence():
    rng = np.random.default_rng(4)
    n_vocab, dim = 10_000, 16
    edges = [(ROOT, "alpha"), (ROOT, "beta"), ("alpha", "gamma")]
    tokens = ["alpha", "beta", "gamma"] + [f"w{i}" for i in range(n_vocab - 3)]
    vocab = Vocabulary(tokens, np.ones(n_vocab, dtype=np.int64))
    tax = taxonomy_from_edges(edges, vocab)
    state = init_model(vocab, 1, tax, TrainConfig(dim=dim, min_count=1))
    mismatches = 0
    for _ in range(100):
        state.u[:] = unit_rows(rng, n_vocab, dim)
        # duplicated rows force exact ties
        dup = rng.integers(n_vocab, size=(50, 2))
        state.u[dup[:, 0]] = state.u[dup[:, 1]]
        state.centers[:] = unit_rows(rng, len(tax), dim)
        state.kappa[:] = rng.uniform(1.0, 1000.0, size=len(tax))
        t = int(rng.integers(2, 60))
        reps = trainer.e_step(state, t)
        for node in tax.categories:
            nid = node.node_id
            dens = (log_vmf_normalizer(dim, state.kappa[nid]) + state.kappa[nid] * (state.u @ state.centers[nid])).tolist()
            brute = sorted(range(n_vocab), key=lambda w: (-dens[w], w))[:t]
            mismatches += reps[nid] != brute
    record(4, "E-step equivalence", mismatches == 0,
           f"{mismatches} mismatching category sets over 100 instances, vocab 10^4")


# ---------------------------------------------------------------- 5. margins


def test_criterion_5_margin_oracle():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 51))
        tax = taxonomy_from_edges(random_edges(rng, n))
        centers = unit_rows(rng, len(tax), int(rng.integers(2, 30)))
        ours = compute_level_margins(tax, centers)
        ref = brute_force_margins(tax, centers)
        assert ours.keys() == ref.keys()
        worst = max([worst] + [abs(ours[k] - ref[k]) for k in ref])
    record(5, "margin-formula oracle", worst <= 1e-12,
           f"max |diff| {worst:.1e} over 100 random trees with <= 50 nodes (tol 1e-12)")


# ---------------------------------------------------------------- 7. tree scaling


def bfs_state(n_nodes, branching=4, dim=100):
    names = [ROOT] + [f"c{i}" for i in range(1, n_nodes)]
    edges = [(names[(i - 1) // branching], names[i]) for i in range(1, n_nodes)]
    vocab = Vocabulary(names[1:], np.full(n_nodes - 1, 5))
    return init_model(vocab, 1, taxonomy_from_edges(edges, vocab), TrainConfig(dim=dim, min_count=1))


def time_tree_passes(n_nodes, reps=10, passes=2000):
    state = bfs_state(n_nodes)
    margins = compute_level_margins(state.taxonomy, state.centers)
    trainer.tree_sweep(state, margins, 0.01, 1)
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        trainer.tree_sweep(state, margins, 0.01, passes)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def test_criterion_7_tree_scaling():
    t20, t40 = time_tree_passes(20), time_tree_passes(40)
    ratio = t40 / t20
    record(7, "linear tree scaling", 1.5 <= ratio <= 2.8,
           f"median time n=20 {t20 * 1e3:.2f} ms, n=40 {t40 * 1e3:.2f} ms, ratio {ratio:.2f} (in [1.5, 2.8])")


# ---------------------------------------------------------------- 9. classifier


def test_criterion_9_classifier_invariants():
    rng = np.random.default_rng(9)
    names = sorted({x for e in DEMO_EDGES for x in e} - {ROOT})
    vocab = Vocabulary(names, np.full(len(names), 5))
    tax = taxonomy_from_edges(DEMO_EDGES, vocab)
    state = init_model(vocab, 1000, tax, TrainConfig(dim=20, min_count=1))
    state.centers[:] = unit_rows(rng, len(tax), 20)
    state.doc[:] = unit_rows(rng, 1000, 20)
    state.kappa[:] = 123.0
    labels, _ = classify_corpus(state)
    nodes = candidate_nodes(state)
    nearest = nodes[np.argmax(state.doc @ state.centers[nodes].T, axis=1)]
    agree = int(sum(lab.node_id == n for lab, n in zip(labels, nearest)))

    state.kappa[:] = rng.uniform(1.0, 800.0, size=len(tax))
    before = class_scores(state, state.doc, nodes)
    q, _ = np.linalg.qr(rng.standard_normal((20, 20)))
    state.doc[:] = state.doc @ q.T
    state.centers[:] = state.centers @ q.T
    after = class_scores(state, state.doc, nodes)
    drift = float(np.max(np.abs(after - before) / np.maximum(1.0, np.abs(before))))
    record(9, "classifier invariants", agree == 1000 and drift <= 1e-9,
           f"nearest-cosine agreement {agree}/1000; rotation score drift {drift:.1e} (tol 1e-9)")

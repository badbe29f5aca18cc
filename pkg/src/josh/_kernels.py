"""Compiled inner loops for the M-step.

All updates are Riemannian ascent steps on the unit sphere: the Euclidean
gradient is projected onto the tangent space at the current point and the
point is moved with the ``(x + a*g) / ||x + a*g||`` retraction. Every
gradient of one update is computed from the pre-update values before any row
is written.
"""

import numpy as np
from numba import njit

_NEG_RETRIES = 100


@njit(cache=True, nogil=True, inline="always")
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True, nogil=True, inline="always")
def _project(theta, g):
    s = _dot(theta, g)
    for i in range(g.shape[0]):
        g[i] -= s * theta[i]


@njit(cache=True, nogil=True)
def _retract(x, g, alpha):
    n = 0.0
    for i in range(x.shape[0]):
        y = x[i] + alpha * g[i]
        g[i] = y
        n += y * y
    if n == 0.0:
        return False
    n = np.sqrt(n)
    for i in range(x.shape[0]):
        x[i] = g[i] / n
    return True


@njit(cache=True, nogil=True)
def text_grads(uw, un, vc, d, out):
    """Riemannian gradients of the text hinge for (u_w, u_neg, v_ctx, d) into rows of ``out``."""
    for i in range(uw.shape[0]):
        a = vc[i] + d[i]
        b = uw[i] - un[i]
        out[0, i] = a
        out[1, i] = -a
        out[2, i] = b
        out[3, i] = b
    _project(uw, out[0])
    _project(un, out[1])
    _project(vc, out[2])
    _project(d, out[3])


@njit(cache=True, nogil=True)
def text_update(u, v, dvec, w, ctx, doc, neg, alpha, margin, buf):
    """One hinge step on (w, ctx, doc) vs negative ``neg``. Returns True if the hinge was active."""
    uw = u[w]
    un = u[neg]
    vc = v[ctx]
    d = dvec[doc]
    pos = _dot(vc, uw) + _dot(uw, d)
    ng = _dot(vc, un) + _dot(un, d)
    if pos - ng >= margin:
        return False
    text_grads(uw, un, vc, d, buf)
    _retract(uw, buf[0], alpha)
    _retract(un, buf[1], alpha)
    _retract(vc, buf[2], alpha)
    _retract(d, buf[3], alpha)
    return True


@njit(cache=True, nogil=True)
def category_grads(uw, c, kappa, out):
    """Riemannian gradients of ``kappa * u.c`` w.r.t. u (row 0) and c (row 1)."""
    for i in range(uw.shape[0]):
        out[0, i] = kappa * c[i]
        out[1, i] = kappa * uw[i]
    _project(uw, out[0])
    _project(c, out[1])


@njit(cache=True, nogil=True)
def category_update(u, centers, w, cat, alpha, m_intra, buf):
    uw = u[w]
    c = centers[cat]
    if _dot(uw, c) >= m_intra:
        return False
    # unit kappa: the step uses the direction of the kappa-scaled gradient only
    category_grads(uw, c, 1.0, buf)
    _retract(uw, buf[0], alpha)
    _retract(c, buf[1], alpha)
    return True


@njit(cache=True, nogil=True)
def tree_grads(ci, cj, cr, out):
    """Riemannian gradients of ``c_i.c_r - c_i.c_j`` for (c_i, c_j, c_r)."""
    for k in range(ci.shape[0]):
        out[0, k] = cr[k] - cj[k]
        out[1, k] = -ci[k]
        out[2, k] = ci[k]
    _project(ci, out[0])
    _project(cj, out[1])
    _project(cr, out[2])


@njit(cache=True, nogil=True)
def tree_update(centers, i, j, r, margin, alpha, buf):
    ci = centers[i]
    cj = centers[j]
    cr = centers[r]
    if _dot(ci, cr) - _dot(ci, cj) >= margin:
        return False
    tree_grads(ci, cj, cr, buf)
    _retract(ci, buf[0], alpha)
    _retract(cj, buf[1], alpha)
    _retract(cr, buf[2], alpha)
    return True


@njit(cache=True, nogil=True)
def _sample_negative(cum_table, exclude):
    n = cum_table.shape[0]
    for _ in range(_NEG_RETRIES):
        w = np.searchsorted(cum_table, np.random.random(), side="right")
        if w != exclude:
            return w
    w = np.random.randint(0, n - 1)
    if w >= exclude:
        w += 1
    return w


@njit(cache=True)
def seed_thread(seed):
    np.random.seed(seed)


@njit(cache=True)
def draw_negatives(cum_table, exclude, n, seed):
    np.random.seed(seed)
    out = np.empty(n, dtype=np.int64)
    for k in range(n):
        out[k] = _sample_negative(cum_table, exclude)
    return out


@njit(cache=True, nogil=True)
def text_epoch(tokens, offsets, doc_lo, doc_hi, u, v, dvec, centers,
               cum_table, keep_prob, wc_ptr, wc_idx,
               window, margin, m_intra, alpha0, alpha_floor,
               words_start, words_total, stride, seed, evaluate, stats):
    """One pass over documents ``[doc_lo, doc_hi)``.

    ``stats`` receives [pairs, active hinges, category steps, active category
    steps] in its first four slots and the summed corpus hinge value in slot 4.
    With ``evaluate`` set, nothing is written; the same random draws are made,
    so a training pass and an evaluation pass with one seed see identical
    negatives.
    """
    np.random.seed(seed)
    p = u.shape[1]
    buf = np.empty((4, p))
    max_len = 0
    for doc in range(doc_lo, doc_hi):
        max_len = max(max_len, offsets[doc + 1] - offsets[doc])
    kept = np.empty(max_len, dtype=np.int64)
    processed = 0
    n_pairs = 0
    n_active = 0
    n_cat = 0
    n_cat_active = 0
    hinge = 0.0
    for doc in range(doc_lo, doc_hi):
        s = offsets[doc]
        e = offsets[doc + 1]
        n = 0
        for i in range(s, e):
            w = tokens[i]
            if keep_prob[w] >= 1.0 or np.random.random() < keep_prob[w]:
                kept[n] = w
                n += 1
        for j in range(n):
            frac = (words_start + (processed + j) * stride) / words_total
            alpha = alpha0 * (1.0 - frac)
            if alpha < alpha_floor:
                alpha = alpha_floor
            w = kept[j]
            lo = max(0, j - window)
            hi = min(n, j + window + 1)
            for k in range(lo, hi):
                if k == j:
                    continue
                ctx = kept[k]
                neg = _sample_negative(cum_table, w)
                n_pairs += 1
                if evaluate:
                    diff = (_dot(v[ctx], u[w]) + _dot(u[w], dvec[doc])
                            - _dot(v[ctx], u[neg]) - _dot(u[neg], dvec[doc]))
                    if diff < margin:
                        n_active += 1
                        hinge += diff - margin
                elif text_update(u, v, dvec, w, ctx, doc, neg, alpha, margin, buf):
                    n_active += 1
            if not evaluate:
                for q in range(wc_ptr[w], wc_ptr[w + 1]):
                    n_cat += 1
                    if category_update(u, centers, w, wc_idx[q], alpha, m_intra, buf):
                        n_cat_active += 1
        processed += e - s
    stats[0] += n_pairs
    stats[1] += n_active
    stats[2] += n_cat
    stats[3] += n_cat_active
    stats[4] += hinge
    return processed


@njit(cache=True, nogil=True)
def category_sweep(u, centers, rep_ptr, rep_idx, alpha, m_intra):
    """One step for every (category, representative term) pair. Returns the active count."""
    buf = np.empty((2, u.shape[1]))
    active = 0
    for c in range(rep_ptr.shape[0] - 1):
        for q in range(rep_ptr[c], rep_ptr[c + 1]):
            if category_update(u, centers, rep_idx[q], c, alpha, m_intra, buf):
                active += 1
    return active


@njit(cache=True, nogil=True)
def tree_passes(centers, roots, child_ptr, children, margins, alpha, n_passes):
    """``n_passes`` sweeps over every local tree and ordered sibling pair. Returns active count."""
    buf = np.empty((3, centers.shape[1]))
    active = 0
    for _ in range(n_passes):
        for t in range(roots.shape[0]):
            r = roots[t]
            m = margins[t]
            for a in range(child_ptr[t], child_ptr[t + 1]):
                for b in range(child_ptr[t], child_ptr[t + 1]):
                    if a != b and tree_update(centers, children[a], children[b], r, m, alpha, buf):
                        active += 1
    return active

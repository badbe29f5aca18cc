"""Parameter store: word/context/document/category embeddings plus persistence.

``model.bin`` layout (little-endian throughout)::

    magic  b"JOSHMDL\\0"       8 bytes
    version                  uint32
    config                   uint32 length + UTF-8 JSON (sorted keys)
    dim, t                   uint32, uint32
    n_vocab, n_docs          uint64, uint64
    n_nodes                  uint32
    vocab entries            (uint32 length + UTF-8 token, int64 count) * n_vocab
    u, v                     float64[n_vocab * dim] each, row-major
    doc                      float64[n_docs * dim]
    nodes                    (uint32 length + name, int32 parent, uint32 level,
                              float64 kappa, uint32 n_rep, int32[n_rep],
                              float64[dim] center) * n_nodes
    magic  b"JOSHEND\\0"       8 bytes
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .corpus import Vocabulary
from .taxonomy import ROOT, CategoryNode, Taxonomy

MAGIC = b"JOSHMDL\0"
END_MAGIC = b"JOSHEND\0"
FORMAT_VERSION = 1
LOAD_NORM_TOL = 1e-3


class ModelFormatError(ValueError):
    pass


class CorruptModelError(ModelFormatError):
    pass


@dataclass
class ModelState:
    vocab: Vocabulary
    taxonomy: Taxonomy
    u: np.ndarray
    v: np.ndarray
    doc: np.ndarray
    centers: np.ndarray
    kappa: np.ndarray
    rep_terms: list[list[int]]
    config: TrainConfig
    t: int = 1

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def name_id(self, node_id: int) -> int:
        """Vocabulary id of a category's name, or -1 for ROOT."""
        name = self.taxonomy[node_id].name
        return self.vocab.index.get(name, -1) if node_id != 0 else -1


def _sphere_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    x = rng.standard_normal((n, dim))
    norms = np.linalg.norm(x, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        x[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(x, axis=1)
    return x / norms[:, None]


def init_model(vocab: Vocabulary, n_docs: int, taxonomy: Taxonomy, config: TrainConfig, seed=None) -> ModelState:
    """Random unit-sphere init; category centers start at their name's word vector."""
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    p = config.dim
    u = _sphere_rows(rng, len(vocab), p)
    v = _sphere_rows(rng, len(vocab), p)
    doc = _sphere_rows(rng, n_docs, p)
    centers = np.empty((len(taxonomy), p))
    centers[0] = _sphere_rows(rng, 1, p)[0]
    rep_terms: list[list[int]] = [[]]
    for node in taxonomy.categories:
        wid = vocab[node.name]
        centers[node.node_id] = u[wid]
        rep_terms.append([wid])
    kappa = np.full(len(taxonomy), float(config.kappa_init))
    return ModelState(vocab, taxonomy, u, v, doc, centers, kappa, rep_terms, config, t=1)


def _pack_str(buf: io.BytesIO, s: str) -> None:
    b = s.encode("utf-8")
    buf.write(struct.pack("<I", len(b)))
    buf.write(b)


def save_model(state: ModelState, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = state.dim
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    _pack_str(buf, json.dumps(state.config.to_dict(), sort_keys=True))
    buf.write(struct.pack("<IIQQI", p, state.t, len(state.vocab), state.doc.shape[0], len(state.taxonomy)))
    for tok, cnt in zip(state.vocab.tokens, state.vocab.counts):
        _pack_str(buf, tok)
        buf.write(struct.pack("<q", int(cnt)))
    for mat in (state.u, state.v, state.doc):
        buf.write(np.ascontiguousarray(mat, dtype="<f8").tobytes())
    for node in state.taxonomy:
        _pack_str(buf, node.name)
        parent = -1 if node.parent is None else node.parent
        reps = state.rep_terms[node.node_id]
        buf.write(struct.pack("<iIdI", parent, node.level, float(state.kappa[node.node_id]), len(reps)))
        buf.write(np.asarray(reps, dtype="<i4").tobytes())
        buf.write(np.ascontiguousarray(state.centers[node.node_id], dtype="<f8").tobytes())
    buf.write(END_MAGIC)
    path = out / "model.bin"
    path.write_bytes(buf.getvalue())
    write_meta(state, out / "meta.tsv")
    return path


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptModelError("model file is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptModelError("invalid UTF-8 in model file") from exc

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)


def _check_norms(name: str, mat: np.ndarray) -> None:
    if mat.size == 0:
        return
    dev = np.abs(np.linalg.norm(mat, axis=-1) - 1.0)
    if not np.all(dev <= LOAD_NORM_TOL):
        bad = int(np.argmax(dev))
        raise CorruptModelError(f"{name} row {bad} is not unit-norm (deviation {dev[bad]:.3g})")


def load_model(model_dir) -> ModelState:
    path = Path(model_dir)
    if path.is_dir():
        path = path / "model.bin"
    r = _Reader(path.read_bytes())
    if r.take(len(MAGIC)) != MAGIC:
        raise ModelFormatError(f"{path} is not a model file")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {version}, expected {FORMAT_VERSION}")
    try:
        config = TrainConfig.from_dict(json.loads(r.string()))
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise CorruptModelError(f"bad config block: {exc}") from exc
    p, t, n_vocab, n_docs, n_nodes = r.unpack("<IIQQI")
    tokens, counts = [], []
    for _ in range(n_vocab):
        tokens.append(r.string())
        counts.append(r.unpack("<q")[0])
    u = r.floats(n_vocab * p).reshape(n_vocab, p)
    v = r.floats(n_vocab * p).reshape(n_vocab, p)
    doc = r.floats(n_docs * p).reshape(n_docs, p)
    nodes, centers, kappa, reps = [], np.empty((n_nodes, p)), np.empty(n_nodes), []
    for nid in range(n_nodes):
        name = r.string()
        parent, level, k, n_rep = r.unpack("<iIdI")
        rep = np.frombuffer(r.take(4 * n_rep), dtype="<i4").astype(int).tolist()
        centers[nid] = r.floats(p)
        kappa[nid] = k
        reps.append(rep)
        nodes.append(CategoryNode(name, nid, level, None if parent < 0 else parent))
    if r.take(len(END_MAGIC)) != END_MAGIC or r.pos != len(r.data):
        raise CorruptModelError("model file has a bad trailer")
    for node in nodes:
        if node.parent is not None:
            if not 0 <= node.parent < n_nodes:
                raise CorruptModelError("node parent out of range")
            nodes[node.parent].children.append(node.node_id)
    if not nodes or nodes[0].name != ROOT:
        raise CorruptModelError("first node must be ROOT")
    for name, mat in (("u", u), ("v", v), ("doc", doc), ("centers", centers)):
        _check_norms(name, mat)
    vocab = Vocabulary(tokens, np.array(counts, dtype=np.int64))
    return ModelState(vocab, Taxonomy(nodes), u, v, doc, centers, kappa, reps, config, t=t)


def write_meta(state: ModelState, path) -> None:
    lines = [f"{k}\t{v}" for k, v in state.config.to_dict().items()]
    lines.append(f"t\t{state.t}")
    for node in state.taxonomy:
        lines.append(f"kappa\t{node.name}\t{state.kappa[node.node_id]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_embedding_text(path, labels, mat: np.ndarray) -> None:
    """``N p`` header, then ``label v1 ... vp`` with 6 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mat.shape[0]} {mat.shape[1]}\n")
        for label, row in zip(labels, mat):
            fh.write(label + " " + " ".join(f"{x:.6g}" for x in row) + "\n")


def read_embedding_text(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        n, p = (int(x) for x in fh.readline().split())
        labels, rows = [], []
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            labels.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    mat = np.array(rows, dtype=np.float64).reshape(n, p)
    return labels, mat


def export_embeddings(state: ModelState, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [
        (out / "u.txt", state.vocab.tokens, state.u),
        (out / "v.txt", state.vocab.tokens, state.v),
        (out / "doc.txt", [str(i) for i in range(state.doc.shape[0])], state.doc),
        (out / "cat.txt", [n.name for n in state.taxonomy], state.centers),
    ]
    for path, labels, mat in files:
        write_embedding_text(path, labels, mat)
    return [f[0] for f in files]

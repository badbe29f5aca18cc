"""Category tree parsing, local-tree enumeration and level-dependent margins.

Taxonomy files are UTF-8 edge lists, one ``parent<TAB>child`` pair per line.
``ROOT`` names the virtual root; lines starting with ``#`` are comments.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

ROOT = "ROOT"


class TaxonomyError(ValueError):
    pass


@dataclass
class CategoryNode:
    name: str
    node_id: int
    level: int
    parent: int | None
    children: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class LocalTree:
    root: int
    children: tuple[int, ...]


@dataclass
class Taxonomy:
    """Rooted category tree. Node 0 is always ``ROOT``; ids follow BFS order."""

    nodes: list[CategoryNode]

    def __post_init__(self):
        self._by_name = {n.name: n.node_id for n in self.nodes}

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __getitem__(self, node_id: int) -> CategoryNode:
        return self.nodes[node_id]

    def node_by_name(self, name: str) -> CategoryNode:
        return self.nodes[self._by_name[name]]

    @property
    def categories(self) -> list[CategoryNode]:
        """All nodes except ROOT."""
        return self.nodes[1:]

    @property
    def depth(self) -> int:
        return max(n.level for n in self.nodes)

    def leaves(self) -> list[CategoryNode]:
        return [n for n in self.nodes[1:] if not n.children]

    def edges(self) -> list[tuple[str, str]]:
        return [(self.nodes[n.parent].name, n.name) for n in self.nodes[1:]]

    def __eq__(self, other):
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return self.nodes == other.nodes


def taxonomy_from_edges(edges, vocab=None) -> Taxonomy:
    """Validate a ``(parent, child)`` edge list and build the tree.

    ``vocab`` is anything supporting ``in``; when given, every non-ROOT name
    must belong to it.
    """
    parent_of: dict[str, str] = {}
    children_of: dict[str, list[str]] = {}
    for parent, child in edges:
        if child == ROOT:
            raise TaxonomyError("ROOT cannot be a child")
        if parent == child:
            raise TaxonomyError(f"cycle detected: {child} is its own parent")
        if child in parent_of:
            raise TaxonomyError(f"duplicate name: {child!r} appears more than once as a child")
        parent_of[child] = parent
        children_of.setdefault(parent, []).append(child)

    for start in parent_of:
        seen = {start}
        cur = start
        while cur in parent_of:
            cur = parent_of[cur]
            if cur in seen:
                raise TaxonomyError(f"cycle detected through {start!r}")
            seen.add(cur)

    roots = sorted(name for name in children_of if name not in parent_of)
    if roots != [ROOT]:
        extra = [r for r in roots if r != ROOT]
        if extra:
            raise TaxonomyError(f"multiple roots: {', '.join([ROOT] + extra)} (only {ROOT} may be parentless)")
        raise TaxonomyError(f"taxonomy has no {ROOT} edges")

    if vocab is not None:
        missing = [name for name in parent_of if name not in vocab]
        if missing:
            raise TaxonomyError(f"category names not in vocabulary: {', '.join(sorted(missing))}")

    nodes = [CategoryNode(ROOT, 0, 0, None)]
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        node = nodes[nid]
        for child in sorted(children_of.get(node.name, [])):
            cid = len(nodes)
            nodes.append(CategoryNode(child, cid, node.level + 1, nid))
            node.children.append(cid)
            queue.append(cid)
    return Taxonomy(nodes)


def parse_taxonomy(path, vocab=None) -> Taxonomy:
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not all(p.strip() for p in parts):
                raise TaxonomyError(f"{path}:{lineno}: malformed line {line!r}, expected parent<TAB>child")
            parent, child = (p.strip() for p in parts)
            if any(ch.isspace() for ch in parent + child):
                raise TaxonomyError(f"{path}:{lineno}: category names must be single tokens")
            edges.append((parent, child))
    return taxonomy_from_edges(edges, vocab)


def format_taxonomy(tax: Taxonomy) -> str:
    return "".join(f"{p}\t{c}\n" for p, c in tax.edges())


def write_taxonomy(tax: Taxonomy, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_taxonomy(tax))


def local_trees(tax: Taxonomy) -> list[LocalTree]:
    """One local tree (node plus direct children) per internal node, BFS order."""
    return [LocalTree(n.node_id, tuple(n.children)) for n in tax.nodes if n.children]


def compute_level_margins(tax: Taxonomy, centers: np.ndarray) -> dict[int, float]:
    """Per-level inter-category margin.

    For every local tree rooted at level L and every ordered sibling pair
    (i, j), i != j, accumulate ``c_i.c_r - c_i.c_j``; the margin is the mean
    over all such pairs at that level, or 0 when the level has none.
    """
    sums: dict[int, list[float]] = {}
    for lt in local_trees(tax):
        level = tax[lt.root].level
        acc = sums.setdefault(level, [])
        ch = np.asarray(lt.children)
        if len(ch) < 2:
            continue
        x = centers[ch]
        gram = x @ x.T
        to_root = x @ centers[lt.root]
        diff = to_root[:, None] - gram
        mask = ~np.eye(len(ch), dtype=bool)
        acc.extend(diff[mask].tolist())
    return {level: (math.fsum(v) / len(v) if v else 0.0) for level, v in sorted(sums.items())}


def margins_array(tax: Taxonomy, margins: dict[int, float]) -> np.ndarray:
    """Margin indexed by local-tree position (matches ``local_trees`` order)."""
    return np.array([margins.get(tax[lt.root].level, 0.0) for lt in local_trees(tax)], dtype=np.float64)


def local_tree_arrays(tax: Taxonomy) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR layout ``(roots, child_ptr, children)`` for the compiled tree pass."""
    lts = local_trees(tax)
    roots = np.array([lt.root for lt in lts], dtype=np.int64)
    ptr = np.zeros(len(lts) + 1, dtype=np.int64)
    for k, lt in enumerate(lts):
        ptr[k + 1] = ptr[k] + len(lt.children)
    children = np.array([c for lt in lts for c in lt.children], dtype=np.int64)
    return roots, ptr, children

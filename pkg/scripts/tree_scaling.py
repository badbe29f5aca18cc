"""Time the tree-hinge passes as the taxonomy grows (breadth-first fill, fixed branching).

    python3 scripts/tree_scaling.py --sizes 10 20 40 80 160 --branching 4
"""

import argparse
import time

import numpy as np

from josh.config import TrainConfig
from josh.corpus import Vocabulary
from josh.model import init_model
from josh.taxonomy import ROOT, compute_level_margins, local_trees, taxonomy_from_edges
from josh.trainer import tree_sweep


def bfs_state(n_nodes, branching, dim):
    names = [ROOT] + [f"c{i}" for i in range(1, n_nodes)]
    edges = [(names[(i - 1) // branching], names[i]) for i in range(1, n_nodes)]
    vocab = Vocabulary(names[1:], np.full(n_nodes - 1, 5))
    return init_model(vocab, 1, taxonomy_from_edges(edges, vocab), TrainConfig(dim=dim, min_count=1))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 40, 80, 160])
    ap.add_argument("--branching", type=int, default=4)
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--passes", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=10)
    args = ap.parse_args()

    print("nodes\tsibling_pairs\tmedian_ms\tus_per_pair_pass")
    for n in args.sizes:
        state = bfs_state(n, args.branching, args.dim)
        pairs = sum(len(t.children) * (len(t.children) - 1) for t in local_trees(state.taxonomy))
        margins = compute_level_margins(state.taxonomy, state.centers)
        tree_sweep(state, margins, 0.01, 1)
        times = []
        for _ in range(args.reps):
            start = time.perf_counter()
            tree_sweep(state, margins, 0.01, args.passes)
            times.append(time.perf_counter() - start)
        med = float(np.median(times))
        print(f"{n}\t{pairs}\t{med * 1e3:.2f}\t{med / (pairs * args.passes) * 1e6:.4f}")


if __name__ == "__main__":
    main()

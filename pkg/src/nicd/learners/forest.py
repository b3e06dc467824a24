"""Random forest of unpruned randomized trees.

Each tree is grown on a bootstrap sample whose instances are drawn from the
normalized instance-weight distribution (uniform when unweighted).  The
classifier score sums the leaf class counts of all trees and normalizes.
"""
from __future__ import annotations

import math

import numpy as np

from .._rng import derive_seed, make_rng
from ._base import argmax_tiebreak
from .tree import TreeBuilder, route_counts


def default_features(n_features: int) -> int:
    return int(math.log2(max(n_features, 1))) + 1


class RandomForest:
    def __init__(self, roots):
        self.roots = roots

    def leaf_counts(self, Q) -> np.ndarray:
        total = route_counts(self.roots[0], Q)
        for r in self.roots[1:]:
            total += route_counts(r, Q)
        return total

    def class_scores(self, Q) -> np.ndarray:
        counts = self.leaf_counts(Q)
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, Q, priors) -> np.ndarray:
        return argmax_tiebreak(self.leaf_counts(Q), priors)


def fit(Z, y, w, schema, n_classes, params, rng):
    n = len(y)
    k = schema.n_features
    m = int(params["features"]) or default_features(k)
    m = min(m, k)
    p = w / w.sum()
    base = int(rng.integers(0, 2**63))
    roots = []
    for t in range(int(params["trees"])):
        tree_rng = make_rng(derive_seed(base, "tree", t))
        sample = tree_rng.choice(n, size=n, replace=True, p=p)
        builder = TreeBuilder(schema, n_classes, criterion="gain", min_leaf=1.0,
                              max_features=m, rng=tree_rng)
        roots.append(builder.build(Z[sample], y[sample], np.ones(n)))
    return RandomForest(roots)

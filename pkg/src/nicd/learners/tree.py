"""Decision trees over weighted counts.

``fit_decision_tree`` grows a C4.5-like tree: gain-ratio splits (restricted
to candidates with at least average gain), binary thresholds on numeric
features, one branch per observed value on categorical features, and
bottom-up pessimistic-error pruning.  A :class:`TreeBuilder` with ``criterion="gain"`` and
``max_features`` set is the unpruned randomized tree used by the forest.

Every node keeps its weighted class counts; a leaf's classifier score for a
class is that class's share of the training weight reaching the leaf.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import entr
from scipy.stats import beta

from ._base import argmax_tiebreak

_EPS = 1e-10
_LN2 = math.log(2.0)
MAX_DEPTH = 200


class Node:
    __slots__ = ("counts", "feature", "threshold", "children")

    def __init__(self, counts):
        self.counts = counts
        self.feature = -1
        self.threshold = None
        self.children = None  # [left, right] for numeric, {code: node} for categorical

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    def make_leaf(self):
        self.feature = -1
        self.threshold = None
        self.children = None

    def n_leaves(self) -> int:
        if self.is_leaf:
            return 1
        kids = self.children.values() if isinstance(self.children, dict) else self.children
        return sum(k.n_leaves() for k in kids)


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Entropy (bits) of each row of a count matrix (or of a single vector)."""
    counts = np.asarray(counts, dtype=float)
    tot = counts.sum(axis=-1, keepdims=True)
    p = counts / np.maximum(tot, 1e-300)
    return entr(p).sum(axis=-1) / _LN2


def _numeric_split(x, y, w, C, min_leaf, parent_h, mdl):
    n = len(x)
    if n < 2:
        return None
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]
    W = np.zeros((n, C))
    W[np.arange(n), ys] = ws
    left = np.cumsum(W, axis=0)[:-1]
    right = W.sum(axis=0) - left
    nl = left.sum(axis=1)
    nr = right.sum(axis=1)
    N = float(ws.sum())
    ok = (xs[:-1] < xs[1:]) & (nl >= min_leaf - _EPS) & (nr >= min_leaf - _EPS)
    if not ok.any():
        return None
    cand = np.flatnonzero(ok)
    child_h = (nl[cand] * _entropy(left[cand]) + nr[cand] * _entropy(right[cand])) / N
    gains = parent_h - child_h
    b = int(np.argmax(gains))
    i = cand[b]
    gain = float(gains[b])
    if mdl:
        # C4.5's penalty for choosing among many thresholds
        gain -= math.log2(len(cand)) / N if len(cand) > 1 else 0.0
    pl, pr = nl[i] / N, nr[i] / N
    split_info = -(pl * math.log2(pl) + pr * math.log2(pr))
    t = 0.5 * (xs[i] + xs[i + 1])
    if not xs[i] <= t < xs[i + 1]:
        t = xs[i]
    return gain, split_info, float(t)


def _categorical_split(codes, y, w, C, V, min_leaf, parent_h):
    table = np.zeros((V, C))
    np.add.at(table, (codes, y), w)
    sizes = table.sum(axis=1)
    present = sizes > 0
    if np.count_nonzero(sizes >= min_leaf - _EPS) < 2:
        return None
    N = sizes.sum()
    child_h = (sizes[present] * _entropy(table[present])).sum() / N
    p = sizes[present] / N
    split_info = float(-(p * np.log2(p)).sum())
    return float(parent_h - child_h), split_info, None


class TreeBuilder:
    def __init__(self, schema, n_classes, *, criterion="gain_ratio", min_leaf=2.0,
                 max_features=None, rng=None, mdl=True):
        self.schema = schema
        self.C = n_classes
        self.criterion = criterion
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng
        self.mdl = mdl

    def build(self, Z, y, w) -> Node:
        self.Z, self.y, self.w = Z, y, w
        return self._grow(np.arange(len(y)), 0)

    def _evaluate(self, f, idx, parent_h):
        x = self.Z[idx, f]
        if self.schema.cat_mask[f]:
            return _categorical_split(x.astype(np.int64), self.y[idx], self.w[idx], self.C,
                                      int(self.schema.n_cats[f]), self.min_leaf, parent_h)
        return _numeric_split(x, self.y[idx], self.w[idx], self.C, self.min_leaf, parent_h,
                              self.mdl and self.criterion == "gain_ratio")

    def _choose(self, idx, counts):
        parent_h = float(_entropy(counts))
        k = self.schema.n_features
        if self.max_features is None:
            results = []
            for f in range(k):
                r = self._evaluate(f, idx, parent_h)
                if r is not None and r[0] > _EPS:
                    results.append((f, r))
            if not results:
                return None
            if self.criterion == "gain":
                return max(results, key=lambda fr: fr[1][0])
            avg = sum(r[0] for _, r in results) / len(results)
            best, best_ratio = None, -np.inf
            for f, r in results:
                if r[0] >= avg - _EPS and r[1] > _EPS:
                    ratio = r[0] / r[1]
                    if ratio > best_ratio:
                        best, best_ratio = (f, r), ratio
            return best
        # random subspace: try max_features random features and keep going
        # through the rest until some split has positive gain
        order = self.rng.permutation(k)
        best = None
        for n_tried, f in enumerate(order, start=1):
            r = self._evaluate(int(f), idx, parent_h)
            if r is not None and r[0] > _EPS and (best is None or r[0] > best[1][0]):
                best = (int(f), r)
            if n_tried >= self.max_features and best is not None:
                break
        return best

    def _grow(self, idx, depth) -> Node:
        counts = np.bincount(self.y[idx], weights=self.w[idx], minlength=self.C)
        node = Node(counts)
        total = counts.sum()
        if depth >= MAX_DEPTH or total < 2 * self.min_leaf - _EPS or counts.max() >= total - _EPS:
            return node
        choice = self._choose(idx, counts)
        if choice is None:
            return node
        f, (_, _, t) = choice
        x = self.Z[idx, f]
        node.feature = f
        if t is None:
            codes = x.astype(np.int64)
            node.children = {}
            for v in np.unique(codes):
                node.children[int(v)] = self._grow(idx[codes == v], depth + 1)
        else:
            node.threshold = t
            go_left = x <= t
            node.children = [self._grow(idx[go_left], depth + 1), self._grow(idx[~go_left], depth + 1)]
        return node


def route_counts(node: Node, Z: np.ndarray) -> np.ndarray:
    """Raw class counts of the leaf each row of ``Z`` lands in.

    A categorical value with no branch stops at the splitting node and uses
    that node's counts.
    """
    out = np.zeros((len(Z), len(node.counts)))
    _route(node, Z, np.arange(len(Z)), out)
    return out


def _route(node, Z, idx, out):
    if idx.size == 0:
        return
    if node.is_leaf:
        out[idx] = node.counts
        return
    x = Z[idx, node.feature]
    if node.threshold is not None:
        left = x <= node.threshold
        _route(node.children[0], Z, idx[left], out)
        _route(node.children[1], Z, idx[~left], out)
        return
    codes = x.astype(np.int64)
    handled = np.zeros(idx.size, dtype=bool)
    for v, child in node.children.items():
        m = codes == v
        if m.any():
            handled |= m
            _route(child, Z, idx[m], out)
    if not handled.all():
        out[idx[~handled]] = node.counts


# ------------------------------------------------------------------ pruning

def pessimistic_errors(counts: np.ndarray, cf: float) -> float:
    """Upper ``cf`` confidence bound on a leaf's error count (exact binomial limit)."""
    N = float(counts.sum())
    if N <= 0:
        return 0.0
    E = N - float(counts.max())
    return N * float(beta.ppf(1.0 - cf, E + 1.0, max(N - E, _EPS)))


def prune(node: Node, cf: float) -> float:
    """Subtree replacement, bottom-up; returns the estimated errors of the result."""
    if node.is_leaf:
        return pessimistic_errors(node.counts, cf)
    kids = node.children.values() if isinstance(node.children, dict) else node.children
    subtree = sum(prune(k, cf) for k in kids)
    as_leaf = pessimistic_errors(node.counts, cf)
    if as_leaf <= subtree + 0.1:
        node.make_leaf()
        return as_leaf
    return subtree


class DecisionTree:
    def __init__(self, root: Node):
        self.root = root

    def leaf_counts(self, Q) -> np.ndarray:
        return route_counts(self.root, Q)

    def class_scores(self, Q) -> np.ndarray:
        counts = self.leaf_counts(Q)
        return counts / counts.sum(axis=1, keepdims=True)

    def predict(self, Q, priors) -> np.ndarray:
        return argmax_tiebreak(self.leaf_counts(Q), priors)


def fit_decision_tree(Z, y, w, schema, n_classes, params, rng):
    builder = TreeBuilder(schema, n_classes, criterion="gain_ratio", min_leaf=float(params["min_leaf"]))
    root = builder.build(Z, y, w)
    prune(root, float(params["confidence"]))
    return DecisionTree(root)

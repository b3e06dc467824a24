"""Ordered rule list learned RIPPER-style.

Classes are handled from least to most frequent; the most frequent one
becomes the default rule.  For each class, rules are grown on two thirds of
the remaining data by adding the condition with the best FOIL gain until the
rule covers no negatives, then the final conditions are pruned back to the
prefix with the best ``(p - n) / (p + n)`` on the held-out third.  A class
stops producing rules once a pruned rule errs on more than half of the
pruning data it covers, or covers too little positive weight.  There is no
global optimisation pass.

The classifier score of a label is its weighted share among the training
instances first covered by the rule that fires.
"""
from __future__ import annotations

import math

import numpy as np

from .._rng import round_half_up

LE, GT, EQ = "<=", ">", "=="
_MAX_CONDITIONS = 25


def _satisfies(Z, cond) -> np.ndarray:
    f, op, v = cond
    x = Z[:, f]
    if op == LE:
        return x <= v
    if op == GT:
        return x > v
    return x == v


def covers(Z, conds) -> np.ndarray:
    m = np.ones(len(Z), dtype=bool)
    for c in conds:
        m &= _satisfies(Z, c)
    return m


def _foil(p1, n1, base_info):
    with np.errstate(divide="ignore", invalid="ignore"):
        g = p1 * (np.log2(p1 / (p1 + n1)) - base_info)
    return np.where(p1 > 0, g, -np.inf)


def _best_condition(Z, is_pos, w, schema, base_info):
    best_gain, best = 0.0, None
    for f in range(schema.n_features):
        x = Z[:, f]
        wp = np.where(is_pos, w, 0.0)
        wn = np.where(is_pos, 0.0, w)
        if schema.cat_mask[f]:
            codes = x.astype(np.int64)
            V = int(schema.n_cats[f])
            p1 = np.bincount(codes, weights=wp, minlength=V)
            n1 = np.bincount(codes, weights=wn, minlength=V)
            g = _foil(p1, n1, base_info)
            v = int(np.argmax(g))
            if g[v] > best_gain + 1e-12:
                best_gain, best = float(g[v]), (f, EQ, float(v))
            continue
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cp = np.cumsum(wp[order])[:-1]
        cn = np.cumsum(wn[order])[:-1]
        ok = xs[:-1] < xs[1:]
        if not ok.any():
            continue
        P, N = wp.sum(), wn.sum()
        cut = np.flatnonzero(ok)
        thr = 0.5 * (xs[cut] + xs[cut + 1])
        for op, p1, n1 in ((LE, cp[cut], cn[cut]), (GT, P - cp[cut], N - cn[cut])):
            g = _foil(p1, n1, base_info)
            i = int(np.argmax(g))
            if g[i] > best_gain + 1e-12:
                best_gain, best = float(g[i]), (f, op, float(thr[i]))
    return best


def grow_rule(Z, is_pos, w, schema) -> list:
    conds = []
    cover = np.ones(len(Z), dtype=bool)
    while len(conds) < _MAX_CONDITIONS:
        p0 = w[cover & is_pos].sum()
        n0 = w[cover & ~is_pos].sum()
        if n0 <= 0 or p0 <= 0:
            break
        base_info = math.log2(p0 / (p0 + n0))
        c = _best_condition(Z[cover], is_pos[cover], w[cover], schema, base_info)
        if c is None:
            break
        conds.append(c)
        cover &= _satisfies(Z, c)
    return conds


def prune_rule(conds, Z, is_pos, w) -> list:
    if not conds or len(Z) == 0:
        return conds
    best_len, best_val = len(conds), -np.inf
    m = np.ones(len(Z), dtype=bool)
    for L in range(1, len(conds) + 1):
        m &= _satisfies(Z, conds[L - 1])
        p = w[m & is_pos].sum()
        n = w[m & ~is_pos].sum()
        val = (p - n) / (p + n) if p + n > 0 else -np.inf
        if val > best_val:
            best_len, best_val = L, val
    return conds[:best_len]


def _grow_prune_split(pos_idx, neg_idx, rng):
    grow, prune = [], []
    for idx in (pos_idx, neg_idx):
        idx = idx[rng.permutation(idx.size)]
        n_grow = round_half_up(idx.size * 2 / 3)
        grow.append(idx[:n_grow])
        prune.append(idx[n_grow:])
    return np.concatenate(grow), np.concatenate(prune)


class RuleList:
    def __init__(self, rules, default_class, dists, default_dist):
        self.rules = rules  # list of (conds, class)
        self.default_class = default_class
        self.dists = dists
        self.default_dist = default_dist

    def firing_rule(self, Q) -> np.ndarray:
        which = np.full(len(Q), len(self.rules), dtype=np.int64)
        open_ = np.ones(len(Q), dtype=bool)
        for r, (conds, _) in enumerate(self.rules):
            m = open_ & covers(Q, conds)
            which[m] = r
            open_ &= ~m
        return which

    def class_scores(self, Q) -> np.ndarray:
        table = np.vstack(self.dists + [self.default_dist])
        table = table / table.sum(axis=1, keepdims=True)
        return table[self.firing_rule(Q)]

    def predict(self, Q, priors) -> np.ndarray:
        labels = np.array([c for _, c in self.rules] + [self.default_class], dtype=np.int64)
        return labels[self.firing_rule(Q)]


def fit(Z, y, w, schema, n_classes, params, rng):
    max_rules = int(params["max_rules"])
    min_cov = float(params["min_coverage"])
    class_w = np.bincount(y, weights=w, minlength=n_classes)
    present = [c for c in np.argsort(class_w, kind="stable") if class_w[c] > 0]
    remaining = np.ones(len(y), dtype=bool)
    rules = []
    for c in present[:-1]:
        while len(rules) < max_rules:
            pos = remaining & (y == c)
            if w[pos].sum() < min_cov:
                break
            neg = remaining & (y != c)
            grow, prune = _grow_prune_split(np.flatnonzero(pos), np.flatnonzero(neg), rng)
            is_pos = y == c
            conds = grow_rule(Z[grow], is_pos[grow], w[grow], schema)
            conds = prune_rule(conds, Z[prune], is_pos[prune], w[prune])
            if not conds:
                break
            if prune.size:
                m = covers(Z[prune], conds)
                p = w[prune][m & is_pos[prune]].sum()
                n = w[prune][m & ~is_pos[prune]].sum()
                if p + n > 0 and n / (p + n) > 0.5:
                    break
            covered = remaining & covers(Z, conds)
            if w[covered & is_pos].sum() < min_cov:
                break
            rules.append((conds, int(c)))
            remaining &= ~covered
    left = np.bincount(y[remaining], weights=w[remaining], minlength=n_classes)
    default = int(np.argmax(left)) if left.sum() > 0 else int(present[-1])
    # coverage distributions in firing order over the full training set
    dists = []
    open_ = np.ones(len(y), dtype=bool)
    for conds, _ in rules:
        m = open_ & covers(Z, conds)
        dists.append(np.bincount(y[m], weights=w[m], minlength=n_classes))
        open_ &= ~m
    default_dist = np.bincount(y[open_], weights=w[open_], minlength=n_classes)
    if default_dist.sum() <= 0:
        default_dist = class_w.astype(float)
    return RuleList(rules, default, dists, default_dist)

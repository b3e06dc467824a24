"""Naive Bayes over weighted counts.

Categorical likelihoods are Laplace-smoothed weighted frequencies; numeric
likelihoods are Gaussians fitted with weighted means and variances.  Class
priors are not smoothed, so a class absent from training is never predicted.
"""
from __future__ import annotations

import numpy as np

_VAR_FLOOR = 1e-9


class NaiveBayes:
    def __init__(self, log_prior, num, mu, var, cat, log_tables):
        self.log_prior = log_prior
        self.num, self.mu, self.var = num, mu, var
        self.cat, self.log_tables = cat, log_tables

    def log_joint(self, Q) -> np.ndarray:
        L = np.broadcast_to(self.log_prior, (len(Q), len(self.log_prior))).copy()
        if self.num.size:
            x = Q[:, self.num][:, None, :]
            L += (-0.5 * np.log(2 * np.pi * self.var)[None] - 0.5 * (x - self.mu[None]) ** 2 / self.var[None]).sum(axis=2)
        for j, table in zip(self.cat, self.log_tables):
            L += table[Q[:, j].astype(np.int64)]
        return L

    def class_scores(self, Q) -> np.ndarray:
        L = self.log_joint(Q)
        L = L - L.max(axis=1, keepdims=True)
        P = np.exp(L)
        return P / P.sum(axis=1, keepdims=True)


def fit(Z, y, w, schema, n_classes, params, rng):
    C = n_classes
    class_w = np.bincount(y, weights=w, minlength=C)
    with np.errstate(divide="ignore"):
        log_prior = np.log(class_w / class_w.sum())
    num = schema.numeric
    mu = np.zeros((C, num.size))
    var = np.ones((C, num.size))
    if num.size:
        Xn = Z[:, num]
        floor = _VAR_FLOOR * max(float(Xn.var(axis=0).max()), 1.0)
        for c in range(C):
            m = y == c
            if class_w[c] <= 0:
                continue
            wc = w[m][:, None]
            mu[c] = (wc * Xn[m]).sum(axis=0) / class_w[c]
            var[c] = (wc * (Xn[m] - mu[c]) ** 2).sum(axis=0) / class_w[c]
        var = np.maximum(var, floor)
    tables = []
    for j in schema.categorical:
        V = int(schema.n_cats[j])
        counts = np.zeros((V, C))
        np.add.at(counts, (Z[:, j].astype(np.int64), y), w)
        tables.append(np.log((counts + 1.0) / (class_w[None, :] + V)))
    return NaiveBayes(log_prior, num, mu, var, schema.categorical, tables)

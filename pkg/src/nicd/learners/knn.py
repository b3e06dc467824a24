"""k-nearest neighbours with weighted votes.

Distances mix min-max scaled Euclidean differences on numeric features with
0/1 overlap on categorical ones (HEOM).  A neighbour's vote counts with its
instance weight, so a class's score is the weighted share of the ``k``
neighbours that carry that class.
"""
from __future__ import annotations

import numpy as np

from ._base import argmax_tiebreak

_CHUNK = 256


def heom_distances(Q: np.ndarray, T: np.ndarray, schema) -> np.ndarray:
    """Squared HEOM distances between encoded query rows and training rows."""
    num = schema.numeric
    cat = schema.categorical
    span = schema.hi[num] - schema.lo[num]
    span = np.where(span > 0, span, 1.0)
    Qn, Tn = Q[:, num] / span, T[:, num] / span
    Qc, Tc = Q[:, cat], T[:, cat]
    D = np.empty((len(Q), len(T)))
    for s in range(0, len(Q), _CHUNK):
        e = min(s + _CHUNK, len(Q))
        d = np.zeros((e - s, len(T)))
        if num.size:
            diff = Qn[s:e, None, :] - Tn[None, :, :]
            d += np.einsum("ijk,ijk->ij", diff, diff)
        if cat.size:
            d += (Qc[s:e, None, :] != Tc[None, :, :]).sum(axis=2)
        D[s:e] = d
    return D


def nearest(D: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` closest columns per row; equal distances keep the lower index."""
    k = min(k, D.shape[1])
    return np.argsort(D, axis=1, kind="stable")[:, :k]


class KNN:
    def __init__(self, Z, y, w, schema, n_classes, k):
        self.Z, self.y, self.w = Z, y, w
        self.schema = schema
        self.n_classes = n_classes
        self.k = k

    def neighbour_votes(self, Q, exclude_self=False) -> np.ndarray:
        D = heom_distances(Q, self.Z, self.schema)
        if exclude_self:
            np.fill_diagonal(D, np.inf)
        k = min(self.k, len(self.y) - (1 if exclude_self else 0))
        idx = nearest(D, k)
        votes = np.zeros((len(Q), self.n_classes))
        rows = np.repeat(np.arange(len(Q)), idx.shape[1])
        np.add.at(votes, (rows, self.y[idx].ravel()), self.w[idx].ravel())
        return votes

    def class_scores(self, Q) -> np.ndarray:
        votes = self.neighbour_votes(Q)
        return votes / votes.sum(axis=1, keepdims=True)

    def predict(self, Q, priors) -> np.ndarray:
        return argmax_tiebreak(self.class_scores(Q), priors)


def fit(Z, y, w, schema, n_classes, params, rng):
    return KNN(Z, y, w, schema, n_classes, int(params["k"]))


def loo_predictions(Z, y, schema, n_classes, k, priors=None) -> np.ndarray:
    """Leave-one-out kNN labels for every row of a training matrix (unit weights)."""
    if priors is None:
        priors = np.bincount(y, minlength=n_classes) / len(y)
    model = KNN(Z, y, np.ones(len(y)), schema, n_classes, k)
    return argmax_tiebreak(model.neighbour_votes(Z, exclude_self=True), priors)

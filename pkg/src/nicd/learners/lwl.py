"""Locally weighted learning as a distance-weighted local majority vote.

Each query looks at its ``k`` nearest training instances and weighs them
with a linear kernel whose bandwidth is the distance to the ``k``-th
neighbour, times the instance weight.
"""
from __future__ import annotations

import numpy as np

from .knn import heom_distances, nearest


class LWL:
    def __init__(self, Z, y, w, schema, n_classes, k):
        self.Z, self.y, self.w = Z, y, w
        self.schema = schema
        self.n_classes = n_classes
        self.k = k

    def class_scores(self, Q) -> np.ndarray:
        D = np.sqrt(heom_distances(Q, self.Z, self.schema))
        idx = nearest(D, self.k)
        d = np.take_along_axis(D, idx, axis=1)
        bandwidth = d[:, -1:] * 1.0001 + 1e-12
        kern = 1.0 - d / bandwidth
        votes = np.zeros((len(Q), self.n_classes))
        rows = np.repeat(np.arange(len(Q)), idx.shape[1])
        np.add.at(votes, (rows, self.y[idx].ravel()), (kern * self.w[idx]).ravel())
        total = votes.sum(axis=1, keepdims=True)
        return votes / total


def fit(Z, y, w, schema, n_classes, params, rng):
    return LWL(Z, y, w, schema, n_classes, int(params["k"]))

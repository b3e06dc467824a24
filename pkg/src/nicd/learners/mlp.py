"""One-hidden-layer perceptron trained with backpropagation.

Sigmoid units throughout, one output per class with one-hot targets,
numeric inputs min-max scaled and categorical inputs one-hot encoded.  An
instance weight scales that instance's output error term, i.e. the update
uses ``weight * (t - o) * f'(net)``.  Mini-batch gradient descent with
momentum; the batch gradient is the mean of the per-instance terms.
"""
from __future__ import annotations

import numpy as np


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


class MLP:
    def __init__(self, schema, W1, b1, W2, b2):
        self.schema = schema
        self.W1, self.b1, self.W2, self.b2 = W1, b1, W2, b2

    def outputs(self, Q) -> np.ndarray:
        A = self.schema.one_hot(Q)
        H = _sigmoid(A @ self.W1 + self.b1)
        return _sigmoid(H @ self.W2 + self.b2)

    def class_scores(self, Q) -> np.ndarray:
        O = self.outputs(Q)
        return O / O.sum(axis=1, keepdims=True)


def hidden_width(n_inputs: int, n_outputs: int) -> int:
    return max(4, (n_inputs + n_outputs) // 2)


def fit(Z, y, w, schema, n_classes, params, rng):
    A = schema.one_hot(Z)
    n, d = A.shape
    C = n_classes
    h = int(params["hidden"]) or hidden_width(d, C)
    lr = float(params["lr"])
    mom = float(params["momentum"])
    batch = int(params["batch"])
    W1 = rng.uniform(-0.05, 0.05, size=(d, h))
    b1 = rng.uniform(-0.05, 0.05, size=h)
    W2 = rng.uniform(-0.05, 0.05, size=(h, C))
    b2 = rng.uniform(-0.05, 0.05, size=C)
    T = np.zeros((n, C))
    T[np.arange(n), y] = 1.0
    vW1 = np.zeros_like(W1)
    vb1 = np.zeros_like(b1)
    vW2 = np.zeros_like(W2)
    vb2 = np.zeros_like(b2)
    for _ in range(int(params["epochs"])):
        order = rng.permutation(n)
        for s in range(0, n, batch):
            b = order[s:s + batch]
            a = A[b]
            H = _sigmoid(a @ W1 + b1)
            O = _sigmoid(H @ W2 + b2)
            d_out = w[b, None] * (T[b] - O) * O * (1.0 - O)
            d_hid = (d_out @ W2.T) * H * (1.0 - H)
            m = len(b)
            vW2 = mom * vW2 + lr * (H.T @ d_out) / m
            vb2 = mom * vb2 + lr * d_out.sum(axis=0) / m
            vW1 = mom * vW1 + lr * (a.T @ d_hid) / m
            vb1 = mom * vb1 + lr * d_hid.sum(axis=0) / m
            W2 += vW2
            b2 += vb2
            W1 += vW1
            b1 += vb1
    return MLP(schema, W1, b1, W2, b2)

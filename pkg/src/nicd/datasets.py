"""Bundled datasets and synthetic fixtures.

Ten small public classification datasets ship with the package (see
``data/README.md`` for their origin), plus three synthetic fixtures with a
known, noise-free concept.  The fixtures are regenerated bit-for-bit by the
generator functions below; the bundled CSVs are their default draws.
"""
from __future__ import annotations

from importlib.resources import files

import numpy as np

from ._rng import make_rng
from .datakit import Dataset, from_arrays, load_dataset

#: the small real-world corpus used for experiments
DESK_CORPUS = ("breast_w", "crabs", "glass2", "heart_c", "iris", "penguins", "pima", "wdbc", "wine", "zoo")
#: synthetic fixtures with known structure
FIXTURES = ("two_blobs", "xor", "cat_rule")


def data_path(name: str):
    return files("nicd") / "data" / f"{name}.csv"


def available() -> tuple:
    return DESK_CORPUS + FIXTURES


def load(name: str) -> Dataset:
    """One bundled dataset by name."""
    if name not in available():
        raise KeyError(f"no bundled dataset {name!r}; available: {', '.join(available())}")
    return load_dataset(data_path(name), name=name)


def load_corpus(names=None) -> list[Dataset]:
    """Bundled datasets, the real-world desk corpus by default."""
    return [load(n) for n in (DESK_CORPUS if names is None else names)]


def two_blobs(n: int = 500, seed: int = 0, separation: float = 6.0) -> Dataset:
    """Two unit-variance Gaussian blobs in 2-D, half the instances each.

    Centres sit at ``-separation/2`` and ``+separation/2`` on both axes, so
    the default separation leaves the classes essentially disjoint.
    """
    rng = make_rng(seed)
    n0 = n // 2
    y = np.r_[np.zeros(n0, dtype=int), np.ones(n - n0, dtype=int)]
    centre = np.where(y[:, None] == 0, -separation / 2, separation / 2)
    X = np.round(centre + rng.standard_normal((n, 2)), 6)
    return from_arrays(X, np.array(["a", "b"])[y], name="two_blobs", feature_names=["x1", "x2"])


def xor(n: int = 400, seed: int = 0, margin: float = 0.1) -> Dataset:
    """Points in the square ``[-1, 1]^2`` labelled by the sign of ``x1 * x2``.

    A band of width ``margin`` around both axes is left empty.
    """
    rng = make_rng(seed)
    mag = rng.uniform(margin, 1.0, size=(n, 2))
    sign = np.where(rng.random((n, 2)) < 0.5, -1.0, 1.0)
    X = np.round(mag * sign, 6)
    y = np.where(X[:, 0] * X[:, 1] > 0, "same", "diff")
    return from_arrays(X, y, name="xor", classes=["diff", "same"], feature_names=["x1", "x2"])


def cat_rule(n: int = 300, seed: int = 0, n_features: int = 6, n_values: int = 3) -> Dataset:
    """Categorical features; class ``yes`` iff ``f1 == f2`` or ``f3`` takes its first value."""
    rng = make_rng(seed)
    X = rng.integers(0, n_values, size=(n, n_features)).astype(float)
    y = np.where((X[:, 0] == X[:, 1]) | (X[:, 2] == 0), "yes", "no")
    return from_arrays(X, y, name="cat_rule", classes=["no", "yes"],
                       feature_names=[f"f{j + 1}" for j in range(n_features)],
                       categorical=tuple(range(n_features)))


GENERATORS = {"two_blobs": two_blobs, "xor": xor, "cat_rule": cat_rule}

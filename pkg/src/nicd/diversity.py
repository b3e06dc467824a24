"""Classifier output difference, learner clustering and diverse-set selection.

The distance between two learners is the fraction of instances on which
their out-of-fold predictions differ, averaged over a corpus of datasets.
Learners are clustered bottom-up on that distance and one representative
(the most accurate member) is kept from each cluster.

Clustering is carried out on exact rationals: every float distance is
converted to a :class:`fractions.Fraction` without rounding, linkage updates
are exact, and ties are therefore real ties.  Among equally close pairs the
one whose lowest leaf indices are lexicographically smallest merges first.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._rng import derive_seed
from .datakit import Dataset
from .learners import LearnerSpec, PredictionRecord, cross_val_predictions, parse_spec

__all__ = [
    "PredictionRecord", "CodMatrix", "Merge", "Dendrogram", "LINKAGES", "DEFAULT_CUT",
    "cod", "cod_matrix", "agglomerative_cluster", "cut_dendrogram", "cut_to_k",
    "select_representatives", "select_diverse", "Selection", "read_cod_matrix", "read_dendrogram",
]

LINKAGES = ("single", "complete", "average")
DEFAULT_CUT = 0.18


def cod(a: PredictionRecord, b: PredictionRecord) -> float:
    """Fraction of instances on which two prediction records disagree."""
    pa = np.asarray(a.predictions if isinstance(a, PredictionRecord) else a)
    pb = np.asarray(b.predictions if isinstance(b, PredictionRecord) else b)
    if pa.shape != pb.shape:
        raise ValueError(f"prediction records differ in length ({pa.size} vs {pb.size})")
    if isinstance(a, PredictionRecord) and isinstance(b, PredictionRecord) and a.dataset != b.dataset:
        raise ValueError(f"records come from different datasets ({a.dataset!r}, {b.dataset!r})")
    if pa.size == 0:
        return 0.0
    return float(np.count_nonzero(pa != pb)) / pa.size


# ---------------------------------------------------------------- matrices

@dataclass(frozen=True, eq=False)
class CodMatrix:
    """Symmetric learner distance matrix.

    Attributes
    ----------
    learners : tuple of LearnerSpec
    values : ndarray, shape (n, n)
        Mean pairwise output difference; zero diagonal.
    accuracies : ndarray, shape (n,)
        Mean out-of-fold accuracy of each learner over the corpus, or NaN
        when the matrix was built from raw values.
    corpus : tuple of str
        Names of the datasets averaged over.
    """

    learners: tuple
    values: np.ndarray
    accuracies: np.ndarray = None
    corpus: tuple = ()

    def __post_init__(self):
        V = np.array(self.values, dtype=float)
        n = len(self.learners)
        if V.shape != (n, n):
            raise ValueError(f"matrix shape {V.shape} does not match {n} learners")
        if not np.array_equal(V, V.T):
            raise ValueError("COD matrix must be symmetric")
        if np.any(np.diag(V) != 0):
            raise ValueError("COD matrix must have a zero diagonal")
        if np.any(V < 0) or np.any(V > 1):
            raise ValueError("COD values must lie in [0, 1]")
        V.flags.writeable = False
        acc = np.full(n, np.nan) if self.accuracies is None else np.array(self.accuracies, dtype=float)
        acc.flags.writeable = False
        object.__setattr__(self, "values", V)
        object.__setattr__(self, "accuracies", acc)
        object.__setattr__(self, "learners", tuple(self.learners))
        object.__setattr__(self, "corpus", tuple(self.corpus))

    def __len__(self) -> int:
        return len(self.learners)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CodMatrix):
            return NotImplemented
        return (self.learners == other.learners and self.corpus == other.corpus
                and np.array_equal(self.values, other.values)
                and np.array_equal(self.accuracies, other.accuracies, equal_nan=True))

    __hash__ = None

    @property
    def labels(self) -> list[str]:
        return [str(s) for s in self.learners]

    def to_text(self) -> str:
        """Tab-separated matrix preceded by ``#`` header lines.

        Values are written with ``repr`` so they read back bit-for-bit.
        """
        lines = ["# cod-matrix v1", "# corpus: " + ",".join(self.corpus),
                 "# accuracy: " + "\t".join(repr(float(a)) for a in self.accuracies),
                 "learner\t" + "\t".join(self.labels)]
        for lab, row in zip(self.labels, self.values):
            lines.append(lab + "\t" + "\t".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def read_cod_matrix(text: str) -> CodMatrix:
    corpus, acc, rows, names = (), None, [], None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("# corpus:"):
            body = line.split(":", 1)[1].strip()
            corpus = tuple(body.split(",")) if body else ()
        elif line.startswith("# accuracy:"):
            acc = [float(v) for v in line.split(":", 1)[1].split()]
        elif line.startswith("#"):
            continue
        elif names is None:
            names = line.split("\t")[1:]
        else:
            parts = line.split("\t")
            rows.append([float(v) for v in parts[1:]])
    if names is None:
        raise ValueError("no header row in COD matrix text")
    return CodMatrix(tuple(parse_spec(n) for n in names), np.array(rows).reshape(len(names), len(names)),
                     acc, corpus)


def _cv_cell(args):
    spec, ds, folds, seed = args
    rec = cross_val_predictions(spec, ds, folds, derive_seed(seed, "cod", ds.name))
    return rec.predictions, float(np.mean(rec.predictions == ds.y))


def cod_matrix(registry: Sequence, corpus: Iterable[Dataset], folds: int = 10, seed: int = 0,
               jobs: int = 1) -> CodMatrix:
    """Mean pairwise output difference of ``registry`` over ``corpus``.

    Every learner sees the same folds of a dataset; the fold seed depends on
    the dataset name only, so the result does not depend on corpus order.
    Training failures propagate as :class:`~nicd.learners.LearnerError`
    naming the learner and dataset.
    """
    specs = [parse_spec(s) for s in registry]
    corpus = sorted(corpus, key=lambda d: d.name)
    if len(specs) < 2:
        raise ValueError("need at least two learners")
    if not corpus:
        raise ValueError("need at least one dataset")
    cells = [(s, ds, folds, seed) for ds in corpus for s in specs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_cv_cell, cells))
    else:
        out = [_cv_cell(c) for c in cells]
    n = len(specs)
    per_ds = [[], []]  # cod matrices, accuracy vectors
    for d in range(len(corpus)):
        block = out[d * n:(d + 1) * n]
        P = np.vstack([p for p, _ in block])
        per_ds[0].append((P[:, None, :] != P[None, :, :]).mean(axis=2))
        per_ds[1].append([a for _, a in block])
    V = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            V[i, j] = math.fsum(m[i, j] for m in per_ds[0]) / len(corpus)
    acc = [math.fsum(a[i] for a in per_ds[1]) / len(corpus) for i in range(n)]
    return CodMatrix(tuple(specs), V, acc, tuple(d.name for d in corpus))


# -------------------------------------------------------------- clustering

@dataclass(frozen=True)
class Merge:
    """One agglomeration step; ids follow the usual linkage-matrix numbering.

    Leaves are ``0 .. n-1`` and the cluster formed at step ``s`` gets id
    ``n + s``.  ``a < b`` always.
    """

    a: int
    b: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    leaves: tuple
    merges: tuple
    linkage: str = "average"

    def __post_init__(self):
        if len(self.merges) != max(len(self.leaves) - 1, 0):
            raise ValueError("a dendrogram over n leaves needs n - 1 merges")
        h = [m.height for m in self.merges]
        if any(x > y for x, y in zip(h, h[1:])):
            raise ValueError("merge heights must be non-decreasing")

    def linkage_matrix(self) -> np.ndarray:
        """``(n-1, 4)`` array of ``[a, b, height, size]`` rows for plotting tools."""
        return np.array([[m.a, m.b, m.height, m.size] for m in self.merges], dtype=float).reshape(-1, 4)

    def to_text(self) -> str:
        lines = ["# dendrogram v1", f"# linkage: {self.linkage}"]
        lines += [f"leaf\t{i}\t{lab}" for i, lab in enumerate(self.leaves)]
        lines += [f"merge\t{m.a}\t{m.b}\t{m.height!r}\t{m.size}" for m in self.merges]
        return "\n".join(lines) + "\n"


def read_dendrogram(text: str) -> Dendrogram:
    leaves, merges, linkage = [], [], "average"
    for line in text.splitlines():
        if line.startswith("# linkage:"):
            linkage = line.split(":", 1)[1].strip()
            continue
        parts = line.split("\t")
        if parts[0] == "leaf":
            leaves.append(parts[2])
        elif parts[0] == "merge":
            merges.append(Merge(int(parts[1]), int(parts[2]), float(parts[3]), int(parts[4])))
    return Dendrogram(tuple(leaves), tuple(merges), linkage)


def _combine(linkage, d_ki, d_kj, n_i, n_j):
    if linkage == "single":
        return min(d_ki, d_kj)
    if linkage == "complete":
        return max(d_ki, d_kj)
    return (n_i * d_ki + n_j * d_kj) / (n_i + n_j)


def agglomerative_cluster(m, linkage: str = "average") -> Dendrogram:
    """Bottom-up clustering of a distance matrix.

    Parameters
    ----------
    m : CodMatrix or array_like
        Symmetric distances.  A bare array gets leaves ``"0", "1", ...``.
    linkage : {"average", "single", "complete"}

    Returns
    -------
    Dendrogram
        Merge heights are the exact linkage distances rounded once to float.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; choose from {', '.join(LINKAGES)}")
    if isinstance(m, CodMatrix):
        V, leaves = m.values, tuple(m.labels)
    else:
        V = np.asarray(m, dtype=float)
        leaves = tuple(str(i) for i in range(len(V)))
    n = len(V)
    # active clusters: id -> (lowest leaf, size); distances keyed by id pair
    active = {i: (i, 1) for i in range(n)}
    dist = {(i, j): Fraction(float(V[i, j])) for i in range(n) for j in range(i + 1, n)}
    merges = []
    for step in range(n - 1):
        best = None
        for (i, j), d in dist.items():
            key = (d, *sorted((active[i][0], active[j][0])))
            if best is None or key < best[0]:
                best = (key, i, j)
        (d, _, _), i, j = best
        new = n + step
        n_i, n_j = active[i][1], active[j][1]
        for k in active:
            if k in (i, j):
                continue
            d_ki = dist.pop((min(k, i), max(k, i)))
            d_kj = dist.pop((min(k, j), max(k, j)))
            dist[(k, new)] = _combine(linkage, d_ki, d_kj, n_i, n_j)
        del dist[(i, j)]
        active[new] = (min(active[i][0], active[j][0]), n_i + n_j)
        del active[i], active[j]
        merges.append(Merge(min(i, j), max(i, j), float(d), n_i + n_j))
    return Dendrogram(leaves, tuple(merges), linkage)


def _partition(d: Dendrogram, n_merges: int) -> list[list[int]]:
    n = len(d.leaves)
    members = {i: [i] for i in range(n)}
    for s, mg in enumerate(d.merges[:n_merges]):
        members[n + s] = sorted(members.pop(mg.a) + members.pop(mg.b))
    return sorted(members.values())


def cut_dendrogram(d: Dendrogram, height: float = DEFAULT_CUT) -> list[list[int]]:
    """Clusters left after undoing every merge above ``height``.

    Returns lists of leaf indices, each sorted, ordered by their first leaf.
    """
    if height < 0:
        raise ValueError("cut height must be non-negative")
    kept = sum(1 for mg in d.merges if mg.height <= height)
    return _partition(d, kept)


def cut_to_k(d: Dendrogram, k: int) -> list[list[int]]:
    """Partition into exactly ``k`` clusters (the last ``k - 1`` merges undone)."""
    n = len(d.leaves)
    if not 1 <= k <= max(n, 1):
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    return _partition(d, n - k)


def select_representatives(partition, criterion, learners=None) -> list:
    """Best member of each cluster under ``criterion``.

    Parameters
    ----------
    partition : list of list of int
        Leaf indices, as returned by :func:`cut_dendrogram`.
    criterion : sequence of float or mapping
        Score per leaf index (or per learner when ``learners`` is given and
        ``criterion`` is a mapping).  Ties go to the lower leaf index.
    learners : sequence, optional
        Objects to return in place of leaf indices.
    """
    out = []
    for cluster in partition:
        if isinstance(criterion, dict):
            keys = [learners[i] if learners is not None else i for i in cluster]
            scores = [criterion[k] for k in keys]
        else:
            scores = [float(criterion[i]) for i in cluster]
        best = cluster[max(range(len(cluster)), key=lambda t: (scores[t], -cluster[t]))]
        out.append(learners[best] if learners is not None else best)
    return out


@dataclass(frozen=True)
class Selection:
    learners: tuple
    matrix: CodMatrix
    dendrogram: Dendrogram
    partition: tuple


def select_diverse(registry, corpus, folds: int = 10, seed: int = 0, linkage: str = "average",
                   height: float | None = DEFAULT_CUT, k: int | None = None, jobs: int = 1) -> Selection:
    """COD matrix, dendrogram, cut and representatives in one call.

    ``k`` (cluster count) takes precedence over ``height`` when given.
    """
    m = cod_matrix(registry, corpus, folds, seed, jobs=jobs)
    d = agglomerative_cluster(m, linkage)
    part = cut_to_k(d, k) if k is not None else cut_dendrogram(d, height)
    chosen = select_representatives(part, m.accuracies, m.learners)
    return Selection(tuple(chosen), m, d, tuple(tuple(c) for c in part))

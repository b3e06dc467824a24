"""Per-instance correctness estimates and the noise handlers built on them.

The correctness score of a training instance is the fraction of a learner
set whose out-of-fold prediction equals the instance's label.  It drives

* filtering: drop instances misclassified by at least ``threshold`` of the set;
* weighting: train with the score as the instance weight.

The biased variants use one learner's own out-of-fold classifier score, and
the baselines (repeated edited nearest neighbour, classification filter,
ensemble filter, cross-validated committees, iterative partitioning) are the
usual comparison points.

Every filter keeps at least one instance of each class present in its
input: when a class would vanish, its highest-scoring instance is retained.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import derive_seed
from .datakit import Dataset
from .learners import (LearnerSpec, Schema, cross_val_predictions, parse_spec, parse_specs,
                       stratified_folds, train)
from .learners.knn import loo_predictions

__all__ = [
    "CorrectnessScores", "FilterOutcome", "ENSEMBLE_FILTER_TRIO",
    "estimate_correctness", "l_filter", "l_weights", "biased_scores", "biased_filter",
    "biased_weights", "renn_filter", "classification_filter", "ensemble_filter", "cvc_filter",
    "iterative_partitioning_filter", "write_audit", "read_audit",
]

#: decision tree, 1-NN and naive Bayes: three learners with different biases
ENSEMBLE_FILTER_TRIO = (LearnerSpec("decision_tree"), LearnerSpec("knn", (("k", 1),)),
                        LearnerSpec("naive_bayes"))


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CorrectnessScores:
    """Estimated probability that each training label is correct.

    Attributes
    ----------
    scores : ndarray of float
        One score in ``[0, 1]`` per training instance.
    ensemble_size : int
        Number of learners that voted.
    counts : ndarray of int
        How many of them predicted the instance's label out of fold.  For
        ensemble scores ``scores == counts / ensemble_size``.
    """

    scores: np.ndarray
    ensemble_size: int
    counts: np.ndarray = None

    def __post_init__(self):
        s = _frozen(self.scores, float).reshape(-1)
        if np.any(~(s >= 0)) or np.any(s > 1):
            raise ValueError("correctness scores must lie in [0, 1]")
        if self.ensemble_size < 1:
            raise ValueError("ensemble size must be at least 1")
        object.__setattr__(self, "scores", s)
        if self.counts is not None:
            c = _frozen(self.counts, np.int64).reshape(-1)
            if c.shape != s.shape or np.any(c < 0) or np.any(c > self.ensemble_size):
                raise ValueError("counts must be in [0, ensemble_size], one per score")
            object.__setattr__(self, "counts", c)

    def __len__(self) -> int:
        return len(self.scores)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorrectnessScores):
            return NotImplemented
        return (self.ensemble_size == other.ensemble_size and np.array_equal(self.scores, other.scores)
                and np.array_equal(self.counts, other.counts))

    __hash__ = None

    def miss_fraction(self) -> np.ndarray:
        """Fraction of the set that misclassified each instance."""
        if self.counts is not None:
            return (self.ensemble_size - self.counts) / self.ensemble_size
        return 1.0 - self.scores


@dataclass(frozen=True, eq=False)
class FilterOutcome:
    kept: np.ndarray
    removed: np.ndarray
    threshold: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "kept", _frozen(np.sort(self.kept), np.int64))
        object.__setattr__(self, "removed", _frozen(np.sort(self.removed), np.int64))
        if np.intersect1d(self.kept, self.removed).size:
            raise ValueError("kept and removed overlap")

    def __len__(self) -> int:
        return self.kept.size + self.removed.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FilterOutcome):
            return NotImplemented
        return (np.array_equal(self.kept, other.kept) and np.array_equal(self.removed, other.removed)
                and (self.threshold == other.threshold
                     or (np.isnan(self.threshold) and np.isnan(other.threshold))))

    __hash__ = None

    @property
    def mask(self) -> np.ndarray:
        """Boolean keep-mask over all instances."""
        m = np.zeros(len(self), dtype=bool)
        m[self.kept] = True
        return m

    def apply(self, ds: Dataset) -> Dataset:
        if len(ds) != len(self):
            raise ValueError(f"outcome covers {len(self)} instances, dataset has {len(ds)}")
        return ds.subset(self.kept)


def _outcome(y, remove, guard_score, threshold=float("nan")) -> FilterOutcome:
    """Build an outcome, retaining the best instance of any class that would vanish."""
    y = np.asarray(y)
    remove = np.array(remove, dtype=bool)
    guard_score = np.asarray(guard_score, dtype=float)
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        if remove[members].all():
            # highest score, lowest index among equals
            remove[members[np.argmax(guard_score[members])]] = False
    idx = np.arange(len(y))
    return FilterOutcome(idx[~remove], idx[remove], threshold)


# ------------------------------------------------------------------- scores

def estimate_correctness(L: Sequence, train_ds: Dataset, folds: int = 10, seed: int = 0,
                         records: bool = False):
    """Fraction of the learners in ``L`` whose out-of-fold prediction matches each label.

    All learners share the same folds.  With ``records=True`` the per-learner
    :class:`~nicd.learners.PredictionRecord` list is returned as well.
    """
    specs = parse_specs(L)
    if not specs:
        raise ValueError("the learner set is empty")
    recs = [cross_val_predictions(s, train_ds, folds, seed) for s in specs]
    counts = np.sum([r.correct(train_ds.y) for r in recs], axis=0).astype(np.int64)
    cs = CorrectnessScores(counts / len(specs), len(specs), counts)
    return (cs, recs) if records else cs


def l_filter(train_ds: Dataset, s: CorrectnessScores, threshold: float = 0.5,
             strict: bool = False) -> FilterOutcome:
    """Remove instances misclassified by at least ``threshold`` of the set.

    ``strict=True`` requires strictly more than ``threshold``.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    if len(s) != len(train_ds):
        raise ValueError(f"{len(s)} scores for {len(train_ds)} instances")
    miss = s.miss_fraction()
    remove = miss > threshold if strict else miss >= threshold
    return _outcome(train_ds.y, remove, s.scores, threshold)


def l_weights(s: CorrectnessScores) -> np.ndarray:
    """Scores as instance weights, with zero scores raised to ``1 / (2 |L|)``."""
    w = np.array(s.scores, dtype=float)
    w[w <= 0] = 1.0 / (2 * s.ensemble_size)
    return w


def biased_scores(spec, train_ds: Dataset, folds: int = 10, seed: int = 0) -> CorrectnessScores:
    """One learner's out-of-fold classifier score for each instance's own label.

    ``counts`` records whether the out-of-fold prediction was correct, so
    :func:`l_filter` on the result removes exactly the misclassified instances.
    """
    rec = cross_val_predictions(parse_spec(spec), train_ds, folds, seed)
    return CorrectnessScores(np.clip(rec.scores, 0.0, 1.0), 1, rec.correct(train_ds.y).astype(np.int64))


def biased_filter(train_ds: Dataset, spec, folds: int = 10, seed: int = 0,
                  scores: CorrectnessScores | None = None) -> FilterOutcome:
    """Remove the instances the learner itself misclassifies out of fold."""
    s = biased_scores(spec, train_ds, folds, seed) if scores is None else scores
    return _outcome(train_ds.y, s.counts == 0, s.scores)


def biased_weights(s: CorrectnessScores) -> np.ndarray:
    """Classifier scores as weights; zeros become half the smallest positive score."""
    w = np.array(s.scores, dtype=float)
    pos = w[w > 0]
    w[w <= 0] = 0.5 * pos.min() if pos.size else 1.0
    return w


# ---------------------------------------------------------------- baselines

def renn_filter(train_ds: Dataset, k: int = 5) -> FilterOutcome:
    """Repeated edited nearest neighbour.

    Each pass removes every remaining instance whose leave-one-out ``k``-NN
    label differs from its own; passes repeat until one removes nothing.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    M = len(train_ds)
    if M < k + 1:
        warnings.warn(f"RENN needs more than k={k} instances, got {M}; nothing removed", stacklevel=2)
        return FilterOutcome(np.arange(M), np.empty(0, dtype=np.int64))
    schema = Schema.fit(train_ds)
    Z = schema.transform(train_ds.X)
    y = train_ds.y
    C = train_ds.n_classes
    priors = np.bincount(y, minlength=C) / M
    alive = np.arange(M)
    guard = np.zeros(M)
    first = True
    while alive.size > k:
        pred = loo_predictions(Z[alive], y[alive], schema, C, k, priors)
        if first:
            guard[alive] = (pred == y[alive]).astype(float)
            first = False
        wrong = pred != y[alive]
        if not wrong.any():
            break
        alive = alive[~wrong]
    remove = np.ones(M, dtype=bool)
    remove[alive] = False
    return _outcome(y, remove, guard)


def classification_filter(train_ds: Dataset, spec="knn:k=1", folds: int = 10,
                          seed: int = 0) -> FilterOutcome:
    """One pass: remove the instances a single learner misclassifies out of fold."""
    rec = cross_val_predictions(parse_spec(spec), train_ds, folds, seed)
    return _outcome(train_ds.y, ~rec.correct(train_ds.y), rec.scores)


def ensemble_filter(train_ds: Dataset, trio: Sequence = ENSEMBLE_FILTER_TRIO, mode: str = "consensus",
                    folds: int = 10, seed: int = 0) -> FilterOutcome:
    """Remove instances misclassified out of fold by all (consensus) or most (majority) learners."""
    specs = parse_specs(trio)
    if len(specs) < 2:
        raise ValueError("the ensemble filter needs at least two learners")
    if mode not in ("consensus", "majority"):
        raise ValueError(f"mode must be 'consensus' or 'majority', got {mode!r}")
    s = estimate_correctness(specs, train_ds, folds, seed)
    misses = len(specs) - s.counts
    remove = misses == len(specs) if mode == "consensus" else 2 * misses > len(specs)
    return _outcome(train_ds.y, remove, s.scores)


def _committee_votes(train_ds: Dataset, rows: np.ndarray, parts: np.ndarray, n: int, spec,
                     seed: int, leave_out: bool) -> np.ndarray:
    """Correct-vote count per row of ``rows`` over ``n`` models.

    Model ``p`` is trained on every part except ``p`` (``leave_out``) or on
    part ``p`` alone.
    """
    sub = train_ds.subset(rows)
    counts = np.zeros(rows.size, dtype=np.int64)
    for p in range(n):
        mask = parts != p if leave_out else parts == p
        if not mask.any():
            continue
        model = train(spec, sub.subset(mask), seed=derive_seed(seed, "part", p))
        counts += model.predict(sub.X) == sub.y
    return counts


def cvc_filter(train_ds: Dataset, partitions: int = 3, spec="decision_tree",
               seed: int = 0) -> FilterOutcome:
    """Cross-validated committees: ``partitions`` leave-one-part-out models, consensus removal."""
    if partitions < 2:
        raise ValueError("need at least 2 partitions")
    M = len(train_ds)
    if partitions > M:
        raise ValueError(f"{partitions} partitions requested for {M} instances")
    spec = parse_spec(spec)
    parts = stratified_folds(train_ds.y, train_ds.n_classes, partitions, derive_seed(seed, "cvc"))
    counts = _committee_votes(train_ds, np.arange(M), parts, partitions, spec, seed, leave_out=True)
    return _outcome(train_ds.y, counts == 0, counts.astype(float))


def iterative_partitioning_filter(train_ds: Dataset, partitions: int = 3, spec="decision_tree",
                                  seed: int = 0, stop_fraction: float = 0.01,
                                  max_rounds: int = 100) -> FilterOutcome:
    """Iterative partitioning filter.

    Each round splits the surviving instances into ``partitions`` stratified
    parts, trains one model per part, and removes instances every model
    misclassifies.  Rounds continue until a round removes fewer than
    ``stop_fraction`` of the *original* training size.
    """
    if partitions < 2:
        raise ValueError("need at least 2 partitions")
    spec = parse_spec(spec)
    M = len(train_ds)
    y = train_ds.y
    alive = np.arange(M)
    guard = np.zeros(M)
    for r in range(max_rounds):
        if alive.size < partitions:
            break
        parts = stratified_folds(y[alive], train_ds.n_classes, partitions, derive_seed(seed, "ipf", r))
        counts = _committee_votes(train_ds, alive, parts, partitions, spec, derive_seed(seed, r),
                                  leave_out=False)
        if r == 0:
            guard[alive] = counts
        drop = counts == 0
        alive = alive[~drop]
        if drop.sum() < stop_fraction * M:
            break
    remove = np.ones(M, dtype=bool)
    remove[alive] = False
    return _outcome(y, remove, guard)


# -------------------------------------------------------------------- audit

def write_audit(outcome: FilterOutcome | None = None, scores: CorrectnessScores | None = None,
                weights=None) -> str:
    """Columnar text: ``index``, then any of ``score``, ``count``, ``weight``, ``status``."""
    n = len(outcome) if outcome is not None else len(scores) if scores is not None else len(weights)
    cols = {"index": [str(i) for i in range(n)]}
    if scores is not None:
        cols["score"] = [repr(float(v)) for v in scores.scores]
        if scores.counts is not None:
            cols["count"] = [str(int(v)) for v in scores.counts]
    if weights is not None:
        cols["weight"] = [repr(float(v)) for v in weights]
    if outcome is not None:
        keep = outcome.mask
        cols["status"] = ["kept" if k else "removed" for k in keep]
    buf = io.StringIO()
    if scores is not None:
        buf.write(f"# ensemble_size: {scores.ensemble_size}\n")
    if outcome is not None and not np.isnan(outcome.threshold):
        buf.write(f"# threshold: {outcome.threshold!r}\n")
    buf.write("\t".join(cols) + "\n")
    for row in zip(*cols.values()):
        buf.write("\t".join(row) + "\n")
    return buf.getvalue()


def read_audit(text: str) -> dict:
    """Parse :func:`write_audit` output into column arrays plus header values."""
    meta, header, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("#"):
            k, v = line[1:].split(":", 1)
            meta[k.strip()] = float(v)
        elif header is None:
            header = line.split("\t")
        elif line:
            rows.append(line.split("\t"))
    out = dict(meta)
    for j, name in enumerate(header or []):
        col = [r[j] for r in rows]
        if name in ("index", "count"):
            out[name] = np.array(col, dtype=np.int64)
        elif name == "status":
            out[name] = np.array(col)
        else:
            out[name] = np.array(col, dtype=float)
    return out

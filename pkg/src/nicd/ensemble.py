"""Plain majority-vote ensembles.

Every member casts one unweighted vote for its predicted label.  The label
with the most votes wins; ties go to the class with the higher training
prior, then to the lower class index.

Members can be trained on the raw training set (``plain``), with their own
out-of-fold classifier scores as instance weights (``weighted``), or on the
subset their own out-of-fold predictions classify correctly (``filtered``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import derive_seed
from .datakit import Dataset, Instance
from .learners import Model, argmax_tiebreak, parse_specs, train
from .noiseid import biased_filter, biased_scores, biased_weights

__all__ = ["MODES", "VotingEnsemble", "build_ensemble", "vote"]

MODES = ("plain", "weighted", "filtered")


@dataclass(frozen=True, eq=False)
class VotingEnsemble:
    members: tuple
    priors: np.ndarray

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("an ensemble needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.classes != first.classes or m.schema.n_features != first.schema.n_features:
                raise ValueError("ensemble members must share one class set and feature schema")
        p = np.array(self.priors, dtype=float)
        p.flags.writeable = False
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "priors", p)

    @property
    def classes(self) -> tuple:
        return self.members[0].classes

    def votes(self, X) -> np.ndarray:
        """Vote counts, shape ``(n, n_classes)``."""
        C = len(self.classes)
        preds = np.vstack([m.predict(X) for m in self.members])
        out = np.zeros((preds.shape[1], C))
        for row in preds:
            out[np.arange(preds.shape[1]), row] += 1
        return out

    def predict(self, X) -> np.ndarray:
        return argmax_tiebreak(self.votes(X), self.priors)


def vote(e: VotingEnsemble, x):
    """Winning label index for one instance (an array of them for a matrix)."""
    out = e.predict(x)
    if isinstance(x, Instance) or np.ndim(x) == 1:
        return int(out[0])
    return out


def build_ensemble(specs: Sequence, train_ds: Dataset, mode: str = "plain", folds: int = 10,
                   seed: int = 0, scores: dict | None = None) -> VotingEnsemble:
    """Train one model per spec and combine them by vote.

    Parameters
    ----------
    specs : sequence of LearnerSpec or str
    train_ds : Dataset
    mode : {"plain", "weighted", "filtered"}
    folds, seed
        Cross-validation used for the members' own scores in the weighted
        and filtered modes, and the training seed.
    scores : dict, optional
        Precomputed :func:`~nicd.noiseid.biased_scores` keyed by spec, to
        avoid repeating the cross-validation.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")
    specs = parse_specs(specs)
    if not specs:
        raise ValueError("an ensemble needs at least one learner")
    members = []
    for i, spec in enumerate(specs):
        s = None
        if mode != "plain":
            s = (scores or {}).get(spec)
            if s is None:
                s = biased_scores(spec, train_ds, folds, seed)
        model_seed = derive_seed(seed, "member", i)
        if mode == "plain":
            m = train(spec, train_ds, seed=model_seed)
        elif mode == "weighted":
            m = train(spec, train_ds, biased_weights(s), seed=model_seed)
        else:
            kept = biased_filter(train_ds, spec, scores=s).kept
            m = train(spec, train_ds.subset(kept), seed=model_seed)
        members.append(m)
    priors = np.bincount(train_ds.y, minlength=train_ds.n_classes) / len(train_ds)
    return VotingEnsemble(tuple(members), priors)

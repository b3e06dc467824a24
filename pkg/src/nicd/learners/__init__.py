"""From-scratch base classifiers that accept per-instance weights.

Seven kinds are available: ``knn``, ``naive_bayes``, ``decision_tree``,
``random_forest``, ``mlp``, ``rule_learner`` and ``lwl``.  Every trained
:class:`Model` predicts labels and returns a classifier score in ``[0, 1]``
for any (instance, label) pair.
"""
from ._base import (
    ALIASES,
    DEFAULTS,
    KINDS,
    LearnerError,
    LearnerSpec,
    Model,
    PredictionRecord,
    Schema,
    argmax_tiebreak,
    check_weights,
    classifier_score,
    cross_val_predictions,
    parse_spec,
    parse_specs,
    predict,
    stratified_folds,
    train,
)

#: the full registry, one learner per kind with default hyperparameters
REGISTRY = tuple(LearnerSpec(k) for k in
                 ("decision_tree", "knn", "naive_bayes", "random_forest", "mlp", "rule_learner", "lwl"))

#: 5-NN, MLP and random forest, the high-accuracy trio used as a small voting ensemble
THREE_ENSEMBLE = (LearnerSpec("knn", (("k", 5),)), LearnerSpec("mlp"), LearnerSpec("random_forest"))

__all__ = [
    "ALIASES", "DEFAULTS", "KINDS", "REGISTRY", "THREE_ENSEMBLE",
    "LearnerError", "LearnerSpec", "Model", "PredictionRecord", "Schema",
    "argmax_tiebreak", "check_weights", "classifier_score", "cross_val_predictions",
    "parse_spec", "parse_specs", "predict", "stratified_folds", "train",
]

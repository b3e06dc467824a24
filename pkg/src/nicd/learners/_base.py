from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .._rng import derive_seed, make_rng
from ..datakit import Dataset, Instance, as_matrix

KINDS = ("knn", "naive_bayes", "decision_tree", "random_forest", "mlp", "rule_learner", "lwl")

ALIASES = {
    "knn": "knn", "ib": "knn", "nn": "knn",
    "nb": "naive_bayes", "naive_bayes": "naive_bayes", "naivebayes": "naive_bayes",
    "dt": "decision_tree", "tree": "decision_tree", "c45": "decision_tree", "decision_tree": "decision_tree",
    "rf": "random_forest", "forest": "random_forest", "random_forest": "random_forest",
    "mlp": "mlp",
    "rules": "rule_learner", "ripper": "rule_learner", "rule_learner": "rule_learner",
    "lwl": "lwl",
}

DEFAULTS: dict[str, dict] = {
    "knn": {"k": 5},
    "naive_bayes": {},
    "decision_tree": {"confidence": 0.25, "min_leaf": 2},
    "random_forest": {"trees": 10, "features": 0},
    "mlp": {"hidden": 0, "epochs": 100, "lr": 2.0, "momentum": 0.2, "batch": 32},
    "rule_learner": {"max_rules": 30, "min_coverage": 2},
    "lwl": {"k": 10},
}

# parameters that must be integers; everything else is a float
_INT_PARAMS = {"k", "min_leaf", "trees", "features", "hidden", "epochs", "batch", "max_rules", "min_coverage"}
# zero is a sentinel for "derive from the data"
_ZERO_OK = {"features", "hidden"}


class LearnerError(RuntimeError):
    """A learner failed to train or predict; names the learner and dataset."""


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind plus its hyperparameters.

    ``params`` holds only the values that differ from the kind's defaults,
    sorted by name, so equal configurations compare and hash equal.
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        kind = ALIASES.get(self.kind.lower())
        if kind is None:
            raise ValueError(f"unknown learner kind {self.kind!r}; choose from {', '.join(KINDS)}")
        defaults = DEFAULTS[kind]
        merged = dict(self.params)
        clean = []
        for name in sorted(merged):
            if name not in defaults:
                raise ValueError(f"{kind} has no hyperparameter {name!r}")
            value = merged[name]
            value = int(value) if name in _INT_PARAMS else float(value)
            if value < 0 or (value == 0 and name not in _ZERO_OK):
                raise ValueError(f"{kind}:{name} must be positive, got {value}")
            if value != defaults[name]:
                clean.append((name, value))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(clean))

    @property
    def hyperparameters(self) -> dict:
        out = dict(DEFAULTS[self.kind])
        out.update(self.params)
        return out

    def __str__(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + ":" + ",".join(f"{k}={_fmt(v)}" for k, v in self.params)

    @property
    def label(self) -> str:
        return str(self)


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else repr(v)


def parse_spec(token: str | LearnerSpec) -> LearnerSpec:
    """Parse ``kind[:name=value,...]``, e.g. ``knn:k=5`` or ``mlp:hidden=16,lr=0.1``."""
    if isinstance(token, LearnerSpec):
        return token
    token = token.strip()
    kind, _, rest = token.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            name, eq, value = item.partition("=")
            if not eq or not name.strip():
                raise ValueError(f"malformed hyperparameter {item!r} in {token!r}")
            try:
                params[name.strip()] = float(value)
            except ValueError:
                raise ValueError(f"hyperparameter {name.strip()!r} needs a number, got {value!r}") from None
    return LearnerSpec(kind, tuple(params.items()))


def parse_specs(tokens) -> list[LearnerSpec]:
    if isinstance(tokens, str):
        tokens = _split_tokens(tokens)
    return [parse_spec(t) for t in tokens]


def _split_tokens(text: str) -> list[str]:
    # kinds are separated by whitespace or ';', or by ',' when the next
    # piece does not look like name=value
    out: list[str] = []
    for chunk in text.replace(";", " ").split():
        for piece in chunk.split(","):
            if not piece:
                continue
            if "=" in piece and ":" not in piece and out:
                out[-1] += "," + piece
            else:
                out.append(piece)
    return out


# ------------------------------------------------------------------ encoding

@dataclass(frozen=True, eq=False)
class Schema:
    """Training-set statistics used to encode feature matrices.

    Numeric missing values become the training mean; categorical missing
    values become an extra code ``len(categories)``.
    """

    cat_mask: np.ndarray
    n_cats: np.ndarray
    means: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> "Schema":
        X = ds.X
        k = ds.n_features
        cat = ds.categorical_mask.copy()
        n_cats = np.array([len(f.categories) + 1 if f.is_categorical else 0 for f in ds.features], dtype=np.int64)
        means = np.zeros(k)
        for j in np.flatnonzero(~cat):
            col = X[:, j]
            ok = ~np.isnan(col)
            means[j] = col[ok].mean() if ok.any() else 0.0
        Z = cls._impute(X, cat, n_cats, means)
        lo = Z.min(axis=0) if len(Z) else np.zeros(k)
        hi = Z.max(axis=0) if len(Z) else np.ones(k)
        return cls(cat, n_cats, means, lo, hi)

    @staticmethod
    def _impute(X, cat, n_cats, means):
        Z = np.array(X, dtype=float, copy=True)
        miss = np.isnan(Z)
        if miss.any():
            fill = np.where(cat, n_cats - 1, means)
            Z[miss] = np.broadcast_to(fill, Z.shape)[miss]
        return Z

    def transform(self, X) -> np.ndarray:
        return self._impute(X, self.cat_mask, self.n_cats, self.means)

    @property
    def n_features(self) -> int:
        return len(self.cat_mask)

    @property
    def numeric(self) -> np.ndarray:
        return np.flatnonzero(~self.cat_mask)

    @property
    def categorical(self) -> np.ndarray:
        return np.flatnonzero(self.cat_mask)

    def scaled_numeric(self, Z) -> np.ndarray:
        """Numeric columns min-max scaled with the training range."""
        num = self.numeric
        span = self.hi[num] - self.lo[num]
        span = np.where(span > 0, span, 1.0)
        return (Z[:, num] - self.lo[num]) / span

    def one_hot(self, Z) -> np.ndarray:
        """Numeric columns scaled to [0, 1] followed by one-hot categorical blocks."""
        parts = [self.scaled_numeric(Z)]
        for j in self.categorical:
            codes = Z[:, j].astype(np.int64)
            block = np.zeros((len(Z), int(self.n_cats[j])))
            block[np.arange(len(Z)), codes] = 1.0
            parts.append(block)
        return np.hstack(parts) if parts else np.zeros((len(Z), 0))


def argmax_tiebreak(S: np.ndarray, priors: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the higher prior, then the lower index."""
    S = np.asarray(S, dtype=float)
    best = S.max(axis=1, keepdims=True)
    cand = S >= best
    masked = np.where(cand, priors[None, :], -np.inf)
    return masked.argmax(axis=1)


# --------------------------------------------------------------------- model

@dataclass(frozen=True, eq=False)
class Model:
    spec: LearnerSpec
    classes: tuple
    priors: np.ndarray
    schema: Schema
    estimator: object = field(repr=False)

    def _encode(self, X) -> np.ndarray:
        return self.schema.transform(as_matrix(X, self.schema.n_features))

    def class_scores(self, X) -> np.ndarray:
        """Per-class classifier scores, shape ``(n, n_classes)``, rows summing to one."""
        return self.estimator.class_scores(self._encode(X))

    def predict(self, X) -> np.ndarray:
        Z = self._encode(X)
        if hasattr(self.estimator, "predict"):
            return self.estimator.predict(Z, self.priors)
        return argmax_tiebreak(self.estimator.class_scores(Z), self.priors)

    def score(self, X, y) -> np.ndarray:
        """Classifier score of each row's label ``y``."""
        S = self.class_scores(X)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        return S[np.arange(len(y)), y]


def _fitters() -> dict[str, Callable]:
    from . import forest, knn, lwl, mlp, naive_bayes, rules, tree
    return {
        "knn": knn.fit,
        "naive_bayes": naive_bayes.fit,
        "decision_tree": tree.fit_decision_tree,
        "random_forest": forest.fit,
        "mlp": mlp.fit,
        "rule_learner": rules.fit,
        "lwl": lwl.fit,
    }


def check_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise ValueError(f"{w.shape[0]} weights for {n} training instances")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("instance weights must be finite and non-negative")
    if not np.any(w > 0):
        raise ValueError("at least one instance weight must be positive")
    return w


def train(spec, train: Dataset, weights=None, seed: int = 0) -> Model:
    """Fit one learner, optionally with per-instance weights.

    Zero-weight instances are dropped, and the remaining weights are
    rescaled to mean one so count-based learners see weighted counts on the
    same scale as plain counts.  Only relative weights matter.
    """
    spec = parse_spec(spec)
    if len(train) == 0:
        raise ValueError("cannot train on an empty dataset")
    w = check_weights(weights, len(train))
    keep = w > 0
    if not keep.all():
        train = train.subset(keep)
        w = w[keep]
    w = w * (len(w) / w.sum())
    C = train.n_classes
    priors = np.bincount(train.y, weights=w, minlength=C)
    priors = priors / priors.sum()
    schema = Schema.fit(train)
    Z = schema.transform(train.X)
    rng = make_rng(derive_seed(seed, "train", spec.kind))
    est = _fitters()[spec.kind](Z, train.y, w, schema, C, spec.hyperparameters, rng)
    return Model(spec, train.classes, priors, schema, est)


def predict(model: Model, x):
    """Label index predicted for one instance (an array of them for a matrix)."""
    out = model.predict(x)
    if isinstance(x, Instance) or np.ndim(x) == 1:
        return int(out[0])
    return out


def classifier_score(model: Model, x, y: int) -> float:
    """Confidence in ``[0, 1]`` the model assigns to label ``y`` for instance ``x``."""
    if not 0 <= int(y) < len(model.classes):
        raise ValueError(f"label index {y} outside the model's {len(model.classes)} classes")
    return float(model.class_scores(x)[0, int(y)])


# ------------------------------------------------------------ cross-validation

@dataclass(frozen=True, eq=False)
class PredictionRecord:
    """Out-of-fold predictions of one learner on one dataset.

    ``scores`` holds the out-of-fold classifier score of each instance's own
    label and ``folds`` the fold each instance was held out in.
    """

    learner: LearnerSpec
    dataset: str
    predictions: np.ndarray
    scores: np.ndarray = None
    folds: np.ndarray = None

    def __len__(self) -> int:
        return len(self.predictions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictionRecord):
            return NotImplemented
        return (self.learner == other.learner and self.dataset == other.dataset
                and np.array_equal(self.predictions, other.predictions)
                and np.array_equal(self.scores, other.scores)
                and np.array_equal(self.folds, other.folds))

    __hash__ = None

    def correct(self, y) -> np.ndarray:
        return self.predictions == np.asarray(y)


def stratified_folds(y: np.ndarray, n_classes: int, folds: int, seed: int) -> np.ndarray:
    """Fold id per instance.

    Each class's members are shuffled and the class blocks are concatenated
    in class order, then dealt round-robin, so fold sizes differ by at most
    one and every class is spread evenly.
    """
    from ..datakit import permutation

    y = np.asarray(y)
    order = []
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        order.append(members[permutation(members.size, derive_seed(seed, "folds", c))])
    order = np.concatenate(order) if order else np.empty(0, dtype=np.int64)
    fold_of = np.empty(len(y), dtype=np.int64)
    fold_of[order] = np.arange(len(order)) % folds
    return fold_of


def cross_val_predictions(spec, ds: Dataset, folds: int = 10, seed: int = 0, weights=None) -> PredictionRecord:
    """Out-of-fold prediction for every instance with stratified ``folds``-fold CV."""
    spec = parse_spec(spec)
    M = len(ds)
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if folds > M:
        raise ValueError(f"{folds} folds requested for {M} instances")
    w_all = check_weights(weights, M)
    fold_of = stratified_folds(ds.y, ds.n_classes, folds, seed)
    preds = np.empty(M, dtype=np.int64)
    scores = np.empty(M)
    for f in range(folds):
        test = fold_of == f
        if not test.any():
            continue
        tr = ~test
        try:
            model = train(spec, ds.subset(tr), w_all[tr], seed=derive_seed(seed, "cv", f))
            held = ds.X[test]
            preds[test] = model.predict(held)
            scores[test] = model.score(held, ds.y[test])
        except ValueError as exc:
            raise LearnerError(f"{spec} failed on dataset {ds.name!r} (fold {f}): {exc}") from exc
    return PredictionRecord(spec, ds.name, preds, scores, fold_of)

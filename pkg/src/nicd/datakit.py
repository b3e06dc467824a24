"""Datasets, file ingestion, shuffling, stratified splitting and label noise.

A :class:`Dataset` stores its feature values as one float matrix.  Numeric
features hold their value, categorical features hold the index of the value
in the descriptor's ``categories`` and missing values of either kind are
``NaN``.  Labels are indices into ``classes``.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._rng import derive_seed, make_rng, round_half_up

NUMERIC = "numeric"
CATEGORICAL = "categorical"
MISSING = "?"


class IngestionError(ValueError):
    """A data file could not be parsed; the message names the line."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}, line {line}: {message}")


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    kind: str
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == CATEGORICAL and len(self.categories) == 0:
            raise ValueError(f"categorical feature {self.name!r} lists no categories")
        if self.kind == NUMERIC and self.categories:
            raise ValueError(f"numeric feature {self.name!r} cannot list categories")
        object.__setattr__(self, "categories", tuple(self.categories))

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


@dataclass(frozen=True)
class Instance:
    """One ``<x, y>`` pair; ``values`` uses ``nan`` for missing."""

    values: tuple
    label: int


@dataclass(frozen=True)
class NoiseSpec:
    rate: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"noise rate must lie in [0, 1], got {self.rate}")


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    features: tuple[FeatureDescriptor, ...]
    X: np.ndarray
    y: np.ndarray
    classes: tuple[str, ...]
    _cat_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        features = tuple(self.features)
        classes = tuple(self.classes)
        k = len(features)
        X = _frozen(self.X, float).reshape(-1, k) if k else _frozen(np.empty((len(self.y), 0)), float)
        y = _frozen(self.y, np.int64).reshape(-1)
        if len(classes) == 0:
            raise ValueError("a dataset needs at least one class")
        if len(set(classes)) != len(classes):
            raise ValueError(f"duplicate class labels in {classes}")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if y.size and (y.min() < 0 or y.max() >= len(classes)):
            raise ValueError("label index outside the class list")
        for j, fd in enumerate(features):
            if fd.is_categorical:
                col = X[:, j]
                col = col[~np.isnan(col)]
                if col.size and (col.min() < 0 or col.max() >= len(fd.categories)
                                 or np.any(col != np.floor(col))):
                    raise ValueError(f"feature {fd.name!r} holds a value outside its categories")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "_cat_mask", _frozen([f.is_categorical for f in features], bool))

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.name == other.name and self.features == other.features
                and self.classes == other.classes
                and np.array_equal(self.y, other.y)
                and np.array_equal(self.X, other.X, equal_nan=True))

    __hash__ = None

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def categorical_mask(self) -> np.ndarray:
        return self._cat_mask

    @property
    def instances(self) -> list[Instance]:
        return [Instance(tuple(row), int(lab)) for row, lab in zip(self.X.tolist(), self.y.tolist())]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return Dataset(self.name, self.features, self.X[idx], self.y[idx], self.classes)

    def with_labels(self, y) -> "Dataset":
        return Dataset(self.name, self.features, self.X, y, self.classes)

    def renamed(self, name: str) -> "Dataset":
        return Dataset(name, self.features, self.X, self.y, self.classes)

    def same_schema(self, other: "Dataset") -> bool:
        return self.features == other.features and self.classes == other.classes


def from_arrays(X, y, *, name="data", classes=None, feature_names=None, categorical=()) -> Dataset:
    """Build a dataset from raw arrays.

    ``y`` may hold arbitrary labels; they are mapped to indices in sorted
    order unless ``classes`` fixes the order.  Columns listed in
    ``categorical`` must already hold integer codes.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y)
    if classes is None:
        classes = [str(c) for c in sorted(set(y.tolist()))]
    classes = [str(c) for c in classes]
    lookup = {c: i for i, c in enumerate(classes)}
    unknown = {str(v) for v in y.tolist()} - set(lookup)
    if unknown:
        raise ValueError(f"labels {sorted(unknown)} are not among the classes {classes}")
    yi = np.array([lookup[str(v)] for v in y.tolist()], dtype=np.int64)
    names = feature_names or [f"x{j}" for j in range(X.shape[1])]
    feats = []
    for j, nm in enumerate(names):
        if j in categorical:
            col = X[:, j][~np.isnan(X[:, j])]
            n_cat = int(col.max()) + 1 if col.size else 1
            feats.append(FeatureDescriptor(nm, CATEGORICAL, tuple(str(c) for c in range(n_cat))))
        else:
            feats.append(FeatureDescriptor(nm, NUMERIC))
    return Dataset(name, tuple(feats), X, yi, tuple(classes))


# ---------------------------------------------------------------- ingestion

_KIND_TOKENS = {"num": NUMERIC, "numeric": NUMERIC, "cat": CATEGORICAL, "categorical": CATEGORICAL}


def load_dataset(path, format: str | None = None, name: str | None = None) -> Dataset:
    """Read a dataset file.

    Parameters
    ----------
    path : path-like
        File to read.
    format : {"csv", "arff"}, optional
        Inferred from the suffix when omitted (``.arff`` means ARFF,
        anything else CSV).
    name : str, optional
        Dataset name; defaults to the file stem.

    The class is always the last column.  CSV category sets are the distinct
    observed values in file order; ARFF category sets are the declared
    values in declaration order.
    """
    path = Path(path)
    if format is None:
        format = "arff" if path.suffix.lower() == ".arff" else "csv"
    name = name or path.stem
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if format == "csv":
        return _parse_csv(text, path, name)
    if format == "arff":
        return _parse_arff(text, path, name)
    raise ValueError(f"unknown dataset format {format!r}")


def _parse_header_token(tok: str, path, line: int):
    if ":" not in tok:
        raise IngestionError(path, line, f"header token {tok!r} is not of the form name:kind")
    nm, kind = tok.rsplit(":", 1)
    kind = kind.strip().lower()
    if kind not in _KIND_TOKENS or not nm.strip():
        raise IngestionError(path, line, f"header token {tok!r} has an unknown kind (use num or cat)")
    return nm.strip(), _KIND_TOKENS[kind]


def _parse_csv(text: str, path, name: str) -> Dataset:
    rows = list(csv.reader(text.splitlines()))
    # (line number, row) with blank lines dropped
    numbered = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not numbered:
        raise IngestionError(path, 1, "empty file")
    hline, header = numbered[0]
    cols = [_parse_header_token(t, path, hline) for t in header]
    if len(cols) < 1:
        raise IngestionError(path, hline, "header declares no columns")
    if cols[-1][1] != CATEGORICAL:
        raise IngestionError(path, hline, "the last (class) column must be categorical")
    n_cols = len(cols)
    cat_values: list[dict[str, int]] = [dict() for _ in cols]
    X = np.full((len(numbered) - 1, n_cols - 1), np.nan)
    y = np.zeros(len(numbered) - 1, dtype=np.int64)
    for r, (lineno, row) in enumerate(numbered[1:]):
        if len(row) != n_cols:
            raise IngestionError(path, lineno, f"expected {n_cols} values, found {len(row)}")
        for j, raw in enumerate(row):
            v = raw.strip()
            kind = cols[j][1]
            if v == MISSING:
                if j == n_cols - 1:
                    raise IngestionError(path, lineno, "missing class value")
                continue
            if kind == NUMERIC:
                try:
                    X[r, j] = float(v)
                except ValueError:
                    raise IngestionError(path, lineno, f"non-numeric value {v!r} in column {cols[j][0]!r}") from None
            else:
                code = cat_values[j].setdefault(v, len(cat_values[j]))
                if j == n_cols - 1:
                    y[r] = code
                else:
                    X[r, j] = code
    feats = []
    for j, (nm, kind) in enumerate(cols[:-1]):
        if kind == CATEGORICAL:
            cats = tuple(cat_values[j]) or (MISSING,)
            feats.append(FeatureDescriptor(nm, kind, cats))
        else:
            feats.append(FeatureDescriptor(nm, kind))
    classes = tuple(cat_values[-1])
    if not classes:
        raise IngestionError(path, hline, "file holds no instances")
    return Dataset(name, tuple(feats), X, y, classes)


_ATTR_RE = re.compile(r"^@attribute\s+('(?:[^']*)'|\"(?:[^\"]*)\"|\S+)\s+(.*)$", re.IGNORECASE)


def _split_values(s: str) -> list[str]:
    row = next(csv.reader([s], skipinitialspace=True, quotechar="'"))
    out = []
    for v in row:
        v = v.strip()
        if len(v) >= 2 and v[0] == v[-1] and v[0] in "'\"":
            v = v[1:-1]
        out.append(v)
    return out


def _parse_arff(text: str, path, name: str) -> Dataset:
    attrs: list[tuple[str, str, tuple[str, ...]]] = []
    data_start = None
    lines = text.splitlines()
    for i, raw in enumerate(lines):
        s = raw.strip()
        if not s or s.startswith("%"):
            continue
        low = s.lower()
        if low.startswith("@relation"):
            continue
        if low.startswith("@attribute"):
            m = _ATTR_RE.match(s)
            if not m:
                raise IngestionError(path, i + 1, "malformed @attribute line")
            nm = m.group(1).strip("'\"")
            typ = m.group(2).strip()
            if typ.startswith("{"):
                if not typ.endswith("}"):
                    raise IngestionError(path, i + 1, "unterminated nominal value list")
                vals = tuple(v for v in _split_values(typ[1:-1]) if v != "")
                if not vals:
                    raise IngestionError(path, i + 1, "empty nominal value list")
                attrs.append((nm, CATEGORICAL, vals))
            elif typ.lower() in ("numeric", "real", "integer"):
                attrs.append((nm, NUMERIC, ()))
            else:
                raise IngestionError(path, i + 1, f"unsupported attribute type {typ!r}")
            continue
        if low.startswith("@data"):
            data_start = i + 1
            break
        raise IngestionError(path, i + 1, f"unexpected header line {s!r}")
    if data_start is None:
        raise IngestionError(path, len(lines), "no @data section")
    if not attrs:
        raise IngestionError(path, data_start, "no attributes declared")
    if attrs[-1][1] != CATEGORICAL:
        raise IngestionError(path, data_start, "the last (class) attribute must be nominal")
    lookups = [{v: k for k, v in enumerate(a[2])} for a in attrs]
    Xrows, ys = [], []
    n_cols = len(attrs)
    for i in range(data_start, len(lines)):
        s = lines[i].strip()
        if not s or s.startswith("%"):
            continue
        if s.startswith("{"):
            raise IngestionError(path, i + 1, "sparse ARFF rows are not supported")
        vals = _split_values(s)
        if len(vals) != n_cols:
            raise IngestionError(path, i + 1, f"expected {n_cols} values, found {len(vals)}")
        row = np.full(n_cols - 1, np.nan)
        for j, v in enumerate(vals):
            nm, kind, _ = attrs[j]
            if v == MISSING:
                if j == n_cols - 1:
                    raise IngestionError(path, i + 1, "missing class value")
                continue
            if kind == NUMERIC:
                try:
                    row[j] = float(v)
                except ValueError:
                    raise IngestionError(path, i + 1, f"non-numeric value {v!r} for {nm!r}") from None
            else:
                if v not in lookups[j]:
                    what = "class value" if j == n_cols - 1 else f"value for {nm!r}"
                    raise IngestionError(path, i + 1, f"unknown {what}: {v!r}")
                if j == n_cols - 1:
                    ys.append(lookups[j][v])
                else:
                    row[j] = lookups[j][v]
        Xrows.append(row)
    feats = tuple(FeatureDescriptor(nm, kind, cats) for nm, kind, cats in attrs[:-1])
    X = np.array(Xrows).reshape(len(Xrows), n_cols - 1)
    return Dataset(name, feats, X, np.array(ys, dtype=np.int64), attrs[-1][2])


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` in the ``name:kind`` CSV format read by :func:`load_dataset`."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{f.name}:{'cat' if f.is_categorical else 'num'}" for f in ds.features] + ["class:cat"])
        for row, lab in zip(ds.X.tolist(), ds.y.tolist()):
            out = []
            for v, f in zip(row, ds.features):
                if np.isnan(v):
                    out.append(MISSING)
                elif f.is_categorical:
                    out.append(f.categories[int(v)])
                else:
                    out.append(repr(float(v)))
            w.writerow(out + [ds.classes[lab]])


# ------------------------------------------------------- sampling operations

def permutation(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates permutation of ``range(n)``.

    Draws ``n - 1`` doubles ``u`` from the Philox4x64-10 stream keyed by
    ``seed`` (53-bit mantissa, ``(raw >> 11) * 2**-53``) and, for
    ``i = n-1 .. 1``, swaps position ``i`` with ``floor(u * (i + 1))``.
    """
    perm = list(range(n))
    if n < 2:
        return np.array(perm, dtype=np.int64)
    u = make_rng(seed).random(n - 1)
    for step, i in enumerate(range(n - 1, 0, -1)):
        j = int(u[step] * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm, dtype=np.int64)


def shuffle(ds: Dataset, seed: int) -> Dataset:
    return ds.subset(permutation(len(ds), seed))


def stratified_indices(y: np.ndarray, n_classes: int, train_fraction: float, seed: int):
    """Index form of :func:`stratified_split`; returns sorted (train, test)."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    train, test = [], []
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        if members.size == 0:
            continue
        members = members[permutation(members.size, derive_seed(seed, "stratify", c))]
        n_train = max(1, round_half_up(train_fraction * members.size))
        train.append(members[:n_train])
        test.append(members[n_train:])
    train = np.sort(np.concatenate(train)) if train else np.empty(0, dtype=np.int64)
    test = np.sort(np.concatenate(test)) if test else np.empty(0, dtype=np.int64)
    return train, test


def stratified_split(ds: Dataset, train_fraction: float = 2 / 3, seed: int = 0):
    """Split ``ds`` so each class contributes ``round(f * n_c)`` training rows.

    Rounding is half-up and every non-empty class keeps at least one
    training instance.  Relative instance order is preserved in both parts.
    """
    tr, te = stratified_indices(ds.y, ds.n_classes, train_fraction, seed)
    return ds.subset(tr), ds.subset(te)


def inject_label_noise(ds: Dataset, spec: NoiseSpec, include_original: bool = False):
    """Corrupt ``round(rate * M)`` randomly chosen labels.

    The replacement label is drawn uniformly from the other classes, so
    every chosen label changes.  With ``include_original=True`` it is drawn
    from all classes instead and may coincide with the original; the
    returned index set then lists only labels that actually changed.

    Returns
    -------
    noisy : Dataset
    flipped : numpy.ndarray
        Sorted indices whose label differs from ``ds``.
    """
    M = len(ds)
    n_flip = min(M, round_half_up(spec.rate * M))
    if n_flip == 0:
        return ds, np.empty(0, dtype=np.int64)
    if ds.n_classes < 2:
        raise ValueError("label noise needs at least two classes")
    rng = make_rng(spec.seed)
    chosen = np.sort(rng.choice(M, size=n_flip, replace=False))
    y = ds.y.copy()
    C = ds.n_classes
    if include_original:
        y[chosen] = rng.integers(0, C, size=n_flip)
    else:
        # offset in 1..C-1 maps uniformly onto the other classes
        y[chosen] = (y[chosen] + rng.integers(1, C, size=n_flip)) % C
    flipped = np.flatnonzero(y != ds.y)
    return ds.with_labels(y), flipped


def concat(parts: Iterable[Dataset], name: str | None = None) -> Dataset:
    parts = list(parts)
    first = parts[0]
    for p in parts[1:]:
        if not first.same_schema(p):
            raise ValueError("cannot concatenate datasets with different schemas")
    return Dataset(name or first.name, first.features,
                   np.vstack([p.X for p in parts]), np.concatenate([p.y for p in parts]), first.classes)


def as_matrix(rows: Sequence, n_features: int) -> np.ndarray:
    """Coerce an Instance, a sequence of values or a matrix into a 2-D float array."""
    if isinstance(rows, Instance):
        rows = [rows.values]
    elif isinstance(rows, Dataset):
        return rows.X
    a = np.asarray(rows, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[1] != n_features:
        raise ValueError(f"instance has {a.shape[1]} values, model expects {n_features}")
    return a

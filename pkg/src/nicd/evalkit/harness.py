"""Repeated train/test experiments with injected label noise.

One job covers a (dataset, run, noise level) triple: shuffle with the run
seed, split 2/3 : 1/3 with stratification, corrupt a fraction of the
training labels, then for every (learner, technique) cell train on the
handled training set and measure accuracy on the untouched test set.

Run seeds hash the master seed, the run index and the dataset name, so
adding a dataset or a noise level leaves every existing cell unchanged.
Jobs are independent and may run in a process pool; records are sorted
before they are returned, so the result does not depend on scheduling.
"""
from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .._rng import derive_seed
from ..datakit import Dataset, NoiseSpec, inject_label_noise, load_dataset, shuffle, stratified_split
from ..ensemble import build_ensemble
from ..learners import REGISTRY, THREE_ENSEMBLE, parse_spec, parse_specs, train
from ..noiseid import (biased_filter, biased_scores, biased_weights, classification_filter, cvc_filter,
                       ensemble_filter, estimate_correctness, iterative_partitioning_filter, l_filter,
                       l_weights, renn_filter)
from .stats import accuracy

#: techniques applied to each base learner
LEARNER_TECHNIQUES = ("none", "l_weight", "l_filter", "biased_weight", "biased_filter",
                      "renn", "classification", "ensemble_filter", "cvc", "ipf")
#: techniques that produce one voting ensemble per job
ENSEMBLE_TECHNIQUES = ("l_ensemble", "3_ensemble", "weighted_l_ensemble", "filtered_l_ensemble")
TECHNIQUES = LEARNER_TECHNIQUES + ENSEMBLE_TECHNIQUES
#: learner column used by ensemble techniques
ENSEMBLE = "ensemble"

_FILTERS = {
    "renn": lambda tr, f, s: renn_filter(tr, 5),
    "classification": lambda tr, f, s: classification_filter(tr, "knn:k=1", f, s),
    "ensemble_filter": lambda tr, f, s: ensemble_filter(tr, folds=f, seed=s),
    "cvc": lambda tr, f, s: cvc_filter(tr, 3, seed=s),
    "ipf": lambda tr, f, s: iterative_partitioning_filter(tr, 3, seed=s),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment.

    ``corpus`` entries are names of bundled datasets or paths to dataset
    files.  ``ensemble_set`` is the learner set whose votes give the
    correctness scores and which forms the voting ensemble; it defaults to
    the full registry.
    """

    corpus: tuple = ()
    learners: tuple = tuple(str(s) for s in REGISTRY)
    techniques: tuple = ("none", "l_weight", "l_filter")
    levels: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    runs: int = 10
    seed: int = 0
    folds: int = 10
    ensemble_set: tuple = tuple(str(s) for s in REGISTRY)
    threshold: float = 0.5
    train_fraction: float = 2 / 3

    def __post_init__(self):
        object.__setattr__(self, "corpus", tuple(str(c) for c in self.corpus))
        object.__setattr__(self, "learners", tuple(str(parse_spec(s)) for s in self.learners))
        object.__setattr__(self, "ensemble_set", tuple(str(parse_spec(s)) for s in self.ensemble_set))
        object.__setattr__(self, "techniques", tuple(self.techniques))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if not self.corpus:
            raise ValueError("corpus is empty")
        bad = [t for t in self.techniques if t not in TECHNIQUES]
        if bad:
            raise ValueError(f"unknown technique(s) {', '.join(bad)}; choose from {', '.join(TECHNIQUES)}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if any(not 0 <= v < 1 for v in self.levels):
            raise ValueError("noise levels must lie in [0, 1)")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must lie in (0, 1]")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config key(s): {', '.join(sorted(extra))}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def resolve_dataset(entry: str) -> Dataset:
    """A bundled dataset by name, otherwise a dataset file by path."""
    from .. import datasets

    if entry in datasets.available():
        return datasets.load(entry)
    p = Path(entry)
    if not p.exists():
        raise FileNotFoundError(f"{entry!r} is neither a bundled dataset nor an existing file")
    return load_dataset(p)


@dataclass
class _Job:
    dataset: Dataset
    run: int
    level: float
    cfg: ExperimentConfig
    cache: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return derive_seed(self.cfg.seed, self.run, self.dataset.name)

    def split(self):
        ds = shuffle(self.dataset, self.seed)
        train_ds, test_ds = stratified_split(ds, self.cfg.train_fraction, self.seed)
        noisy, flipped = inject_label_noise(train_ds, NoiseSpec(self.level, derive_seed(self.seed, "noise", self.level)))
        return noisy, test_ds, flipped

    def cv_seed(self) -> int:
        return derive_seed(self.seed, "cv", self.level)

    def l_scores(self, tr):
        if "l" not in self.cache:
            self.cache["l"] = estimate_correctness(self.cfg.ensemble_set, tr, self.cfg.folds, self.cv_seed())
        return self.cache["l"]

    def biased(self, spec, tr):
        key = ("biased", spec)
        if key not in self.cache:
            self.cache[key] = biased_scores(spec, tr, self.cfg.folds, self.cv_seed())
        return self.cache[key]

    def filtered(self, name, tr):
        key = ("filter", name)
        if key not in self.cache:
            self.cache[key] = _FILTERS[name](tr, self.cfg.folds, self.cv_seed())
        return self.cache[key]


def _learner_cell(job: _Job, spec, technique, tr, te):
    fit_seed = derive_seed(job.seed, "fit", str(spec))
    weights = None
    used = tr
    if technique == "l_weight":
        weights = l_weights(job.l_scores(tr))
    elif technique == "l_filter":
        used = l_filter(tr, job.l_scores(tr), job.cfg.threshold).apply(tr)
    elif technique == "biased_weight":
        weights = biased_weights(job.biased(spec, tr))
    elif technique == "biased_filter":
        used = biased_filter(tr, spec, scores=job.biased(spec, tr)).apply(tr)
    elif technique in _FILTERS:
        used = job.filtered(technique, tr).apply(tr)
    model = train(spec, used, weights, seed=fit_seed)
    return accuracy(model.predict(te.X), te.y), len(used)


def _ensemble_cell(job: _Job, technique, tr, te):
    members = THREE_ENSEMBLE if technique == "3_ensemble" else parse_specs(job.cfg.ensemble_set)
    mode = {"weighted_l_ensemble": "weighted", "filtered_l_ensemble": "filtered"}.get(technique, "plain")
    scores = {s: job.biased(s, tr) for s in members} if mode != "plain" else None
    e = build_ensemble(members, tr, mode, job.cfg.folds, derive_seed(job.seed, "ensemble"), scores=scores)
    return accuracy(e.predict(te.X), te.y), len(tr)


def run_job(args) -> list[dict]:
    """All cells of one (dataset, run, level) job as record dicts."""
    ds, run, level, cfg = args
    job = _Job(ds, run, level, cfg)
    base = {"dataset": ds.name, "run": run, "level": level}
    try:
        tr, te, flipped = job.split()
    except Exception as exc:  # noqa: BLE001 - recorded per cell
        msg = f"{type(exc).__name__}: {exc}"
        cells = [(l, t) for t in cfg.techniques for l in
                 ((ENSEMBLE,) if t in ENSEMBLE_TECHNIQUES else cfg.learners)]
        return [dict(base, learner=l, technique=t, accuracy=None, n_train=None, error=msg) for l, t in cells]
    out = []
    for technique in cfg.techniques:
        if technique in ENSEMBLE_TECHNIQUES:
            cells = [(ENSEMBLE, None)]
        else:
            cells = [(name, parse_spec(name)) for name in cfg.learners]
        for name, spec in cells:
            rec = dict(base, learner=name, technique=technique)
            try:
                if spec is None:
                    acc, n_used = _ensemble_cell(job, technique, tr, te)
                else:
                    acc, n_used = _learner_cell(job, spec, technique, tr, te)
                rec.update(accuracy=acc, n_train=n_used, error=None)
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                last = traceback.extract_tb(exc.__traceback__)[-1]
                rec.update(accuracy=None, n_train=None,
                           error=f"{type(exc).__name__}: {exc} ({Path(last.filename).name}:{last.lineno})")
            out.append(rec)
    return out


def record_key(r: dict):
    return (r["dataset"], r["level"], r["run"], r["technique"], r["learner"])


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, progress=None):
    """Execute every configured cell and return an :class:`ExperimentReport`.

    Parameters
    ----------
    cfg : ExperimentConfig
    jobs : int
        Worker processes; 1 runs everything in this process.
    progress : callable, optional
        Called with ``(done, total)`` after each job finishes.
    """
    from .report import ExperimentReport

    corpus = [resolve_dataset(c) for c in cfg.corpus]
    names = [d.name for d in corpus]
    if len(set(names)) != len(names):
        raise ValueError(f"dataset names must be unique, got {names}")
    tasks = [(ds, run, level, cfg) for ds in corpus for run in range(cfg.runs) for level in cfg.levels]
    records = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, recs in enumerate(pool.map(run_job, tasks, chunksize=1), start=1):
                records.extend(recs)
                if progress:
                    progress(i, len(tasks))
    else:
        for i, t in enumerate(tasks, start=1):
            records.extend(run_job(t))
            if progress:
                progress(i, len(tasks))
    records.sort(key=record_key)
    return ExperimentReport(cfg, records)

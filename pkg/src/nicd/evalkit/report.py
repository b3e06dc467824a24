"""Experiment records, aggregates and the human-readable tables.

Records are one JSON object per (dataset, level, run, technique, learner)
cell-run, written with sorted keys in a fixed order so two identical
experiments produce byte-identical files.

Aggregates work on per-dataset means over runs.  Comparisons between a
technique and its baseline pair those means across datasets and report the
one-sided Wilcoxon p-value together with win/tie/loss counts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .harness import ENSEMBLE, ENSEMBLE_TECHNIQUES, ExperimentConfig, record_key
from .stats import percent_reduction_in_error, wilcoxon_signed_rank, win_tie_loss


@dataclass(frozen=True)
class Comparison:
    """A technique against a baseline, paired over datasets."""

    technique_mean: float
    baseline_mean: float
    p: float
    direction: str
    wins: int
    ties: int
    losses: int
    n: int


class ExperimentReport:
    """Per-run test accuracies plus the aggregates derived from them."""

    def __init__(self, config: ExperimentConfig | None, records: list[dict]):
        self.config = config
        self.records = sorted(records, key=record_key)
        self._cells: dict = {}
        for r in self.records:
            key = (r["dataset"], r["learner"], r["technique"], r["level"])
            self._cells.setdefault(key, []).append(r)

    # ---------------------------------------------------------- records io

    def to_records(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    @classmethod
    def from_records(cls, text: str, config: ExperimentConfig | None = None) -> "ExperimentReport":
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls(config, recs)

    # ------------------------------------------------------------- lookups

    @property
    def datasets(self) -> list[str]:
        return sorted({r["dataset"] for r in self.records})

    @property
    def levels(self) -> list[float]:
        return sorted({r["level"] for r in self.records})

    @property
    def techniques(self) -> list[str]:
        seen = {r["technique"] for r in self.records}
        order = list(self.config.techniques) if self.config else sorted(seen)
        return [t for t in order if t in seen]

    @property
    def learners(self) -> list[str]:
        seen = {r["learner"] for r in self.records if r["learner"] != ENSEMBLE}
        order = list(self.config.learners) if self.config else sorted(seen)
        return [l for l in order if l in seen]

    def errors(self) -> list[dict]:
        return [r for r in self.records if r.get("error")]

    def accuracies(self, dataset, learner, technique, level) -> list[float]:
        """Per-run accuracies of one cell, failed runs omitted."""
        return [r["accuracy"] for r in self._cells.get((dataset, learner, technique, level), [])
                if r["accuracy"] is not None]

    def mean_accuracy(self, dataset, learner, technique, level) -> float:
        acc = self.accuracies(dataset, learner, technique, level)
        return math.fsum(acc) / len(acc) if acc else float("nan")

    def dataset_means(self, learner, technique, level) -> np.ndarray:
        """Mean accuracy per dataset (sorted by name); NaN where every run failed."""
        return np.array([self.mean_accuracy(d, learner, technique, level) for d in self.datasets])

    def corpus_mean(self, learner, technique, level) -> float:
        m = self.dataset_means(learner, technique, level)
        m = m[~np.isnan(m)]
        return math.fsum(m) / m.size if m.size else float("nan")

    # ---------------------------------------------------------- aggregates

    def percent_reduction(self, learner, technique, level, baseline: str = "none") -> list:
        """%RE of ``technique`` over ``baseline`` for each dataset (``None`` where undefined)."""
        out = []
        for d in self.datasets:
            orig = self.mean_accuracy(d, learner, baseline, level)
            new = self.mean_accuracy(d, learner, technique, level)
            if math.isnan(orig) or math.isnan(new):
                out.append(None)
            else:
                out.append(percent_reduction_in_error(100 * new, 100 * orig))
        return out

    def mean_percent_reduction(self, learner, technique, level, baseline: str = "none") -> float:
        vals = [v for v in self.percent_reduction(learner, technique, level, baseline) if v is not None]
        return math.fsum(vals) / len(vals) if vals else float("nan")

    def compare(self, learner, technique, level, baseline_learner=None,
                baseline_technique: str = "none") -> Comparison:
        """Pair ``(learner, technique)`` with a baseline cell across datasets."""
        a = self.dataset_means(learner, technique, level)
        b = self.dataset_means(learner if baseline_learner is None else baseline_learner,
                               baseline_technique, level)
        ok = ~(np.isnan(a) | np.isnan(b))
        a, b = a[ok], b[ok]
        w = wilcoxon_signed_rank(a, b)
        wins, ties, losses = win_tie_loss(a, b)
        mean = lambda v: math.fsum(v) / v.size if v.size else float("nan")  # noqa: E731
        return Comparison(mean(a), mean(b), w.p, w.direction, wins, ties, losses, int(a.size))

    # -------------------------------------------------------------- tables

    def to_table(self) -> str:
        """Technique rows by learner columns, one block per noise level.

        Each technique has an accuracy line (corpus mean), a p-value line
        (one-sided Wilcoxon against ``none`` for the same learner, ``+``
        when the technique is better and ``-`` when worse) and a Count line
        of wins/ties/losses over datasets.  Ensembles are compared with each
        learner's unhandled accuracy.
        """
        learners = self.learners
        width = max([10] + [len(l) + 1 for l in learners])
        head = lambda cells: "".join(c.rjust(width) for c in cells)  # noqa: E731
        lines = [f"datasets: {', '.join(self.datasets)}"]
        if self.config:
            lines.append(f"runs: {self.config.runs}  folds: {self.config.folds}  seed: {self.config.seed}")
        for level in self.levels:
            lines += ["", f"== noise level {level:g} ==", f"{'':29}" + head(learners)]
            for t in self.techniques:
                if t in ENSEMBLE_TECHNIQUES:
                    acc = [self.corpus_mean(ENSEMBLE, t, level)] * len(learners)
                    cmps = [self.compare(ENSEMBLE, t, level, baseline_learner=l) for l in learners]
                else:
                    acc = [self.corpus_mean(l, t, level) for l in learners]
                    cmps = None if t == "none" else [self.compare(l, t, level) for l in learners]
                lines.append(f"{t:<20}{'accuracy':>9}" + head([f"{100 * v:.2f}" for v in acc]))
                if cmps is None:
                    continue
                pv = []
                for c in cmps:
                    sign = {"greater": "+", "less": "-"}.get(c.direction, " ")
                    pv.append(f"{sign}{c.p:.3f}")
                lines.append(f"{'':20}{'p-val':>9}" + head(pv))
                lines.append(f"{'':20}{'Count':>9}" + head([f"{c.wins},{c.ties},{c.losses}" for c in cmps]))
            pre_rows = [t for t in self.techniques if t not in ENSEMBLE_TECHNIQUES and t != "none"]
            if pre_rows and "none" in self.techniques:
                lines.append(f"{'':20}{'%RE':>9}")
                for t in pre_rows:
                    vals = [self.mean_percent_reduction(l, t, level) for l in learners]
                    lines.append(f"{t:<20}{'':>9}" + head([f"{v:+.4f}" if not math.isnan(v) else "n/a"
                                                           for v in vals]))
        errs = self.errors()
        if errs:
            lines += ["", f"{len(errs)} failed cell-runs, first: {errs[0]['error']}"]
        return "\n".join(lines) + "\n"

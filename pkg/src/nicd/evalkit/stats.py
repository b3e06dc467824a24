"""Accuracy, reduction in error, Wilcoxon signed-rank and win/tie/loss counts."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

#: below this many non-zero differences the exact null distribution is used
EXACT_BELOW = 25


def accuracy(predictions, truth) -> float:
    p = np.asarray(predictions).reshape(-1)
    t = np.asarray(truth).reshape(-1)
    if p.shape != t.shape:
        raise ValueError(f"{p.size} predictions for {t.size} labels")
    if p.size == 0:
        raise ValueError("accuracy of an empty prediction set is undefined")
    return float(np.count_nonzero(p == t)) / p.size


def percent_reduction_in_error(noise_acc: float, orig_acc: float):
    """Share of the remaining error removed by a noise handler.

    Both accuracies are percentages.  Negative values mean the handler
    increased the error.  Returns ``None`` when ``orig_acc`` is 100, where
    there is no error to reduce.
    """
    if orig_acc >= 100:
        return None
    return (noise_acc - orig_acc) / (100.0 - orig_acc)


@dataclass(frozen=True)
class WilcoxonResult:
    """Outcome of a one-sided signed-rank test of ``a`` against ``b``.

    ``direction`` is ``"greater"`` when ``a`` tends to exceed ``b``,
    ``"less"`` for the reverse and ``"none"`` when the positive and
    negative rank sums balance or every difference is zero.  ``p`` is the
    one-sided p-value in that direction; ``p_greater`` and ``p_less`` give
    both tails.
    """

    statistic: float
    w_plus: float
    p: float
    direction: str
    n: int
    method: str
    p_greater: float
    p_less: float


def _signed_ranks(a, b):
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length ({a.size} vs {b.size})")
    d = a - b
    d = d[d != 0]
    return d, rankdata(np.abs(d))


def exact_null_counts(doubled_ranks) -> list[int]:
    """Number of sign assignments giving each doubled positive-rank sum.

    Entry ``s`` counts the subsets of ``doubled_ranks`` summing to ``s``.
    Doubling keeps averaged tied ranks integral.
    """
    r = [int(v) for v in doubled_ranks]
    counts = [0] * (sum(r) + 1)
    counts[0] = 1
    top = 0
    for v in r:
        for s in range(top, -1, -1):
            if counts[s]:
                counts[s + v] += counts[s]
        top += v
    return counts


def wilcoxon_signed_rank(a, b, method: str = "auto") -> WilcoxonResult:
    """Paired signed-rank test.

    Zero differences are dropped and tied absolute differences share the
    average rank.

    Parameters
    ----------
    a, b : array_like
        Paired samples.
    method : {"auto", "exact", "approx"}
        ``auto`` is exact below 25 non-zero differences.  ``approx`` is the
        normal approximation with continuity correction and the tie
        correction to the variance.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    d, ranks = _signed_ranks(a, b)
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 0.0, 1.0, "none", 0, "exact", 1.0, 1.0)
    w_plus = float(ranks[d > 0].sum())
    total = n * (n + 1) / 2
    statistic = min(w_plus, total - w_plus)
    use_exact = method == "exact" or (method == "auto" and n < EXACT_BELOW)
    if use_exact:
        counts = exact_null_counts(2 * ranks)
        obs = int(round(2 * w_plus))
        denom = 2 ** n
        p_greater = sum(counts[obs:]) / denom
        p_less = sum(counts[:obs + 1]) / denom
    else:
        _, tie_sizes = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(tie_sizes ** 3 - tie_sizes)) / 48
        mean = total / 2
        sd = math.sqrt(var)
        p_greater = float(norm.sf((w_plus - mean - 0.5) / sd))
        p_less = float(norm.cdf((w_plus - mean + 0.5) / sd))
    mid = total / 2
    if w_plus > mid:
        direction, p = "greater", p_greater
    elif w_plus < mid:
        direction, p = "less", p_less
    else:
        direction, p = "none", min(p_greater, p_less)
    return WilcoxonResult(statistic, w_plus, min(p, 1.0), direction, n,
                          "exact" if use_exact else "approx", min(p_greater, 1.0), min(p_less, 1.0))


def win_tie_loss(a, b, tol: float = 1e-9) -> tuple[int, int, int]:
    """How often ``a`` beats, ties (within ``tol``) and loses to ``b``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length ({a.size} vs {b.size})")
    d = a - b
    ties = int(np.count_nonzero(np.abs(d) <= tol))
    wins = int(np.count_nonzero(d > tol))
    return wins, ties, a.size - wins - ties

import warnings

import numpy as np
import pytest

from nicd import noiseid
from nicd.datakit import from_arrays
from nicd.learners import REGISTRY, stratified_folds
from nicd.noiseid import (CorrectnessScores, FilterOutcome, biased_filter, biased_scores, biased_weights,
                          classification_filter, cvc_filter, ensemble_filter, estimate_correctness,
                          iterative_partitioning_filter, l_filter, l_weights, read_audit, renn_filter,
                          write_audit)

from conftest import blobs


def _ds(labels):
    labels = list(labels)
    classes = sorted(set(labels))
    return from_arrays(np.arange(len(labels), dtype=float)[:, None], labels, classes=classes)


def _scores(counts, size):
    counts = np.asarray(counts)
    return CorrectnessScores(counts / size, size, counts)


# ------------------------------------------------------------------- scores

def test_estimate_correctness_is_vote_fraction():
    ds = blobs(15, seed=1, separation=2.0, flip=(2, 20))
    L = ["knn:k=1", "naive_bayes", "decision_tree"]
    s, recs = estimate_correctness(L, ds, folds=5, seed=3, records=True)
    manual = np.mean([r.predictions == ds.y for r in recs], axis=0)
    assert np.array_equal(s.scores, manual)
    assert s.ensemble_size == 3
    assert set(np.round(s.scores * 3, 9)) <= {0.0, 1.0, 2.0, 3.0}
    # every learner saw the same folds
    assert all(np.array_equal(r.folds, recs[0].folds) for r in recs)
    assert s.scores[2] == 0.0 and s.scores[20] == 0.0


def test_correctness_examples():
    assert _scores([9], 9).scores[0] == 1.0
    assert _scores([0], 9).scores[0] == 0.0
    assert _scores([6], 9).scores[0] == pytest.approx(0.6667, abs=1e-4)


def test_correctness_validation():
    with pytest.raises(ValueError):
        CorrectnessScores([1.2], 1)
    with pytest.raises(ValueError):
        CorrectnessScores([0.5], 0)
    with pytest.raises(ValueError):
        CorrectnessScores([0.5], 2, [3])
    with pytest.raises(ValueError):
        estimate_correctness([], blobs(5))


# ------------------------------------------------------------------ L-filter

def test_l_filter_four_of_nine_removed():
    ds = _ds("aabb")
    out = l_filter(ds, _scores([4, 9, 9, 9], 9), 0.5)
    assert out.removed.tolist() == [0]


def test_l_filter_perfect_score_kept_at_any_threshold():
    ds = _ds("aabb")
    for t in (0.01, 0.3, 0.5, 0.9, 1.0):
        assert 0 in l_filter(ds, _scores([9, 0, 9, 0], 9), t).kept


def test_l_filter_threshold_point_seven():
    ds = _ds("aaabbb")
    s = _scores([2, 6, 9, 10, 10, 10], 10)  # (0.2, 0.6, 0.9, 1, 1, 1)
    out = l_filter(ds, s, 0.7)
    assert out.removed.tolist() == [0]
    assert out.threshold == 0.7


def test_l_filter_tie_and_strict():
    ds = _ds("aabb")
    s = _scores([2, 4, 4, 4], 4)  # instance 0 missed by exactly half
    assert l_filter(ds, s, 0.5).removed.tolist() == [0]
    assert l_filter(ds, s, 0.5, strict=True).removed.tolist() == []


def test_l_filter_extremes():
    ds = _ds("aaabbb")
    s = _scores([0, 1, 3, 0, 2, 3], 3)
    assert l_filter(ds, s, 1.0).removed.tolist() == [0, 3]
    assert l_filter(ds, s, 1e-9).removed.tolist() == [0, 1, 3, 4]


def test_l_filter_errors():
    ds = _ds("ab")
    with pytest.raises(ValueError):
        l_filter(ds, _scores([1, 1], 1), 0.0)
    with pytest.raises(ValueError):
        l_filter(ds, _scores([1, 1], 1), 1.5)
    with pytest.raises(ValueError):
        l_filter(ds, _scores([1, 1, 1], 1), 0.5)


def test_class_guard_keeps_best_member():
    ds = _ds("aabbb")
    out = l_filter(ds, _scores([1, 2, 0, 0, 9], 9), 0.5)
    # class a would vanish; its higher-scored instance (index 1) survives
    assert out.kept.tolist() == [1, 4]
    out = l_filter(ds, _scores([1, 1, 0, 0, 0], 9), 0.5)
    # ties go to the lower index
    assert out.kept.tolist() == [0, 2]


# ----------------------------------------------------------------- weights

def test_l_weights():
    assert l_weights(_scores([3, 3, 3], 3)).tolist() == [1, 1, 1]
    assert l_weights(_scores([0, 9], 9)).tolist() == [1 / 18, 1.0]
    assert l_weights(_scores([6, 3], 9)) == pytest.approx([0.667, 0.333], abs=1e-3)


def test_biased_weights_floor():
    s = CorrectnessScores([0.0, 0.25, 1.0], 1, [0, 0, 1])
    assert biased_weights(s).tolist() == [0.125, 0.25, 1.0]
    assert biased_weights(CorrectnessScores([0.0, 0.0], 1, [0, 0])).tolist() == [1.0, 1.0]


# --------------------------------------------------------------- biased

def test_biased_knn_unanimous_neighbours():
    ds = blobs(20, seed=0)
    s = biased_scores("knn:k=5", ds, folds=10, seed=0)
    assert np.all(s.scores == 1.0)
    assert s.ensemble_size == 1


def test_biased_tree_leaf_purity():
    ds = from_arrays(np.zeros((20, 1)), ["y"] * 12 + ["n"] * 8, classes=["y", "n"])
    s = biased_scores("decision_tree", ds, folds=2, seed=0)
    # each training half holds 6 y and 4 n in one unsplittable leaf
    assert np.allclose(s.scores[:12], 0.6)
    assert np.allclose(s.scores[12:], 0.4)
    out = biased_filter(ds, "decision_tree", folds=2, seed=0)
    # every n is misclassified; the class guard keeps the first of the equally scored n's
    assert out.removed.tolist() == list(range(13, 20))
    assert out.kept.tolist() == list(range(13))


def test_biased_filter_keeps_correct():
    ds = blobs(15, seed=4, flip=(5,))
    s = biased_scores("knn", ds, folds=5, seed=1)
    out = biased_filter(ds, "knn", folds=5, seed=1, scores=s)
    assert out.removed.tolist() == [5]
    assert np.all(s.counts[out.kept] == 1)


# -------------------------------------------------------------- baselines

def _one_nn_oof_oracle(ds, folds, seed):
    """Plain 1-NN on min-max scaled features, one fold at a time."""
    fold_of = stratified_folds(ds.y, ds.n_classes, folds, seed)
    pred = np.empty(len(ds), dtype=int)
    for f in range(folds):
        tr, te = fold_of != f, fold_of == f
        lo, hi = ds.X[tr].min(axis=0), ds.X[tr].max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        A, B = ds.X[te] / span, ds.X[tr] / span
        d = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        pred[te] = ds.y[tr][np.argmin(d, axis=1)]
    return pred


def test_renn_separable_nothing_removed():
    assert renn_filter(blobs(20, seed=0), 5).removed.size == 0


@pytest.mark.parametrize("seed", range(5))
def test_renn_removes_planted_flip(seed):
    ds = blobs(20, seed=seed, flip=(3,))
    assert renn_filter(ds, 5).removed.tolist() == [3]


def test_renn_small_dataset_warns():
    ds = blobs(2)
    with pytest.warns(UserWarning):
        out = renn_filter(ds, 5)
    assert out.removed.size == 0


def _renn_oracle(ds, k):
    """Repeated leave-one-out k-NN editing; returns (kept indices, number of passes)."""
    lo, hi = ds.X.min(axis=0), ds.X.max(axis=0)
    Z = ds.X / np.where(hi > lo, hi - lo, 1.0)
    priors = np.bincount(ds.y, minlength=ds.n_classes)
    alive = list(range(len(ds)))
    passes = 0
    while True:
        passes += 1
        wrong = []
        for i in alive:
            others = [j for j in alive if j != i]
            d = [float(((Z[i] - Z[j]) ** 2).sum()) for j in others]
            near = [others[t] for t in sorted(range(len(others)), key=lambda t: (d[t], others[t]))[:k]]
            votes = np.bincount(ds.y[near], minlength=ds.n_classes)
            best = max(range(ds.n_classes), key=lambda c: (votes[c], priors[c], -c))
            if best != ds.y[i]:
                wrong.append(i)
        if not wrong:
            return alive, passes
        alive = [i for i in alive if i not in wrong]


@pytest.mark.parametrize("seed", range(6))
def test_renn_matches_repeated_editing_oracle(seed):
    rng = np.random.default_rng(seed)
    ds = blobs(25, seed=seed, separation=1.0, flip=rng.choice(50, 8, replace=False).tolist())
    kept, passes = _renn_oracle(ds, 5)
    out = renn_filter(ds, 5)
    assert out.kept.tolist() == kept
    if seed in (0, 2, 5):
        assert passes == 3  # two editing passes before a clean one


def test_classification_filter_separable():
    assert classification_filter(blobs(20, seed=0)).removed.size == 0


@pytest.mark.parametrize("seed", range(5))
def test_classification_filter_one_pass(seed):
    ds = blobs(20, seed=seed, flip=(3,))
    out = classification_filter(ds, "knn:k=1", folds=10, seed=seed)
    oracle = np.flatnonzero(_one_nn_oof_oracle(ds, 10, seed) != ds.y)
    assert out.removed.tolist() == oracle.tolist()
    assert 3 in out.removed


def test_classification_filter_small_dataset():
    with pytest.raises(Exception):
        classification_filter(blobs(2), folds=10)


def _patch_votes(monkeypatch, counts, size):
    def fake(L, ds, folds=10, seed=0, records=False):
        return _scores(counts, size)
    monkeypatch.setattr(noiseid, "estimate_correctness", fake)


def test_ensemble_filter_modes(monkeypatch):
    ds = _ds("aaabbb")
    _patch_votes(monkeypatch, [3, 1, 0, 3, 3, 2], 3)
    assert ensemble_filter(ds, mode="consensus").removed.tolist() == [2]
    assert ensemble_filter(ds, mode="majority").removed.tolist() == [1, 2]
    with pytest.raises(ValueError):
        ensemble_filter(ds, trio=["knn"])
    with pytest.raises(ValueError):
        ensemble_filter(ds, mode="most")


def test_ensemble_filter_real_run():
    ds = blobs(20, seed=0, flip=(3, 25))
    assert ensemble_filter(ds).removed.tolist() == [3, 25]


def test_cvc_consensus_rule(monkeypatch):
    ds = _ds("aaabbb")

    def fake(train_ds, rows, parts, n, spec, seed, leave_out):
        assert leave_out and n == 3
        return np.array([3, 0, 1, 2, 0, 3])

    monkeypatch.setattr(noiseid, "_committee_votes", fake)
    out = cvc_filter(ds, 3)
    assert out.removed.tolist() == [1, 4]


def test_cvc_real_and_errors():
    assert cvc_filter(blobs(20, seed=0)).removed.size == 0
    assert cvc_filter(blobs(20, seed=1, flip=(3,))).removed.tolist() == [3]
    with pytest.raises(ValueError):
        cvc_filter(blobs(5), 1)


def test_ipf_rounds(monkeypatch):
    ds = blobs(25, seed=0)  # 50 instances
    calls = []

    def fake(train_ds, rows, parts, n, spec, seed, leave_out):
        assert not leave_out
        calls.append(rows.size)
        counts = np.full(rows.size, 2)
        if len(calls) == 1:
            counts[rows == 7] = 0
        return counts

    monkeypatch.setattr(noiseid, "_committee_votes", fake)
    out = iterative_partitioning_filter(ds, 3)
    # one removal is not below 1% of 50, so a second round runs and removes nothing
    assert calls == [50, 49]
    assert out.removed.tolist() == [7]


def test_ipf_clean_terminates_first_round(monkeypatch):
    calls = []
    real = noiseid._committee_votes

    def spy(*args, **kw):
        calls.append(1)
        return real(*args, **kw)

    monkeypatch.setattr(noiseid, "_committee_votes", spy)
    out = iterative_partitioning_filter(blobs(20, seed=0), 3)
    assert out.removed.size == 0 and len(calls) == 1


def test_ipf_errors():
    with pytest.raises(ValueError):
        iterative_partitioning_filter(blobs(5), 1)


def test_all_filters_retain_every_class():
    # class c has two instances, both inside the a blob
    X = np.r_[np.linspace(0, 1, 20), [0.31, 0.62], np.linspace(5, 6, 20)][:, None]
    labels = ["a"] * 20 + ["c"] * 2 + ["b"] * 20
    ds = from_arrays(X, labels, classes=["a", "b", "c"])
    outs = [renn_filter(ds), classification_filter(ds), ensemble_filter(ds, mode="majority"),
            cvc_filter(ds), iterative_partitioning_filter(ds),
            biased_filter(ds, "knn"), l_filter(ds, estimate_correctness(REGISTRY[:3], ds), 0.01)]
    for out in outs:
        assert np.all(np.bincount(ds.y[out.kept], minlength=3) >= 1)


# ------------------------------------------------------------------ audit

def test_outcome_invariants():
    out = FilterOutcome([0, 2], [1])
    assert out.mask.tolist() == [True, False, True]
    assert len(out.apply(_ds("aab"))) == 2
    with pytest.raises(ValueError):
        FilterOutcome([0, 1], [1])
    with pytest.raises(ValueError):
        out.apply(_ds("aabb"))


def test_audit_round_trip():
    s = _scores([3, 1, 0, 2], 3)
    out = l_filter(_ds("aabb"), s, 0.5)
    w = l_weights(s)
    text = write_audit(out, s, w)
    back = read_audit(text)
    assert back["ensemble_size"] == 3 and back["threshold"] == 0.5
    assert back["index"].tolist() == [0, 1, 2, 3]
    assert back["score"].tolist() == s.scores.tolist()
    assert back["count"].tolist() == [3, 1, 0, 2]
    assert back["weight"].tolist() == w.tolist()
    assert back["status"].tolist() == ["kept", "removed", "removed", "kept"]


def test_no_warning_on_normal_renn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        renn_filter(blobs(10), 5)

from collections import Counter
from types import SimpleNamespace

import numpy as np
import pytest

from nicd import datasets
from nicd.datakit import NoiseSpec, inject_label_noise
from nicd.ensemble import VotingEnsemble, build_ensemble, vote
from nicd.learners import REGISTRY, THREE_ENSEMBLE, train
from nicd.noiseid import biased_filter

from conftest import blobs


class Stub:
    """A fixed-answer member."""

    def __init__(self, labels, classes=("a", "b", "c"), n_features=1):
        self.labels = np.atleast_1d(labels)
        self.classes = classes
        self.schema = SimpleNamespace(n_features=n_features)

    def predict(self, X):
        return np.resize(self.labels, len(np.atleast_2d(X)))


def test_plurality():
    e = VotingEnsemble([Stub(0), Stub(0), Stub(1)], [1 / 3, 1 / 3, 1 / 3])
    assert vote(e, [0.0]) == 0


def test_tie_goes_to_higher_prior():
    e = VotingEnsemble([Stub(0, ("a", "b")), Stub(1, ("a", "b"))], [0.6, 0.4])
    assert vote(e, [0.0]) == 0
    e = VotingEnsemble([Stub(0, ("a", "b")), Stub(1, ("a", "b"))], [0.4, 0.6])
    assert vote(e, [0.0]) == 1
    e = VotingEnsemble([Stub(2), Stub(1)], [0.2, 0.4, 0.4])
    assert vote(e, [0.0]) == 1


def test_member_order_and_agreement():
    members = [Stub(2), Stub(1), Stub(2), Stub(0), Stub(1), Stub(1)]
    pri = [0.5, 0.3, 0.2]
    base = vote(VotingEnsemble(members, pri), [0.0])
    for perm in ([5, 4, 3, 2, 1, 0], [1, 3, 5, 0, 2, 4]):
        assert vote(VotingEnsemble([members[i] for i in perm], pri), [0.0]) == base
    assert vote(VotingEnsemble([Stub(2)] * 4, pri), [0.0]) == 2


def test_validation():
    with pytest.raises(ValueError):
        VotingEnsemble([], [1.0])
    with pytest.raises(ValueError):
        VotingEnsemble([Stub(0), Stub(0, ("a", "b"))], [0.5, 0.5])
    with pytest.raises(ValueError):
        VotingEnsemble([Stub(0), Stub(0, n_features=2)], [1 / 3] * 3)
    with pytest.raises(ValueError):
        build_ensemble(["knn"], blobs(5), mode="stacked")
    with pytest.raises(ValueError):
        build_ensemble([], blobs(5))


def test_single_member_equals_model():
    ds = blobs(20, seed=1, separation=1.5)
    e = build_ensemble(["decision_tree"], ds, seed=4)
    assert np.array_equal(e.predict(ds.X), e.members[0].predict(ds.X))


def test_plain_members_see_identical_data():
    ds = blobs(20, seed=1, separation=1.5)
    e = build_ensemble(["knn:k=3", "knn:k=3"], ds)
    assert np.array_equal(e.members[0].class_scores(ds.X), e.members[1].class_scores(ds.X))


def test_filtered_member_with_nothing_removed_equals_plain():
    ds = blobs(20, seed=0)
    assert biased_filter(ds, "knn").removed.size == 0
    plain = build_ensemble(["knn"], ds, "plain", seed=2)
    filt = build_ensemble(["knn"], ds, "filtered", seed=2)
    assert np.array_equal(plain.members[0].class_scores(ds.X), filt.members[0].class_scores(ds.X))


def test_filtered_and_weighted_members_use_own_scores():
    ds = blobs(20, seed=0, flip=(4,))
    filt = build_ensemble(["knn"], ds, "filtered")
    assert len(filt.members[0].estimator.y) == len(ds) - 1
    w = build_ensemble(["knn"], ds, "weighted")
    assert not np.allclose(w.members[0].estimator.w, 1.0)


def test_nine_member_vote_matches_hand_count():
    ds = datasets.load("iris")
    noisy, _ = inject_label_noise(ds, NoiseSpec(0.3, 1))
    specs = list(REGISTRY) + ["knn:k=1", "naive_bayes"]
    e = build_ensemble(specs, noisy, seed=7)
    assert len(e.members) == 9
    got = e.predict(ds.X)
    for i in range(0, len(ds), 7):
        counts = Counter(int(m.predict(ds.X[i:i + 1])[0]) for m in e.members)
        top = max(counts.values())
        winners = [c for c, n in counts.items() if n == top]
        expect = max(winners, key=lambda c: (e.priors[c], -c))
        assert got[i] == expect


def test_three_ensemble_roster():
    assert [str(s) for s in THREE_ENSEMBLE] == ["knn", "mlp", "random_forest"]


def test_precomputed_scores_are_used():
    from nicd.noiseid import biased_scores
    ds = blobs(15, seed=3, flip=(2,))
    s = biased_scores("knn", ds, folds=10, seed=0)
    a = build_ensemble(["knn"], ds, "weighted", seed=0)
    b = build_ensemble(["knn"], ds, "weighted", seed=0, scores={a.members[0].spec: s})
    assert np.array_equal(a.members[0].estimator.w, b.members[0].estimator.w)


def test_ensemble_matches_trained_member():
    ds = blobs(15, seed=3)
    e = build_ensemble(["naive_bayes"], ds, seed=0)
    m = train("naive_bayes", ds)
    assert np.array_equal(e.predict(ds.X), m.predict(ds.X))

import itertools
import json

import numpy as np
import pytest

from nicd.datakit import from_arrays, write_csv
from nicd.evalkit import (ENSEMBLE, ExperimentConfig, ExperimentReport, accuracy, exact_null_counts,
                          percent_reduction_in_error, run_experiment, wilcoxon_signed_rank, win_tie_loss)
from oracles import wilcoxon_enumeration

from conftest import blobs


# ------------------------------------------------------------------ accuracy

def test_accuracy():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 2, 3], [0, 0, 0]) == 0.0
    assert accuracy([1, 1, 0, 1], [1, 1, 1, 1]) == 0.75
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])


def test_percent_reduction():
    assert percent_reduction_in_error(80.0, 80.0) == 0.0
    assert percent_reduction_in_error(76.83, 79.31) == pytest.approx(-0.1199, abs=5e-5)
    assert percent_reduction_in_error(78.98, 78.35) == pytest.approx(0.0291, abs=5e-5)
    assert percent_reduction_in_error(90.0, 100.0) is None


@pytest.mark.parametrize("orig,new", [(50.0, 60.0), (50.0, 40.0), (99.0, 99.5), (10.0, 10.0)])
def test_percent_reduction_sign(orig, new):
    v = percent_reduction_in_error(new, orig)
    assert (v > 0) == (new > orig)


# ------------------------------------------------------------------ wilcoxon

def test_wilcoxon_all_zero():
    r = wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])
    assert r.p == 1.0 and r.direction == "none" and r.n == 0


def test_wilcoxon_twenty_uniform_wins():
    a = np.arange(20) + 1.0
    r = wilcoxon_signed_rank(a + np.linspace(0.1, 2, 20), a)
    assert r.direction == "greater"
    assert r.p == 2.0 ** -20
    assert r.p < 0.001
    assert r.p_less == 1.0


def test_wilcoxon_eight_pairs_against_enumeration():
    a = [0.81, 0.77, 0.92, 0.64, 0.70, 0.88, 0.75, 0.69]
    b = [0.79, 0.78, 0.85, 0.60, 0.70, 0.80, 0.71, 0.73]
    ge, le = wilcoxon_enumeration(a, b)
    r = wilcoxon_signed_rank(a, b)
    assert r.method == "exact" and r.n == 7
    assert r.p_greater == float(ge) and r.p_less == float(le)
    assert r.direction == "greater" and r.p == float(ge)


def test_wilcoxon_exact_matches_enumeration_with_ties():
    rng = np.random.default_rng(5)
    for trial in range(120):
        n = int(rng.integers(1, 13))
        # small integer grid: plenty of tied magnitudes and zero differences
        a = rng.integers(0, 6, n).astype(float)
        b = rng.integers(0, 6, n).astype(float)
        ge, le = wilcoxon_enumeration(a.tolist(), b.tolist())
        r = wilcoxon_signed_rank(a, b, method="exact")
        if r.n == 0:
            assert r.p == 1.0
            continue
        assert abs(r.p_greater - float(ge)) < 1e-15
        assert abs(r.p_less - float(le)) < 1e-15


def test_exact_null_counts_small():
    # ranks 1,2,3 doubled: subset sums of {2,4,6}
    assert exact_null_counts([2, 4, 6]) == [1, 0, 1, 0, 1, 0, 2, 0, 1, 0, 1, 0, 1]


def test_wilcoxon_direction_and_symmetry():
    a = [3.0, 5.0, 2.0, 8.0, 7.0, 1.5, 9.0]
    b = [2.0, 4.0, 2.5, 6.0, 5.0, 1.0, 8.5]
    r1, r2 = wilcoxon_signed_rank(a, b), wilcoxon_signed_rank(b, a)
    assert r1.direction == "greater" and r2.direction == "less"
    assert r1.p == r2.p
    assert r1.w_plus + r2.w_plus == r1.n * (r1.n + 1) / 2


def test_wilcoxon_approx_large_n():
    rng = np.random.default_rng(0)
    a = rng.normal(0.5, 1, 60)
    r = wilcoxon_signed_rank(a, np.zeros(60))
    assert r.method == "approx" and r.direction == "greater"
    from scipy.stats import wilcoxon as ref
    assert r.p == pytest.approx(ref(a, np.zeros(60), alternative="greater", correction=True,
                                    method="approx").pvalue, rel=1e-9)


def test_wilcoxon_errors():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1, 2], [1])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1, 2], [1, 3], method="magic")


def test_win_tie_loss():
    assert win_tie_loss([1, 2, 3], [1, 2, 3]) == (0, 3, 0)
    assert win_tie_loss([2, 3, 4], [1, 2, 3]) == (3, 0, 0)
    assert win_tie_loss([0.5, 0.7, 0.6], [0.6, 0.7, 0.4]) == (1, 1, 1)
    assert win_tie_loss([1.0], [1.0 + 1e-12]) == (0, 1, 0)


# ------------------------------------------------------------------ config

def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(corpus=())
    with pytest.raises(ValueError):
        ExperimentConfig(corpus=("iris",), techniques=("magic",))
    with pytest.raises(ValueError):
        ExperimentConfig(corpus=("iris",), levels=(1.0,))
    with pytest.raises(ValueError):
        ExperimentConfig(corpus=("iris",), runs=0)
    with pytest.raises(ValueError):
        ExperimentConfig(corpus=("iris",), learners=("svm",))
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"corpus": ["iris"], "color": "red"})
    cfg = ExperimentConfig(corpus=("iris",))
    assert (cfg.runs, cfg.folds, cfg.levels) == (10, 10, (0.0, 0.1, 0.2, 0.3, 0.4))
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


# ----------------------------------------------------------------- harness

def _csv(tmp_path, ds, name):
    p = tmp_path / f"{name}.csv"
    write_csv(ds, p)
    return str(p)


def test_separable_fixture_scores_one(tmp_path):
    path = _csv(tmp_path, blobs(30, seed=0, separation=12.0), "sep")
    cfg = ExperimentConfig(corpus=(path,), learners=("knn",), techniques=("none",), levels=(0.0,), runs=1)
    rep = run_experiment(cfg)
    assert rep.accuracies("sep", "knn", "none", 0.0) == [1.0]
    assert not rep.errors()


def test_experiment_deterministic(tmp_path):
    path = _csv(tmp_path, blobs(20, seed=1, separation=2.0), "b")
    cfg = ExperimentConfig(corpus=(path,), learners=("knn", "naive_bayes"),
                           techniques=("none", "l_filter", "biased_weight", "renn", "l_ensemble"),
                           levels=(0.0, 0.2), runs=2, ensemble_set=("knn:k=1", "naive_bayes", "decision_tree"))
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.to_records() == b.to_records()
    c = run_experiment(cfg, jobs=2)
    assert a.to_records() == c.to_records()


def test_noise_only_touches_training():
    from nicd.evalkit.harness import _Job
    ds = blobs(30, seed=0)
    cfg = ExperimentConfig(corpus=("unused",), runs=1)
    clean_tr, clean_te, none = _Job(ds, 0, 0.0, cfg).split()
    noisy_tr, noisy_te, flipped = _Job(ds, 0, 0.3, cfg).split()
    assert none.size == 0 and flipped.size == 12  # 30% of the 40 training rows
    assert noisy_te == clean_te
    assert np.array_equal(noisy_tr.X, clean_tr.X)
    assert np.count_nonzero(noisy_tr.y != clean_tr.y) == 12


def test_cell_errors_are_recorded(tmp_path):
    tiny = from_arrays([[0.0], [1.0], [5.0], [6.0], [0.5], [5.5]], list("aabbab"), name="tiny",
                       classes=["a", "b"])
    path = _csv(tmp_path, tiny, "tiny")
    cfg = ExperimentConfig(corpus=(path,), learners=("knn:k=1",), techniques=("none", "l_filter"),
                           levels=(0.0,), runs=1, folds=10, ensemble_set=("knn:k=1", "naive_bayes"))
    rep = run_experiment(cfg)
    ok = [r for r in rep.records if r["technique"] == "none"]
    bad = [r for r in rep.records if r["technique"] == "l_filter"]
    assert ok[0]["error"] is None and ok[0]["accuracy"] == 1.0
    assert bad[0]["accuracy"] is None and "folds" in bad[0]["error"]
    assert len(rep.errors()) == 1


def test_l_filter_beats_none_on_noisy_blobs():
    cfg = ExperimentConfig(corpus=("two_blobs",), learners=("decision_tree", "knn:k=1"),
                           techniques=("none", "l_filter"), levels=(0.4,), runs=10)
    rep = run_experiment(cfg)
    for l in cfg.learners:
        assert rep.corpus_mean(l, "l_filter", 0.4) > rep.corpus_mean(l, "none", 0.4)


# ------------------------------------------------------------------ report

def _fake_records():
    recs = []
    accs = {"none": [0.70, 0.80, 0.60], "l_filter": [0.75, 0.80, 0.66]}
    for t, vals in accs.items():
        for d, v in zip(("d1", "d2", "d3"), vals):
            for run in range(2):
                recs.append({"dataset": d, "run": run, "level": 0.2, "learner": "knn", "technique": t,
                             "accuracy": v + (0.01 if run else -0.01), "n_train": 10, "error": None})
    for d, v in zip(("d1", "d2", "d3"), (0.72, 0.79, 0.68)):
        recs.append({"dataset": d, "run": 0, "level": 0.2, "learner": ENSEMBLE, "technique": "l_ensemble",
                     "accuracy": v, "n_train": 10, "error": None})
    return recs


def test_report_aggregates():
    rep = ExperimentReport(None, _fake_records())
    assert rep.datasets == ["d1", "d2", "d3"]
    assert rep.mean_accuracy("d1", "knn", "none", 0.2) == pytest.approx(0.70)
    assert rep.corpus_mean("knn", "l_filter", 0.2) == pytest.approx((0.75 + 0.80 + 0.66) / 3)
    pre = rep.percent_reduction("knn", "l_filter", 0.2)
    assert pre == pytest.approx([5 / 30, 0.0, 6 / 40])
    c = rep.compare("knn", "l_filter", 0.2)
    assert (c.wins, c.ties, c.losses) == (2, 1, 0)
    assert c.direction == "greater" and c.p == 0.25
    e = rep.compare(ENSEMBLE, "l_ensemble", 0.2, baseline_learner="knn")
    assert (e.wins, e.ties, e.losses) == (2, 0, 1)


def test_report_round_trip_and_table():
    rep = ExperimentReport(None, _fake_records()[::-1])
    back = ExperimentReport.from_records(rep.to_records())
    assert back.to_records() == rep.to_records()
    table = rep.to_table()
    assert "l_filter" in table and "p-val" in table and "Count" in table
    assert "2,1,0" in table and "%RE" in table


def test_records_sorted_and_keys_fixed():
    rep = ExperimentReport(None, _fake_records()[::-1])
    lines = rep.to_records().splitlines()
    keys = [tuple(json.loads(l)[k] for k in ("dataset", "level", "run", "technique", "learner")) for l in lines]
    assert keys == sorted(keys)
    assert all(list(json.loads(l)) == sorted(json.loads(l)) for l in lines)


def test_wins_ties_losses_sum():
    for a, b in itertools.product([[0.1, 0.5, 0.5], [0.2, 0.2, 0.9]], repeat=2):
        assert sum(win_tie_loss(a, b)) == 3

"""A small noise-robustness benchmark.

Artificial label noise is added to the training half of each dataset.
Each learner is then trained with no handling, after filtering, and with
weighting, and scored on the untouched test half.  The report compares
each technique with no handling by wins/ties/losses and a signed-rank test.

    python demos/noisy_benchmark.py
"""
from nicd.evalkit import ENSEMBLE, ExperimentConfig, run_experiment

cfg = ExperimentConfig(
    corpus=("iris", "wine", "crabs", "glass2", "zoo"),
    learners=("decision_tree", "knn"),
    techniques=("none", "l_filter", "l_weight", "l_ensemble", "3_ensemble"),
    levels=(0.0, 0.3),
    runs=3,
    seed=0,
)
rep = run_experiment(cfg, progress=lambda done, total: print(f"\r{done}/{total} jobs", end=""))
print()
print(rep.to_table())

for level in cfg.levels:
    print(f"noise {level:.0%}: L-ensemble {rep.corpus_mean(ENSEMBLE, 'l_ensemble', level):.3f}, "
          f"3-ensemble {rep.corpus_mean(ENSEMBLE, '3_ensemble', level):.3f}")

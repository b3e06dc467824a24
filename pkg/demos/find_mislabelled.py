"""Find planted label errors with a committee of learners.

We take a clean two-class problem, flip 15% of its labels, and ask every
registry learner to predict each instance out-of-fold.  An instance that
most of the committee gets wrong is a good candidate for a label error.

    python demos/find_mislabelled.py
"""
import numpy as np

from nicd import datasets
from nicd.datakit import NoiseSpec, inject_label_noise
from nicd.learners import REGISTRY
from nicd.noiseid import estimate_correctness, l_filter, l_weights

ds = datasets.load("two_blobs")
noisy, flipped = inject_label_noise(ds, NoiseSpec(rate=0.15, seed=1))
print(f"{len(noisy)} instances, {flipped.size} labels flipped")

# every learner sees the same ten folds, so scores are comparable
s = estimate_correctness(REGISTRY, noisy, folds=10, seed=1)
is_flip = np.zeros(len(noisy), dtype=bool)
is_flip[flipped] = True
print(f"mean score of flipped instances: {s.scores[is_flip].mean():.3f}")
print(f"mean score of clean instances:   {s.scores[~is_flip].mean():.3f}")

# hard decision: drop anything at least half the committee misclassifies
out = l_filter(noisy, s, threshold=0.5)
hits = np.intersect1d(out.removed, flipped).size
print(f"removed {out.removed.size}: recall {hits / flipped.size:.3f}, precision {hits / out.removed.size:.3f}")

# soft decision: keep everything, but down-weight suspicious instances
w = l_weights(s)
print(f"weights range {w.min():.3f} .. {w.max():.3f}; mean weight of flips {w[is_flip].mean():.3f}")

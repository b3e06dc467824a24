"""Pick a small, diverse committee from the learner registry.

Two learners are "close" when they tend to make the same predictions.
Clustering the learners on that distance and keeping the most accurate
member of each cluster gives a committee whose members disagree.

    python demos/diverse_learners.py
"""
from nicd import datasets
from nicd.diversity import cut_to_k, select_diverse
from nicd.learners import REGISTRY

corpus = datasets.load_corpus(["iris", "wine", "crabs", "glass2"])
sel = select_diverse(REGISTRY, corpus, folds=5, seed=0, k=3)

m = sel.matrix
print("pairwise disagreement (fraction of differing predictions)")
print(" " * 14 + "".join(f"{l[:8]:>9}" for l in m.labels))
for lab, row in zip(m.labels, m.values):
    print(f"{lab:>14}" + "".join(f"{v:9.3f}" for v in row))

print("\nmerge order")
for mg in sel.dendrogram.merges:
    print(f"  {mg.a:2d} + {mg.b:2d} at {mg.height:.3f} (size {mg.size})")

for k in (2, 3, 4):
    groups = [[m.labels[i] for i in g] for g in cut_to_k(sel.dendrogram, k)]
    print(f"k={k}: {groups}")
print("selected:", ", ".join(str(s) for s in sel.learners))

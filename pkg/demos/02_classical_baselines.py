"""
Bag-of-words baselines
======================

Multinomial naive Bayes, a linear SVM trained by SGD and a random forest,
all on count vectors, scored with per-class and averaged F1.
"""
import numpy as np

from offlang.classical import (
    SvmHyper, predict_labels, train_mnb, train_random_forest, train_svm_sgd,
)
from offlang.corpus import SynthConfig, stratified_split, synth_codeswitch
from offlang.features import build_vocabulary, to_matrix, vectorize
from offlang.metrics import evaluate, render_report
from offlang.textprep import classical_tokens

_, target = synth_codeswitch(SynthConfig(source_size=500, target_size=400, label_noise=0.05), seed=3)
train, val = stratified_split(target, validation_fraction=0.25, seed=0)

# the vocabulary comes from training documents only
tokens = [classical_tokens(t) for t in train.texts]
vocab = build_vocabulary(tokens)
X = to_matrix([vectorize(vocab, t) for t in tokens], len(vocab))
Xv = to_matrix([vectorize(vocab, classical_tokens(t)) for t in val.texts], len(vocab))
y = train.labels()
print(f"{X.shape[0]} training docs, {len(vocab)} features, {np.mean(y):.0%} offensive")

models = {
    "Multinomial NB": train_mnb(X, y),
    "Linear SVM": train_svm_sgd(X, y, SvmHyper(epochs=10)),
    "Random Forest": train_random_forest(X, y, n_trees=100, seed=0),
}

###############################################################################
# One row per model in the usual results table.

reports = [evaluate(val.labels(), predict_labels(m, Xv), name=name) for name, m in models.items()]
print(render_report(reports))

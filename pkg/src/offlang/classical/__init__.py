"""Bag-of-words baselines: Multinomial NB, SGD linear SVM, random forest."""
from ._common import argmax_not_on_tie
from .forest import DecisionTree, RfModel, build_tree, predict_rf, train_random_forest
from .mnb import MnbModel, predict_mnb, train_mnb
from .svm import SvmHyper, SvmModel, predict_svm, svm_margin, train_svm_sgd

MODEL_TYPES = {cls.kind: cls for cls in (MnbModel, SvmModel, RfModel)}


def predict_labels(model, X):
    """Hard labels for a batch; probability models break exact ties toward NOT."""
    if isinstance(model, SvmModel):
        return predict_svm(model, X)[0]
    return argmax_not_on_tie(predict_proba(model, X))


def predict_proba(model, X):
    """Class distributions, or None for the SVM (it has no calibrated probabilities)."""
    if isinstance(model, MnbModel):
        return predict_mnb(model, X)
    if isinstance(model, RfModel):
        return predict_rf(model, X)
    if isinstance(model, SvmModel):
        return None
    raise TypeError(f"not a classical model: {type(model).__name__}")

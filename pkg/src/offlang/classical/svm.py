"""Linear SVM trained by plain SGD on the L2-regularised hinge loss."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..features import as_matrix
from ._common import check_binary, single_or_batch


@dataclass(frozen=True)
class SvmHyper:
    alpha: float = 0.001
    seed: int = 5
    epochs: int = 15


@dataclass
class SvmModel:
    weights: np.ndarray
    bias: float
    hyper: SvmHyper = field(default_factory=SvmHyper)

    kind = "svm"

    @property
    def dimension(self) -> int:
        return len(self.weights)

    def tensors(self):
        return {"weights": self.weights, "bias": np.array([self.bias])}

    def meta(self):
        return {"alpha": self.hyper.alpha, "seed": self.hyper.seed, "epochs": self.hyper.epochs}

    @classmethod
    def from_tensors(cls, tensors, meta):
        return cls(tensors["weights"], float(tensors["bias"][0]),
                   SvmHyper(meta["alpha"], meta["seed"], meta["epochs"]))


def train_svm_sgd(X, y, hyper: SvmHyper | None = None, dimension: int | None = None) -> SvmModel:
    """Hinge loss + (alpha/2)||w||^2, one sample per step.

    Step size eta_t = 1 / (alpha * (t + t0)) with t0 = 1/alpha and t counting
    updates from 1, so the shrink factor (1 - eta*alpha) stays in (0, 1).
    Samples are reshuffled each epoch from an RNG seeded with ``hyper.seed``.
    The bias is not regularised. OFF is the positive class.
    """
    hyper = hyper or SvmHyper()
    if hyper.alpha <= 0 or hyper.epochs < 1:
        raise ValueError("alpha must be positive and epochs >= 1")
    M = as_matrix(X, dimension).tocsr()
    y = check_binary(y, M.shape[0])
    sign = np.where(y == 1, 1.0, -1.0)
    n, d = M.shape
    w = np.zeros(d)
    scale = 1.0  # w_true = scale * w
    b = 0.0
    rng = np.random.default_rng(hyper.seed)
    t0 = 1.0 / hyper.alpha
    t = 0
    indptr, indices, data = M.indptr, M.indices, M.data
    for _ in range(hyper.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (hyper.alpha * (t + t0))
            cols = indices[indptr[i]:indptr[i + 1]]
            vals = data[indptr[i]:indptr[i + 1]]
            margin = sign[i] * (scale * float(w[cols] @ vals) + b)
            scale *= 1.0 - eta * hyper.alpha
            if margin < 1.0:
                w[cols] += (eta * sign[i] / scale) * vals
                b += eta * sign[i]
            if scale < 1e-9:
                w *= scale
                scale = 1.0
    return SvmModel(w * scale, b, hyper)


def svm_margin(m: SvmModel, X) -> np.ndarray | float:
    single, M = single_or_batch(X, m.dimension)
    margin = M @ m.weights + m.bias
    return float(margin[0]) if single else margin


def predict_svm(m: SvmModel, X):
    """(label, margin); label is OFF (1) only for a strictly positive margin."""
    margin = svm_margin(m, X)
    label = (np.asarray(margin) > 0).astype(np.int64)
    if np.ndim(margin) == 0:
        return int(label), margin
    return label, margin

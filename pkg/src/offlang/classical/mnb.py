"""Multinomial Naive Bayes over bag-of-words counts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..features import as_matrix
from ._common import check_binary, single_or_batch


@dataclass
class MnbModel:
    log_priors: np.ndarray  # (2,)
    log_likelihoods: np.ndarray  # (2, |V|)
    smoothing: float = 1.0

    kind = "mnb"

    @property
    def dimension(self) -> int:
        return self.log_likelihoods.shape[1]

    def tensors(self) -> dict[str, np.ndarray]:
        return {"log_priors": self.log_priors, "log_likelihoods": self.log_likelihoods}

    def meta(self) -> dict:
        return {"smoothing": self.smoothing}

    @classmethod
    def from_tensors(cls, tensors, meta) -> "MnbModel":
        return cls(tensors["log_priors"], tensors["log_likelihoods"], meta["smoothing"])


def train_mnb(X, y, smoothing: float = 1.0, dimension: int | None = None) -> MnbModel:
    """Class priors from label frequencies, per-class token distributions
    with additive smoothing."""
    if smoothing <= 0:
        raise ValueError("smoothing must be positive")
    M = as_matrix(X, dimension)
    y = check_binary(y, M.shape[0])
    class_counts = np.bincount(y, minlength=2).astype(np.float64)
    feat = np.vstack([np.asarray(M[y == c].sum(axis=0)).ravel() for c in (0, 1)])
    smoothed = feat + smoothing
    log_lik = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    log_priors = np.log(class_counts) - np.log(class_counts.sum())
    return MnbModel(log_priors, log_lik, float(smoothing))


def predict_mnb(m: MnbModel, X) -> np.ndarray:
    """Posterior over (NOT, OFF); shape (2,) for one vector, (n, 2) for a batch."""
    single, M = single_or_batch(X, m.dimension)
    joint = M @ m.log_likelihoods.T + m.log_priors
    post = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))
    return post[0] if single else post

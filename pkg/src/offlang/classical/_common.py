from __future__ import annotations

import numpy as np

from ..features import SparseCountVector, as_matrix


def check_binary(y, n: int) -> np.ndarray:
    y = np.asarray([int(v) for v in y], dtype=np.int64)
    if len(y) != n or n == 0:
        raise ValueError(f"need as many labels as documents (got {len(y)} labels, {n} docs)")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 (NOT) or 1 (OFF)")
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    return y


def single_or_batch(X, dimension: int):
    single = isinstance(X, SparseCountVector) or (isinstance(X, np.ndarray) and X.ndim == 1)
    return single, as_matrix(X, dimension)


def argmax_not_on_tie(probs: np.ndarray) -> np.ndarray:
    """Class index per row; exact ties go to NOT (index 0)."""
    probs = np.atleast_2d(probs)
    return (probs[:, 1] > probs[:, 0]).astype(np.int64)

"""Bag-of-words vocabulary and sparse count vectors."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class BowVocabulary:
    def __init__(self, tokens: Sequence[str], min_frequency: int = 1):
        self.index_to_token = list(tokens)
        self.token_to_index = {t: i for i, t in enumerate(self.index_to_token)}
        if len(self.token_to_index) != len(self.index_to_token):
            raise ValueError("duplicate tokens in vocabulary")
        self.min_frequency = min_frequency

    def __len__(self):
        return len(self.index_to_token)

    def __eq__(self, other):
        return isinstance(other, BowVocabulary) and self.index_to_token == other.index_to_token

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, tok in enumerate(self.index_to_token):
                fh.write(f"{tok}\t{i}\n")

    @classmethod
    def load(cls, path, min_frequency: int = 1) -> "BowVocabulary":
        tokens = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                tok, idx = line.rstrip("\n").split("\t")
                if int(idx) != len(tokens):
                    raise ValueError(f"{path}:{lineno}: index {idx} out of sequence")
                tokens.append(tok)
        return cls(tokens, min_frequency)


@dataclass(frozen=True)
class SparseCountVector:
    indices: np.ndarray  # strictly increasing int64
    counts: np.ndarray  # int64, >= 1
    dimension: int

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.indices.tolist(), self.counts.tolist()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension, dtype=np.float64)
        out[self.indices] = self.counts
        return out


def build_vocabulary(train_docs: Sequence[Sequence[str]], min_frequency: int = 1) -> BowVocabulary:
    """Tokens seen at least ``min_frequency`` times, in first-occurrence order."""
    freq = Counter()
    order = {}
    for doc in train_docs:
        for tok in doc:
            freq[tok] += 1
            order.setdefault(tok, len(order))
    if not order:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = [t for t in order if freq[t] >= min_frequency]
    return BowVocabulary(kept, min_frequency)


def vectorize(vocab: BowVocabulary, tokens: Sequence[str]) -> SparseCountVector:
    counts = Counter(vocab.token_to_index[t] for t in tokens if t in vocab.token_to_index)
    idx = np.array(sorted(counts), dtype=np.int64)
    cnt = np.array([counts[i] for i in idx.tolist()], dtype=np.int64)
    return SparseCountVector(idx, cnt, len(vocab))


def to_matrix(vectors: Sequence[SparseCountVector], dimension: int | None = None) -> sp.csr_matrix:
    """Stack vectors into an (n, |V|) CSR count matrix."""
    if dimension is None:
        if not vectors:
            raise ValueError("dimension required for an empty batch")
        dimension = vectors[0].dimension
    for v in vectors:
        if v.dimension != dimension:
            raise ValueError(f"vector dimension {v.dimension} != {dimension}")
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v.indices) for v in vectors])
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.counts for v in vectors]).astype(np.float64) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dimension))


def as_matrix(X, dimension: int | None = None) -> sp.csr_matrix:
    """Accept a CSR matrix, a dense array or a list of SparseCountVector."""
    if sp.issparse(X):
        M = sp.csr_matrix(X, dtype=np.float64)
    elif isinstance(X, np.ndarray):
        M = sp.csr_matrix(np.atleast_2d(X).astype(np.float64))
    elif isinstance(X, SparseCountVector):
        M = to_matrix([X])
    else:
        M = to_matrix(list(X), dimension)
    if dimension is not None and M.shape[1] != dimension:
        raise ValueError(f"dimension mismatch: got {M.shape[1]}, model expects {dimension}")
    return M

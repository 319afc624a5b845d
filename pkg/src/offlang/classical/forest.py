"""Random forest of Gini CART trees on bag-of-words counts."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..features import as_matrix
from ._common import check_binary, single_or_batch

MIN_GAIN = 1e-12


@dataclass
class DecisionTree:
    """Flat array tree. ``left[i] == -1`` marks a leaf; samples go left when
    ``x[feature] <= threshold``. ``value`` holds weighted class counts."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, 2)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of dense ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.left[node] >= 0
        while active.any():
            r = rows[active]
            nd = node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.left[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        v = self.value[self.apply(X)]
        return v / v.sum(axis=1, keepdims=True)


def best_split(Xn: np.ndarray, feats: np.ndarray, w: np.ndarray, y: np.ndarray):
    """Best Gini split among the columns of ``Xn`` (rows = node samples).

    Returns (gain, feature, threshold) or None. Gain is the drop in
    weighted Gini impurity ``N*G(parent) - nL*G(L) - nR*G(R)``; ties go to
    the lowest feature index, then the lowest threshold.
    """
    n = len(w)
    if n < 2:
        return None
    wy = w * y
    tot = float(w.sum())
    tot1 = float(wy.sum())
    tot0 = tot - tot1
    parent = (tot0 * tot0 + tot1 * tot1) / tot

    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    nl = np.cumsum(w[order], axis=0)[:-1]
    l1 = np.cumsum(wy[order], axis=0)[:-1]
    l0 = nl - l1
    nr = tot - nl
    r1 = tot1 - l1
    r0 = nr - r1
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        score = (l0 * l0 + l1 * l1) / nl + (r0 * r0 + r1 * r1) / nr
    gain = np.where(valid, score - parent, -np.inf)
    best = gain.max()
    if not best > MIN_GAIN:
        return None
    # gains equal up to rounding count as ties so the tie rule is not at the mercy of summation order
    pos, col = np.nonzero(gain >= best - 1e-12 * max(1.0, tot))
    thr = (xs[pos, col] + xs[pos + 1, col]) / 2.0
    pick = min(range(len(pos)), key=lambda i: (int(feats[col[i]]), float(thr[i])))
    return float(best), int(feats[col[pick]]), float(thr[pick])


def build_tree(X: np.ndarray, y: np.ndarray, weights: np.ndarray, rng, max_features: int | None):
    """Grow an unpruned tree on the rows with positive weight."""
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(w_idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        ww = weights[w_idx]
        c1 = float((ww * y[w_idx]).sum())
        value.append((float(ww.sum()) - c1, c1))
        return len(feature) - 1

    root_idx = np.flatnonzero(weights > 0)
    stack = [(new_node(root_idx), root_idx)]
    while stack:
        node, idx = stack.pop()
        c0, c1 = value[node]
        if c0 == 0 or c1 == 0:
            continue
        if max_features is None or max_features >= n_features:
            feats = np.arange(n_features)
        else:
            feats = rng.choice(n_features, size=max_features, replace=False)
        split = best_split(X[np.ix_(idx, feats)], feats, weights[idx], y[idx])
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        li = new_node(idx[mask])
        ri = new_node(idx[~mask])
        feature[node], threshold[node], left[node], right[node] = f, thr, li, ri
        stack.append((ri, idx[~mask]))
        stack.append((li, idx[mask]))
    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64).reshape(-1, 2),
    )


@dataclass
class RfModel:
    trees: list[DecisionTree]
    n_features: int
    seed: int = 0

    kind = "rf"

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def dimension(self) -> int:
        return self.n_features

    def tensors(self):
        sizes = np.array([t.n_nodes for t in self.trees], dtype=np.int64)
        cat = lambda attr: np.concatenate([getattr(t, attr) for t in self.trees])  # noqa: E731
        return {
            "tree_sizes": sizes,
            "feature": cat("feature"),
            "threshold": cat("threshold"),
            "left": cat("left"),
            "right": cat("right"),
            "value": np.concatenate([t.value for t in self.trees]),
        }

    def meta(self):
        return {"n_features": self.n_features, "seed": self.seed}

    @classmethod
    def from_tensors(cls, tensors, meta):
        bounds = np.concatenate([[0], np.cumsum(tensors["tree_sizes"])])
        trees = []
        for a, b in zip(bounds[:-1], bounds[1:]):
            trees.append(DecisionTree(*(tensors[k][a:b] for k in
                                        ("feature", "threshold", "left", "right", "value"))))
        return cls(trees, int(meta["n_features"]), int(meta["seed"]))


def train_random_forest(X, y, n_trees: int = 500, seed: int = 0, *, bootstrap: bool = True,
                        max_features="sqrt", threads: int = 1, dimension: int | None = None) -> RfModel:
    """Bagged CART forest.

    Tree ``k`` draws its bootstrap sample and per-node feature subsets from
    ``default_rng([seed, k])``, so results do not depend on ``threads``.
    ``max_features`` is "sqrt" (ceil of sqrt |V|), an int, or None for all.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    M = as_matrix(X, dimension)
    y = check_binary(y, M.shape[0])
    Xd = M.toarray().astype(np.float32)
    n, d = Xd.shape
    if max_features == "sqrt":
        k = math.ceil(math.sqrt(d))
    elif max_features is None:
        k = None
    else:
        k = int(max_features)

    def grow(t):
        rng = np.random.default_rng([seed, t])
        if bootstrap:
            weights = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(np.float64)
        else:
            weights = np.ones(n)
        return build_tree(Xd, y, weights, rng, k)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            trees = list(pool.map(grow, range(n_trees)))
    else:
        trees = [grow(t) for t in range(n_trees)]
    return RfModel(trees, d, seed)


def predict_rf(m: RfModel, X) -> np.ndarray:
    """Mean of per-tree leaf class frequencies."""
    single, M = single_or_batch(X, m.dimension)
    Xd = M.toarray().astype(np.float32)
    probs = np.zeros((Xd.shape[0], 2))
    for tree in m.trees:
        probs += tree.predict_proba(Xd)
    probs /= len(m.trees)
    return probs[0] if single else probs

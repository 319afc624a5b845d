import numpy as np
import pytest
import scipy.sparse as sp

from oracles import cart_oracle, mnb_posterior, random_count_corpus, svm_reference
from offlang.classical import (
    DecisionTree, RfModel, SvmHyper, SvmModel, predict_labels, predict_mnb, predict_proba,
    predict_rf, predict_svm, svm_margin, train_mnb, train_random_forest, train_svm_sgd,
)
from offlang.features import SparseCountVector

# -- MNB ---------------------------------------------------------------------


def test_mnb_hand_case():
    X = np.array([[2, 0, 1], [1, 1, 0], [0, 2, 1], [0, 1, 2]])
    y = [0, 0, 1, 1]
    m = train_mnb(X, y)
    query = np.array([1, 0, 1])
    expect = [float(p) for p in mnb_posterior(X, y, query)]
    assert predict_mnb(m, query) == pytest.approx(expect, abs=1e-12)


def test_mnb_likelihoods_normalised():
    X, y = random_count_corpus(np.random.default_rng(3))
    m = train_mnb(X, y)
    assert np.exp(m.log_likelihoods).sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-9)


@pytest.mark.parametrize("case", range(100))
def test_mnb_matches_bayes_oracle(case):
    rng = np.random.default_rng(1000 + case)
    X, y = random_count_corpus(rng)
    smoothing = [1, 0.5, 2][case % 3]
    m = train_mnb(X, y, smoothing=smoothing)
    queries = rng.integers(0, 4, size=(5, X.shape[1]))
    got = predict_mnb(m, queries)
    for q, row in zip(queries, got):
        want = [float(p) for p in mnb_posterior(X, y, q, smoothing)]
        assert np.max(np.abs(row - want)) < 1e-9


def test_mnb_symmetric_corpus_equal_priors():
    X = np.array([[2, 1], [1, 2]])
    m = train_mnb(X, [0, 1])
    assert m.log_priors[0] == m.log_priors[1]


def test_mnb_empty_vector_gives_priors():
    X = np.array([[1, 0], [0, 1], [1, 1]])
    m = train_mnb(X, [0, 1, 1])
    assert predict_mnb(m, np.zeros(2)) == pytest.approx([1 / 3, 2 / 3], abs=1e-12)


def test_mnb_unseen_feature_has_mass():
    X = np.array([[1, 0, 0], [0, 1, 0]])
    m = train_mnb(X, [0, 1])
    assert np.all(np.isfinite(m.log_likelihoods))
    p = predict_mnb(m, np.array([0, 0, 3]))
    assert p == pytest.approx([0.5, 0.5], abs=1e-12)


def test_mnb_duplication_keeps_argmax():
    X = np.array([[3, 1], [1, 3]])
    m = train_mnb(X, [0, 1])
    x = np.array([1, 2])
    assert np.argmax(predict_mnb(m, x)) == np.argmax(predict_mnb(m, 2 * x)) == 1


def test_single_class_and_dimension_errors():
    with pytest.raises(ValueError):
        train_mnb(np.eye(2), [1, 1])
    m = train_mnb(np.eye(2), [0, 1])
    with pytest.raises(ValueError):
        predict_mnb(m, np.zeros(3))


# -- SVM ----------------------------------------------------------------------

def _separable(rng, n=40):
    X = rng.integers(0, 4, size=(n, 2)).astype(float)
    X[: n // 2, 0] += 5
    X[n // 2:, 1] += 5
    y = np.array([0] * (n // 2) + [1] * (n - n // 2))
    return X, y


def test_svm_separable_training_accuracy():
    X, y = _separable(np.random.default_rng(0))
    m = train_svm_sgd(X, y)
    labels, _ = predict_svm(m, X)
    assert np.mean(labels == y) == 1.0


def test_svm_matches_dense_reference():
    rng = np.random.default_rng(9)
    X = rng.integers(0, 3, size=(30, 6))
    y = rng.integers(0, 2, size=30)
    y[:2] = [0, 1]
    for alpha in (0.001, 0.1):
        m = train_svm_sgd(sp.csr_matrix(X), y, SvmHyper(alpha=alpha, seed=5, epochs=15))
        w, b = svm_reference(X, y, alpha, 5, 15)
        assert np.max(np.abs(m.weights - w)) < 1e-9 * max(1.0, np.abs(w).max())
        assert m.bias == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_svm_deterministic():
    X, y = _separable(np.random.default_rng(1))
    a, b = train_svm_sgd(X, y), train_svm_sgd(X, y)
    assert np.array_equal(a.weights, b.weights) and a.bias == b.bias


def test_svm_strong_regularisation_shrinks_weights():
    X, y = _separable(np.random.default_rng(2))
    weak = train_svm_sgd(X, y, SvmHyper(alpha=0.001))
    strong = train_svm_sgd(X, y, SvmHyper(alpha=1000.0))
    assert np.linalg.norm(strong.weights) < np.linalg.norm(weak.weights)


def test_svm_tie_goes_to_not_and_linearity():
    zero = SvmModel(np.zeros(3), 0.0)
    assert predict_svm(zero, np.ones(3))[0] == 0
    m = SvmModel(np.array([1.0, -2.0, 0.5]), 0.0)
    x = np.array([3.0, 1.0, 2.0])
    assert np.sign(svm_margin(m, x)) == -np.sign(svm_margin(m, -x))
    assert predict_proba(m, x) is None


# -- random forest ----------------------------------------------------------------

def _two_tree_forest():
    # tree A: x0 <= 0.5 -> (3 NOT, 1 OFF) else (0, 2); tree B: leaf (1, 1)
    a = DecisionTree(np.array([0, -1, -1]), np.array([0.5, 0, 0]), np.array([1, -1, -1]),
                     np.array([2, -1, -1]), np.array([[3, 3], [3, 1], [0, 2]], dtype=float))
    b = DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                     np.array([[1, 1]], dtype=float))
    return RfModel([a, b], n_features=1)


def test_rf_hand_averaged_leaves():
    m = _two_tree_forest()
    p = predict_rf(m, np.array([[0], [1]]))
    assert p[0] == pytest.approx([(0.75 + 0.5) / 2, (0.25 + 0.5) / 2])
    assert p[1] == pytest.approx([(0.0 + 0.5) / 2, (1.0 + 0.5) / 2])


def test_rf_disagreeing_pure_trees_tie_to_not():
    leaf = lambda v: DecisionTree(np.array([-1]), np.array([0.0]), np.array([-1]),  # noqa: E731
                                  np.array([-1]), np.array([v], dtype=float))
    m = RfModel([leaf([2, 0]), leaf([0, 5])], n_features=2)
    assert predict_rf(m, np.zeros(2)) == pytest.approx([0.5, 0.5])
    assert predict_labels(m, np.zeros((1, 2)))[0] == 0


@pytest.mark.parametrize("case", range(25))
def test_single_tree_matches_cart_oracle(case):
    rng = np.random.default_rng(500 + case)
    X, y = random_count_corpus(rng, max_docs=16, max_vocab=6)
    m = train_random_forest(X, y, n_trees=1, seed=case, bootstrap=False, max_features=None)
    oracle = cart_oracle(X, y)
    probes = np.vstack([X, rng.integers(0, 4, size=(10, X.shape[1]))])
    got = predict_rf(m, probes)[:, 1]
    want = np.array([float(oracle(r)) for r in probes])
    assert np.allclose(got, want, atol=1e-12)


def test_rf_deterministic_and_thread_independent():
    rng = np.random.default_rng(4)
    X, y = random_count_corpus(rng, max_docs=20, max_vocab=10)
    probe = rng.integers(0, 4, size=(15, X.shape[1]))
    a = predict_rf(train_random_forest(X, y, n_trees=30, seed=2), probe)
    b = predict_rf(train_random_forest(X, y, n_trees=30, seed=2, threads=4), probe)
    assert np.array_equal(a, b)


def test_rf_pure_feature_dataset():
    X = np.array([[1, 0], [2, 0], [3, 0], [0, 1], [0, 2]])
    y = np.array([0, 0, 0, 1, 1])
    m = train_random_forest(X, y, n_trees=20, seed=0)
    assert np.mean(predict_labels(m, X) == y) == 1.0
    assert all(t.n_nodes in (1, 3) for t in m.trees)


def test_rf_leaf_counts_cover_bootstrap_and_probs_sum_to_one():
    rng = np.random.default_rng(8)
    X, y = random_count_corpus(rng)
    m = train_random_forest(X, y, n_trees=10, seed=1)
    for t in m.trees:
        leaves = t.left == -1
        assert t.value[leaves].sum() == pytest.approx(len(y))
        internal = ~leaves
        assert np.all(t.right[internal] >= 0)
    p = predict_rf(m, X)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9) and np.all(p >= 0)


def test_sparse_vector_input():
    X = np.array([[1, 0], [0, 1]])
    m = train_mnb(X, [0, 1])
    v = SparseCountVector(np.array([1]), np.array([2]), 2)
    assert predict_mnb(m, v).shape == (2,)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from offlang.features import BowVocabulary, as_matrix, build_vocabulary, to_matrix, vectorize


def test_min_frequency_filters():
    v = build_vocabulary([["a", "b"], ["a"]], min_frequency=2)
    assert v.token_to_index == {"a": 0}


def test_single_token():
    assert build_vocabulary([["x"]]).token_to_index == {"x": 0}


def test_first_occurrence_order():
    v = build_vocabulary([["z", "y"], ["x", "z"]])
    assert v.index_to_token == ["z", "y", "x"]


def test_empty_corpus_errors():
    with pytest.raises(ValueError):
        build_vocabulary([[], []])
    with pytest.raises(ValueError):
        build_vocabulary([])


def test_vectorize_counts():
    v = BowVocabulary(["a", "b"])
    assert vectorize(v, ["a", "a", "b"]).entries == [(0, 2), (1, 1)]


def test_all_oov():
    vec = vectorize(BowVocabulary(["a", "b"]), ["q", "r"])
    assert vec.entries == [] and vec.dimension == 2


words = st.sampled_from(list("abcdefgh"))


@settings(max_examples=100, deadline=None)
@given(vocab=st.lists(words, min_size=1, max_size=8, unique=True),
       doc=st.lists(words, max_size=20), seed=st.integers(0, 1000))
def test_count_sum_and_order_insensitive(vocab, doc, seed):
    v = BowVocabulary(vocab)
    vec = vectorize(v, doc)
    assert int(vec.counts.sum()) == sum(1 for t in doc if t in v.token_to_index)
    assert np.all(np.diff(vec.indices) > 0) and np.all(vec.counts >= 1)
    shuffled = list(np.random.default_rng(seed).permutation(doc)) if doc else []
    other = vectorize(v, shuffled)
    assert other.entries == vec.entries


def test_matrix_conversion_and_dimension_check():
    v = BowVocabulary(["a", "b", "c"])
    vecs = [vectorize(v, d) for d in (["a", "c", "c"], [], ["b"])]
    M = to_matrix(vecs)
    assert M.toarray().tolist() == [[1, 0, 2], [0, 0, 0], [0, 1, 0]]
    assert (as_matrix(M.toarray()) != M).nnz == 0
    with pytest.raises(ValueError):
        as_matrix(M, dimension=4)


def test_vocab_file_roundtrip(tmp_path):
    v = BowVocabulary(["a", "ഇത്", "b"])
    v.save(tmp_path / "v.tsv")
    assert BowVocabulary.load(tmp_path / "v.tsv") == v
    assert (tmp_path / "v.tsv").read_text(encoding="utf-8").splitlines()[1] == "ഇത്\t1"

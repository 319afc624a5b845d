import unicodedata
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from offlang.textprep import (
    CLS, MASK, N_SPECIAL, PAD, SEP, UNK, EmojiTable, SubwordVocabulary, classical_tokens,
    convert_emojis, decode, default_table, encode, encode_batch, lemmatize_english,
    lemmatize_word, preprocess_classical, preprocess_transformer, remove_punctuation,
    strip_emojis, train_bpe, whitespace_tokenize,
)


# -- emoji ------------------------------------------------------------------

def test_smiley_converts_to_name():
    assert convert_emojis("🙂") == "slightly smiling face"


def test_convert_leaves_plain_text():
    assert convert_emojis("hello") == "hello"
    assert convert_emojis("a  b") == "a  b"


def test_convert_collapses_spacing():
    assert convert_emojis("good 🙂🙂") == "good slightly smiling face slightly smiling face"


def test_strip_examples():
    assert strip_emojis("good 🙂") == "good"
    assert strip_emojis("🙂") == ""
    assert strip_emojis("a🙂b") == "a b"


def test_zwj_sequence_longest_match():
    family = "👨‍👩‍👧"
    table = default_table()
    assert family in table
    out = convert_emojis(family)
    # the whole sequence maps to one name, not one name per person
    assert out == table.mapping[family]
    assert out != convert_emojis("👨")


def test_unknown_pictograph_is_dropped_and_counted():
    table = EmojiTable({"🙂": "slightly smiling face"})
    tally = Counter()
    assert convert_emojis("x 🦄 y 🙂", table, tally) == "x y slightly smiling face"
    assert tally == Counter(converted=1, unknown=1)


def test_table_names_are_plain_words():
    table = default_table()
    assert len(table) > 3000
    for seq, name in table.mapping.items():
        assert name and "_" not in name and ":" not in name
        assert name == name.strip() and "  " not in name


def test_table_tsv_roundtrip(tmp_path):
    t = EmojiTable({"🙂": "slightly smiling face", "👍🏽": "thumbs up medium skin tone"})
    t.to_tsv(tmp_path / "e.tsv")
    assert EmojiTable.from_tsv(tmp_path / "e.tsv").mapping == t.mapping


def test_malayalam_zwj_survives():
    text = "ന്‍റെ മലയാളം"
    assert convert_emojis(text) == text
    assert strip_emojis(text) == text


emoji_keys = sorted(default_table().mapping)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.one_of(st.sampled_from(emoji_keys), st.text(max_size=4)), max_size=6))
def test_emoji_operations_idempotent(parts):
    text = " ".join(parts)
    once = convert_emojis(text)
    assert convert_emojis(once) == once
    gone = strip_emojis(text)
    assert strip_emojis(gone) == gone


# -- normalisation -----------------------------------------------------------

def test_punctuation_examples():
    assert remove_punctuation("hello!!!") == "hello"
    assert remove_punctuation("") == ""
    assert remove_punctuation("it's a, test.") == "it s a test"


@settings(max_examples=200, deadline=None)
@given(st.text())
def test_punctuation_removed_completely(text):
    out = remove_punctuation(text)
    assert not any(unicodedata.category(ch).startswith("P") for ch in out)


def test_whitespace_tokenize():
    assert whitespace_tokenize("a  b") == ["a", "b"]
    assert whitespace_tokenize("") == []
    assert whitespace_tokenize("a\tb\nc") == ["a", "b", "c"]


@pytest.mark.parametrize("word,lemma", [
    ("running", "run"), ("buses", "bus"), ("making", "make"), ("cats", "cat"),
    ("stopped", "stop"), ("tried", "try"), ("parties", "party"), ("boxes", "box"),
    ("agreed", "agreed"), ("class", "class"), ("bus", "bus"), ("Running", "Run"),
    ("calling", "call"), ("this", "this"),
])
def test_lemma_rules(word, lemma):
    assert lemmatize_word(word) == lemma


def test_lemmatizer_skips_non_ascii():
    assert lemmatize_english(["മലയാളം"]) == ["മലയാളം"]
    assert lemmatize_english(["naïves"]) == ["naïves"]


def test_classical_pipeline():
    toks = classical_tokens("Stop RUNNING, you fools!! 🙂 മലയാളം")
    assert toks == ["stop", "run", "you", "fool", "മലയാളം"]
    assert preprocess_classical("Hello, World!", lowercase=False) == "Hello World"


def test_transformer_pipeline_only_converts_emojis():
    assert preprocess_transformer("Hi, THERE!! 🙂") == "Hi, THERE!! slightly smiling face"


# -- BPE -----------------------------------------------------------------------

def test_no_merges_gives_base_alphabet():
    v = train_bpe(["anything"], 0)
    assert v.size == 256 + 5
    assert [v.id_to_token[i] for i in range(N_SPECIAL)] == ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    assert (PAD, UNK, CLS, SEP, MASK) == (0, 1, 2, 3, 4)


def test_first_merge_by_hand():
    assert train_bpe(["aaaa"], 1).merges == [(b"a", b"a")]


def test_tie_break_is_lexicographic():
    # ("a","b") and ("c","d") each occur once; the smaller pair wins
    assert train_bpe(["cd", "ab"], 1).merges[0] == (b"a", b"b")


def test_bpe_deterministic_fingerprint():
    corpus = ["the cat sat", "on the mat", "cats and hats"]
    assert train_bpe(corpus, 20).fingerprint == train_bpe(corpus, 20).fingerprint
    assert train_bpe(corpus, 6).fingerprint != train_bpe(corpus, 5).fingerprint


def test_bpe_empty_corpus_is_error():
    with pytest.raises(ValueError):
        train_bpe([], 5)


def test_encode_layout():
    v = train_bpe(["hello world"], 10)
    empty = encode(v, "", 6)
    assert list(empty.ids) == [CLS, SEP, PAD, PAD, PAD, PAD]
    assert empty.attention_length == 2
    seq = encode(v, "a long sentence that will not fit", 16)
    assert len(seq.ids) == 16 and seq.ids[0] == CLS and seq.ids[-1] == SEP
    assert list(seq.ids).count(SEP) == 1


def test_decode_errors_and_pads():
    v = train_bpe(["hello"], 3)
    assert decode(v, [PAD] * 5) == ""
    with pytest.raises(ValueError):
        decode(v, [CLS, 10**9, SEP])


def test_vocab_file_roundtrip(tmp_path):
    v = train_bpe(["offensive words here", "ഇത് ഒരു വാചകം"], 40)
    v.save(tmp_path / "v.bpe")
    w = SubwordVocabulary.load(tmp_path / "v.bpe")
    assert w == v and w.fingerprint == v.fingerprint
    lines = (tmp_path / "v.bpe").read_text().splitlines()
    lines[-1], lines[-2] = lines[-2], lines[-1]
    (tmp_path / "bad.bpe").write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        SubwordVocabulary.load(tmp_path / "bad.bpe")


_VOCAB = train_bpe(["hello world", "ഇത് ഒരു വാചകം 🙂", "naïve café"], 60)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40))
def test_roundtrip_any_text(text):
    seq = encode(_VOCAB, text, 4 * len(text.encode("utf-8")) + 3)
    assert decode(_VOCAB, seq) == text
    ids = list(seq.ids)
    n = seq.attention_length
    assert ids[0] == CLS and ids[n - 1] == SEP
    assert all(i == PAD for i in ids[n:])


def test_encode_batch_shapes():
    ids, lengths = encode_batch(_VOCAB, ["hello", "", "world hello"], 12)
    assert ids.shape == (3, 12)
    assert list(lengths) == [int((row != PAD).sum()) for row in ids]

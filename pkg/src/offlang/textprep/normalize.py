"""Punctuation removal, tokenization, English lemmatization and the two
preprocessing regimes (classical bag-of-words vs. transformer)."""
from __future__ import annotations

import sys
import unicodedata
from functools import lru_cache

from .emoji import EmojiTable, convert_emojis, strip_emojis


@lru_cache(maxsize=1)
def _punct_table() -> dict[int, str]:
    # every codepoint whose general category starts with "P"
    return {
        cp: " "
        for cp in range(sys.maxunicode + 1)
        if unicodedata.category(chr(cp)).startswith("P")
    }


def remove_punctuation(text: str) -> str:
    """Delete Unicode punctuation (categories P*), splitting tokens at it."""
    return " ".join(text.translate(_punct_table()).split())


def whitespace_tokenize(text: str) -> list[str]:
    return text.split()


_VOWELS = set("aeiou")


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s) or (len(s) > 1 and "y" in s[1:])


def _is_consonant(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        return i == 0 or not _is_consonant(word, i - 1)
    return True


def _short_cvc(stem: str) -> bool:
    """Stem is one syllable ending consonant-vowel-consonant (hop, mak, lik)."""
    if len(stem) < 3 or stem[-1] in "wxy":
        return False
    if not (_is_consonant(stem, -3 + len(stem)) and not _is_consonant(stem, len(stem) - 2)
            and _is_consonant(stem, len(stem) - 1)):
        return False
    vowel_groups = 0
    prev_vowel = False
    for i in range(len(stem)):
        v = not _is_consonant(stem, i)
        if v and not prev_vowel:
            vowel_groups += 1
        prev_vowel = v
    return vowel_groups == 1


def _undo_suffix(stem: str) -> str:
    # running -> runn -> run; but falling -> fall, missed -> miss
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "lsz" and _is_consonant(stem, len(stem) - 1):
        return stem[:-1]
    if _short_cvc(stem):
        return stem + "e"
    return stem


def _reduce(w: str) -> str:
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("sses"):
        return w[:-2]
    if w.endswith(("shes", "ches", "xes", "zes", "ses")) and len(w) > 4:
        return w[:-2]
    if w.endswith("ing") and len(w) > 5:
        stem = w[:-3]
        return _undo_suffix(stem) if _has_vowel(stem) else w
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("eed"):
        return w
    if w.endswith("ed") and len(w) > 4:
        stem = w[:-2]
        return _undo_suffix(stem) if _has_vowel(stem) else w
    if w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    return w


@lru_cache(maxsize=65536)
def lemmatize_word(word: str) -> str:
    """Rule-based reduction of plural, -ing and -ed forms of ASCII words.

    Anything that is not purely ASCII letters (Malayalam script, digits,
    mixed tokens) is returned unchanged. Case of the kept prefix is preserved.
    """
    if not (word.isascii() and word.isalpha()) or len(word) < 4:
        return word
    lower = word.lower()
    reduced = _reduce(lower)
    if reduced == lower:
        return word
    n = 0
    while n < min(len(reduced), len(lower)) and reduced[n] == lower[n]:
        n += 1
    return word[:n] + reduced[n:]


def lemmatize_english(tokens: list[str]) -> list[str]:
    return [lemmatize_word(t) for t in tokens]


def _lower_ascii(text: str) -> str:
    return "".join(c.lower() if c.isascii() else c for c in text)


def classical_tokens(text: str, table: EmojiTable | None = None, lowercase: bool = True) -> list[str]:
    """strip emojis -> remove punctuation -> tokenize -> lemmatize."""
    text = strip_emojis(text, table)
    text = remove_punctuation(text)
    if lowercase:
        text = _lower_ascii(text)
    return lemmatize_english(whitespace_tokenize(text))


def preprocess_classical(text: str, table: EmojiTable | None = None, lowercase: bool = True) -> str:
    return " ".join(classical_tokens(text, table, lowercase))


def preprocess_transformer(text: str, table: EmojiTable | None = None) -> str:
    """Transformer input is only emoji-to-text converted."""
    return convert_emojis(text, table)


REGIMES = {
    "classical": preprocess_classical,
    "transformer": preprocess_transformer,
}

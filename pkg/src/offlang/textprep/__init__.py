"""Text preprocessing: emoji handling, normalization, lemmatization, BPE."""
from .bpe import (
    CLS, MASK, N_SPECIAL, PAD, SEP, SPECIALS, UNK,
    SubwordVocabulary, TokenIdSequence, decode, encode, encode_batch, train_bpe,
)
from .emoji import EmojiTable, convert_emojis, default_table, strip_emojis
from .normalize import (
    REGIMES, classical_tokens, lemmatize_english, lemmatize_word,
    preprocess_classical, preprocess_transformer, remove_punctuation, whitespace_tokenize,
)

"""
Preprocessing and subword vocabularies
======================================

Two regimes prepare text: the classical one strips emojis and punctuation
and lemmatizes, the transformer one only spells emojis out as words. The
subword vocabulary for the encoder is a byte-level BPE trained on raw text.
"""
from offlang.corpus import SynthConfig, synth_codeswitch
from offlang.textprep import (
    convert_emojis, decode, encode, preprocess_classical, preprocess_transformer, train_bpe,
)

comment = "Adipoli video 🙂🙂 , you're the BEST!!"

print("raw         :", comment)
print("transformer :", preprocess_transformer(comment))
print("classical   :", preprocess_classical(comment))

# converting twice changes nothing
assert convert_emojis(convert_emojis(comment)) == convert_emojis(comment)

###############################################################################
# A BPE vocabulary over a small synthetic code-switched corpus.
# The first five ids are reserved for PAD, UNK, CLS, SEP and MASK.

source, target = synth_codeswitch(SynthConfig(source_size=300, target_size=80), seed=0)
vocab = train_bpe(source.texts + target.texts, merge_count=200)
print("vocabulary size:", vocab.size, "fingerprint:", vocab.fingerprint[:12])

text = target.texts[0]
ids = encode(vocab, text, max_len=32)
print(text)
print(ids.ids[: ids.attention_length])
print(decode(vocab, ids))

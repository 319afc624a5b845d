"""Adam training loops: [CLS] classification fine-tuning and masked-LM pretraining."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus import LabeledDataset
from ..textprep.bpe import CLS, MASK, N_SPECIAL, PAD, SEP, SubwordVocabulary, TokenIdSequence, encode_batch
from .model import (
    Checkpoint,
    ClassifierHead,
    EncoderWeights,
    classify_loss,
    mlm_loss,
)


class NumericalError(FloatingPointError):
    """Loss became NaN or infinite during training."""


class VocabularyMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 1e-5
    epochs: int = 3
    batch_size: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    mask_rate: float = 0.15

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


class Adam:
    def __init__(self, params: dict[str, np.ndarray], hyper: TrainHyper):
        self.h = hyper
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        h = self.h
        self.t += 1
        c1 = 1.0 - h.beta1 ** self.t
        c2 = 1.0 - h.beta2 ** self.t
        lr = h.learning_rate * math.sqrt(c2) / c1
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= h.beta1
            m += (1.0 - h.beta1) * g
            v *= h.beta2
            v += (1.0 - h.beta2) * (g * g)
            params[k] -= (lr * m / (np.sqrt(v) + h.eps)).astype(params[k].dtype)


def _check_vocab(w: EncoderWeights, vocab: SubwordVocabulary):
    if w.vocab_fingerprint is not None and w.vocab_fingerprint != vocab.fingerprint:
        raise VocabularyMismatch(
            f"encoder was built for vocabulary {w.vocab_fingerprint[:12]}, "
            f"data uses {vocab.fingerprint[:12]}"
        )
    if w.config.vocab_size != vocab.size:
        raise VocabularyMismatch(f"encoder vocab_size {w.config.vocab_size} != {vocab.size}")


def _batches(order, batch_size):
    for s in range(0, len(order), batch_size):
        yield s // batch_size, order[s:s + batch_size]


def train_classifier(w: EncoderWeights, head: ClassifierHead, ds: LabeledDataset,
                     vocab: SubwordVocabulary, hyper: TrainHyper | None = None,
                     provenance: dict | None = None) -> Checkpoint:
    """Fine-tune encoder and head on cross-entropy of the [CLS] classifier.

    Inputs are not modified; the returned checkpoint holds trained copies
    and a per-epoch log of (epoch, "train", mean loss, accuracy).
    """
    hyper = hyper or TrainHyper()
    _check_vocab(w, vocab)
    y = ds.labels()
    ids, lengths = encode_batch(vocab, ds.texts, w.config.max_len)
    enc = w.copy()
    enc.vocab_fingerprint = vocab.fingerprint
    hd = head.copy()
    params = dict(enc.params)
    params["head.W"] = hd.W
    params["head.b"] = hd.bias
    opt = Adam(params, hyper)
    rng = np.random.default_rng([hyper.seed, 0xC1A5])
    log = []
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(len(y))
        total, correct = 0.0, 0
        for bi, idx in _batches(order, hyper.batch_size):
            width = int(lengths[idx].max())
            loss, probs, grads = classify_loss(enc, hd, ids[idx, :width], y[idx], rng)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite loss at epoch {epoch}, batch {bi}")
            opt.step(params, grads)
            total += loss * len(idx)
            correct += int(np.sum(np.argmax(probs, 1) == y[idx]))
        log.append((epoch, "train", total / len(y), correct / len(y)))
    prov = dict(provenance or {})
    return Checkpoint(enc, hd, prov, log)


def mask_tokens(ids, rate: float = 0.15, seed=0, vocab_size: int | None = None):
    """Select max(1, round(rate * n)) of the n content positions for MLM.

    Selected positions become [MASK] with probability 0.8, a random
    non-special id with 0.1 (needs ``vocab_size``), and stay as they are
    otherwise. Returns (masked TokenIdSequence, positions, original ids).
    ``seed`` may be an int or a numpy Generator.
    """
    seq = ids if isinstance(ids, TokenIdSequence) else TokenIdSequence(
        np.asarray(ids, dtype=np.int64), int(np.sum(np.asarray(ids) != PAD)))
    arr = seq.ids
    content = np.flatnonzero((arr != PAD) & (arr != CLS) & (arr != SEP) & (arr != MASK))
    if len(content) == 0:
        raise ValueError("sequence has no maskable tokens")
    rng = np.random.default_rng(seed)
    k = max(1, int(math.floor(rate * len(content) + 0.5)))
    pos = np.sort(rng.choice(content, size=k, replace=False))
    originals = arr[pos].copy()
    out = arr.copy()
    roll = rng.random(k)
    high = vocab_size if vocab_size is not None else int(arr.max()) + 1
    for j, p in enumerate(pos):
        if roll[j] < 0.8:
            out[p] = MASK
        elif roll[j] < 0.9 and high > N_SPECIAL:
            out[p] = rng.integers(N_SPECIAL, high)
    return TokenIdSequence(out, seq.attention_length), pos, originals


def mlm_pretrain(w: EncoderWeights, corpus: LabeledDataset, vocab: SubwordVocabulary,
                 hyper: TrainHyper | None = None) -> EncoderWeights:
    """Continue training the encoder as a masked language model on ``corpus``
    text (labels ignored). The tied output layer's bias is discarded after.
    Per-epoch (epoch, "mlm", mean masked-token loss, None) records are
    appended to the returned weights' ``history``."""
    hyper = hyper or TrainHyper()
    _check_vocab(w, vocab)
    if len(corpus) == 0:
        raise ValueError("empty MLM corpus")
    ids, lengths = encode_batch(vocab, corpus.texts, w.config.max_len)
    keep = lengths > 2
    ids, lengths = ids[keep], lengths[keep]
    if len(ids) == 0:
        raise ValueError("MLM corpus has no non-empty documents")
    enc = w.copy()
    enc.vocab_fingerprint = vocab.fingerprint
    params = dict(enc.params)
    params["mlm.b"] = np.zeros(w.config.vocab_size, dtype=enc.params["tok_emb"].dtype)
    opt = Adam(params, hyper)
    rng = np.random.default_rng([hyper.seed, 0x3A5C])
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(len(ids))
        total, hits, n_tok = 0.0, 0, 0
        for bi, idx in _batches(order, hyper.batch_size):
            width = int(lengths[idx].max())
            batch = ids[idx, :width].copy()
            rows, cols, targets = [], [], []
            for r in range(len(idx)):
                masked, pos, orig = mask_tokens(
                    TokenIdSequence(batch[r], int(lengths[idx[r]])), hyper.mask_rate, rng,
                    w.config.vocab_size)
                batch[r] = masked.ids
                rows.extend([r] * len(pos))
                cols.extend(pos.tolist())
                targets.extend(orig.tolist())
            rows, cols, targets = np.array(rows), np.array(cols), np.array(targets)
            loss, grads = mlm_loss(enc, params["mlm.b"], batch, rows, cols, targets, rng)
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite MLM loss at epoch {epoch}, batch {bi}")
            opt.step(params, grads)
            total += loss * len(targets)
            n_tok += len(targets)
        enc.history.append((epoch, "mlm", total / n_tok, None))
    return enc

"""Byte-level BPE tokenizer with [CLS]/[SEP]-framed fixed-length encoding."""
from __future__ import annotations

import hashlib
import heapq
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
PAD, UNK, CLS, SEP, MASK = range(len(SPECIALS))
N_SPECIAL = len(SPECIALS)

# whitespace is glued to the following word so chunks concatenate back to the text
_CHUNK = re.compile(r"\s*\S+|\s+")

_FORMAT = "# offlang-bpe v1"


def pretokenize(text: str) -> list[bytes]:
    return [m.encode("utf-8") for m in _CHUNK.findall(text)]


@dataclass(frozen=True)
class TokenIdSequence:
    ids: np.ndarray  # int64, length == max_len
    attention_length: int

    def __len__(self):
        return len(self.ids)


class SubwordVocabulary:
    """Merge list plus token<->id tables.

    Ids 0-4 are the special tokens, 5-260 the 256 single bytes, and merged
    tokens follow in order of first creation.
    """

    def __init__(self, merges: Sequence[tuple[bytes, bytes]]):
        self.merges = [(bytes(a), bytes(b)) for a, b in merges]
        self.id_to_token: list[bytes | str] = list(SPECIALS) + [bytes([i]) for i in range(256)]
        self.token_to_id: dict[bytes, int] = {
            bytes([i]): i + N_SPECIAL for i in range(256)
        }
        self.ranks: dict[tuple[bytes, bytes], int] = {}
        for rank, (a, b) in enumerate(self.merges):
            if a not in self.token_to_id or b not in self.token_to_id:
                raise ValueError(f"merge {rank} uses unknown token(s) {a!r}, {b!r}")
            self.ranks.setdefault((a, b), rank)
            new = a + b
            if new not in self.token_to_id:
                self.token_to_id[new] = len(self.id_to_token)
                self.id_to_token.append(new)
        self.fingerprint = _fingerprint(self.merges)
        self._cache: dict[bytes, list[int]] = {}

    def __len__(self):
        return len(self.id_to_token)

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def __eq__(self, other):
        return isinstance(other, SubwordVocabulary) and self.fingerprint == other.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    def _bpe(self, chunk: bytes) -> list[int]:
        cached = self._cache.get(chunk)
        if cached is not None:
            return cached
        parts = [bytes([c]) for c in chunk]
        while len(parts) > 1:
            best = None
            best_rank = None
            for i in range(len(parts) - 1):
                r = self.ranks.get((parts[i], parts[i + 1]))
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = (parts[i], parts[i + 1]), r
            if best is None:
                break
            merged = []
            i = 0
            while i < len(parts):
                if i < len(parts) - 1 and (parts[i], parts[i + 1]) == best:
                    merged.append(parts[i] + parts[i + 1])
                    i += 2
                else:
                    merged.append(parts[i])
                    i += 1
            parts = merged
        ids = [self.token_to_id[p] for p in parts]
        if len(self._cache) < 200_000:
            self._cache[chunk] = ids
        return ids

    def tokenize(self, text: str) -> list[int]:
        """Subword ids for ``text`` without specials."""
        out = []
        for chunk in pretokenize(text):
            out.extend(self._bpe(chunk))
        return out

    def token_bytes(self, idx: int) -> bytes:
        tok = self.id_to_token[idx]
        return b"" if isinstance(tok, str) else tok

    # -- persistence -------------------------------------------------------
    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_FORMAT + "\n")
            fh.write(f"fingerprint\t{self.fingerprint}\n")
            for a, b in self.merges:
                fh.write(f"merge\t{a.hex()}\t{b.hex()}\n")

    @classmethod
    def load(cls, path) -> "SubwordVocabulary":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != _FORMAT:
            raise ValueError(f"{path}: not an offlang BPE vocabulary file")
        expected = None
        merges = []
        for ln in lines[1:]:
            kind, *rest = ln.split("\t")
            if kind == "fingerprint":
                expected = rest[0]
            elif kind == "merge":
                merges.append((bytes.fromhex(rest[0]), bytes.fromhex(rest[1])))
            else:
                raise ValueError(f"{path}: unexpected line {ln!r}")
        vocab = cls(merges)
        if expected != vocab.fingerprint:
            raise ValueError(f"{path}: fingerprint mismatch (file corrupted?)")
        return vocab


def _fingerprint(merges) -> str:
    h = hashlib.sha256(b"offlang-bpe-v1\n")
    for a, b in merges:
        h.update(f"{a.hex()} {b.hex()}\n".encode())
    return h.hexdigest()


def train_bpe(corpus: Iterable[str], merge_count: int) -> SubwordVocabulary:
    """Learn ``merge_count`` byte-pair merges.

    Each step merges the most frequent adjacent pair; ties go to the
    lexicographically smaller (left, right) byte pair. Stops early if no
    pairs remain.
    """
    if merge_count < 0:
        raise ValueError("merge_count must be >= 0")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    word_freq = Counter(chunk for text in corpus for chunk in pretokenize(text))
    words = [[bytes([c]) for c in w] for w in word_freq]
    freqs = list(word_freq.values())

    pair_count: defaultdict[tuple[bytes, bytes], int] = defaultdict(int)
    where: defaultdict[tuple[bytes, bytes], set[int]] = defaultdict(set)
    for wi, syms in enumerate(words):
        for pair in zip(syms, syms[1:]):
            pair_count[pair] += freqs[wi]
            where[pair].add(wi)
    heap = [(-c, p) for p, c in pair_count.items()]
    heapq.heapify(heap)

    merges = []
    while len(merges) < merge_count and heap:
        neg, pair = heapq.heappop(heap)
        if pair_count.get(pair, 0) != -neg or -neg <= 0:
            continue  # stale entry
        merges.append(pair)
        a, b = pair
        new = a + b
        touched = set()
        for wi in sorted(where.pop(pair, ())):
            syms = words[wi]
            f = freqs[wi]
            for p in zip(syms, syms[1:]):
                pair_count[p] -= f
                touched.add(p)
            out = []
            i = 0
            while i < len(syms):
                if i < len(syms) - 1 and syms[i] == a and syms[i + 1] == b:
                    out.append(new)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[wi] = out
            for p in zip(out, out[1:]):
                pair_count[p] += f
                where[p].add(wi)
                touched.add(p)
        pair_count.pop(pair, None)
        for p in touched:
            c = pair_count.get(p, 0)
            if c > 0:
                heapq.heappush(heap, (-c, p))
            else:
                pair_count.pop(p, None)
    return SubwordVocabulary(merges)


def encode(vocab: SubwordVocabulary, text: str, max_len: int) -> TokenIdSequence:
    """[CLS] subwords [SEP] [PAD]...; the tail of long texts is truncated."""
    if max_len < 3:
        raise ValueError("max_len must be >= 3")
    body = vocab.tokenize(text)[: max_len - 2]
    n = len(body) + 2
    ids = np.full(max_len, PAD, dtype=np.int64)
    ids[0] = CLS
    ids[1 : n - 1] = body
    ids[n - 1] = SEP
    return TokenIdSequence(ids, n)


def encode_batch(vocab: SubwordVocabulary, texts: Sequence[str], max_len: int):
    """Stacked ids (n, max_len) and attention lengths (n,)."""
    seqs = [encode(vocab, t, max_len) for t in texts]
    ids = np.stack([s.ids for s in seqs]) if seqs else np.zeros((0, max_len), np.int64)
    lengths = np.array([s.attention_length for s in seqs], dtype=np.int64)
    return ids, lengths


def decode(vocab: SubwordVocabulary, ids) -> str:
    if isinstance(ids, TokenIdSequence):
        ids = ids.ids
    out = bytearray()
    for idx in np.asarray(ids, dtype=np.int64).tolist():
        if not 0 <= idx < vocab.size:
            raise ValueError(f"token id {idx} out of range for vocabulary of {vocab.size}")
        if idx >= N_SPECIAL:
            out += vocab.token_bytes(idx)
    return out.decode("utf-8", errors="replace")

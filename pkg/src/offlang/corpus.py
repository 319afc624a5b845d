"""Datasets: TSV ingestion, label mapping, stratified splits, stats and a
synthetic two-language transfer benchmark."""
from __future__ import annotations

import enum
import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class Label(enum.IntEnum):
    NOT = 0
    OFF = 1


DEFAULT_LABEL_ALIASES: dict[str, Label] = {
    "NOT": Label.NOT,
    "OFF": Label.OFF,
    "0": Label.NOT,
    "1": Label.OFF,
    "not-offensive": Label.NOT,
    "not_offensive": Label.NOT,
    "Not_offensive": Label.NOT,
    "Not offensive": Label.NOT,
    "offensive": Label.OFF,
    "Offensive": Label.OFF,
}


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: Label | None = None


@dataclass
class LabeledDataset:
    documents: list[Document]
    name: str = "dataset"

    def __post_init__(self):
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise DataError(f"{self.name}: duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    @property
    def is_labeled(self) -> bool:
        """True when every document carries a label. Mixed datasets raise."""
        n = sum(d.label is not None for d in self.documents)
        if 0 < n < len(self.documents):
            raise DataError(f"{self.name}: mix of labeled and unlabeled documents")
        return n == len(self.documents) and n > 0

    def labels(self) -> np.ndarray:
        if not self.is_labeled:
            raise DataError(f"{self.name}: dataset is not labeled")
        return np.array([int(d.label) for d in self.documents], dtype=np.int64)

    def subset(self, indices: Iterable[int], name: str | None = None) -> "LabeledDataset":
        return LabeledDataset([self.documents[i] for i in indices], name or self.name)


@dataclass(frozen=True)
class CorpusStats:
    total: int
    per_class: dict[Label, int]
    class_ratio: float  # fraction of OFF documents


@dataclass
class TsvSchema:
    """Column layout of a TSV file.

    Columns are given by header name (requires ``header=True``) or by
    0-based index. ``label`` may be None for unlabeled files.
    """

    id: str | int = "id"
    text: str | int = "text"
    label: str | int | None = "label"
    header: bool = True
    n_columns: int | None = None
    label_aliases: Mapping[str, Label] = field(default_factory=lambda: dict(DEFAULT_LABEL_ALIASES))


def map_label(raw: str, aliases: Mapping[str, Label] = DEFAULT_LABEL_ALIASES) -> Label:
    try:
        return Label(aliases[raw])
    except KeyError:
        raise DataError(f"unknown label {raw!r}") from None


def map_olid_level_a(raw_label: str) -> Label:
    """OLID subtask A: ``OFF`` -> OFF, ``NOT`` -> NOT. Level B/C tags are rejected."""
    if raw_label == "OFF":
        return Label.OFF
    if raw_label == "NOT":
        return Label.NOT
    raise DataError(f"not an OLID level-A label: {raw_label!r}")


def _resolve(col, header, what):
    if isinstance(col, int):
        return col
    if header is None:
        raise DataError(f"column {what}={col!r} given by name but schema has no header")
    try:
        return header.index(col)
    except ValueError:
        raise DataError(f"header has no column {col!r} (found {header})") from None


def load_tsv(path, schema: TsvSchema | None = None, name: str | None = None) -> LabeledDataset:
    """Read a UTF-8 TSV into a dataset, one document per data row in file order."""
    schema = schema or TsvSchema()
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]

    header = None
    start = 0
    if schema.header:
        if not lines:
            raise DataError(f"{path}: empty file, expected a header row")
        header = lines[0].split("\t")
        start = 1
    id_col = _resolve(schema.id, header, "id")
    text_col = _resolve(schema.text, header, "text")
    label_col = None if schema.label is None else _resolve(schema.label, header, "label")
    if header is not None:
        width = len(header)
    elif schema.n_columns is not None:
        width = schema.n_columns
    else:
        width = max(c for c in (id_col, text_col, label_col) if c is not None) + 1

    docs = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(cols)}")
        label = None
        if label_col is not None:
            try:
                label = map_label(cols[label_col], schema.label_aliases)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
        docs.append(Document(cols[id_col], cols[text_col], label))
    return LabeledDataset(docs, name or path.stem)


def write_tsv(ds: LabeledDataset, path, with_labels: bool | None = None) -> None:
    """Write ``id<TAB>text[<TAB>label]`` with a header row."""
    if with_labels is None:
        with_labels = ds.is_labeled if len(ds) else False
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id\ttext\tlabel\n" if with_labels else "id\ttext\n")
        for doc in ds:
            if "\t" in doc.text or "\n" in doc.text or "\t" in doc.id:
                raise DataError(f"document {doc.id!r}: tabs/newlines cannot be written to TSV")
            if with_labels:
                fh.write(f"{doc.id}\t{doc.text}\t{doc.label.name}\n")
            else:
                fh.write(f"{doc.id}\t{doc.text}\n")


def stats(ds: LabeledDataset) -> CorpusStats:
    if len(ds) == 0:
        raise DataError(f"{ds.name}: empty dataset")
    if not ds.is_labeled:
        raise DataError(f"{ds.name}: stats need a labeled dataset")
    counts = Counter(d.label for d in ds)
    per_class = {lab: counts.get(lab, 0) for lab in Label}
    return CorpusStats(len(ds), per_class, per_class[Label.OFF] / len(ds))


def _allocate(counts: dict[Label, int], fraction: float) -> dict[Label, int]:
    """Largest-remainder allocation of round(fraction * n) validation slots across classes."""
    total = int(np.floor(fraction * sum(counts.values()) + 0.5))
    exact = {lab: fraction * n for lab, n in counts.items()}
    alloc = {lab: int(np.floor(x)) for lab, x in exact.items()}
    order = sorted(counts, key=lambda lab: (-(exact[lab] - alloc[lab]), int(lab)))
    for lab in order[: total - sum(alloc.values())]:
        alloc[lab] += 1
    return alloc


def stratified_split(ds: LabeledDataset, validation_fraction: float = 0.1, seed: int = 0):
    """Stratified shuffled split into (train, validation).

    Each class contributes within one document of ``fraction * n_class`` to
    validation. Both outputs keep the original document order.
    """
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError("validation_fraction must be in (0, 1)")
    y = ds.labels()
    counts = {lab: int(np.sum(y == lab)) for lab in Label if np.any(y == lab)}
    alloc = _allocate(counts, validation_fraction)
    rng = np.random.default_rng(seed)
    val_idx = []
    for lab in Label:
        if lab not in counts:
            continue
        members = np.flatnonzero(y == lab)
        k = alloc[lab]
        # a singleton class cannot be on both sides; larger classes must keep a train doc
        if k >= len(members) > 1:
            raise DataError(
                f"validation_fraction={validation_fraction} leaves class {lab.name} empty in train"
            )
        val_idx.extend(rng.permutation(members)[:k].tolist())
    val = set(val_idx)
    train_idx = [i for i in range(len(ds)) if i not in val]
    return (
        ds.subset(train_idx, f"{ds.name}-train"),
        ds.subset(sorted(val), f"{ds.name}-validation"),
    )


# --------------------------------------------------------------------------
# synthetic code-switch benchmark

_CONSONANTS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"


@dataclass
class SynthConfig:
    source_size: int = 2000
    target_size: int = 400
    off_ratio: float = 567 / 3200
    n_neutral_stems: int = 160
    n_marker_stems: int = 8
    n_target_only_stems: int = 40
    min_words: int = 5
    max_words: int = 14
    source_suffixes: tuple[str, ...] = ("en", "er", "ish")
    target_suffixes: tuple[str, ...] = ("am", "ilu", "ode")
    label_noise: float = 0.0


@dataclass(frozen=True)
class SynthLexicon:
    neutral: tuple[str, ...]
    markers: tuple[str, ...]
    target_only: tuple[str, ...]


def _make_stems(rng, n, taken):
    stems = []
    while len(stems) < n:
        syll = rng.integers(2, 4)
        s = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syll)
        )
        if s not in taken:
            taken.add(s)
            stems.append(s)
    return stems


def synth_lexicon(config: SynthConfig, seed: int) -> SynthLexicon:
    rng = np.random.default_rng([seed, 0x5EED])
    taken: set[str] = set()
    markers = _make_stems(rng, config.n_marker_stems, taken)
    neutral = _make_stems(rng, config.n_neutral_stems, taken)
    target_only = _make_stems(rng, config.n_target_only_stems, taken)
    return SynthLexicon(tuple(neutral), tuple(markers), tuple(target_only))


def _synth_docs(rng, n, n_off, lex, suffixes, neutral_pool, config, prefix):
    labels = np.array([1] * n_off + [0] * (n - n_off))
    rng.shuffle(labels)
    docs = []
    for i, lab in enumerate(labels):
        n_words = int(rng.integers(config.min_words, config.max_words + 1))
        words = [neutral_pool[rng.integers(len(neutral_pool))] for _ in range(n_words)]
        if lab:
            for _ in range(int(rng.integers(1, 3))):
                pos = int(rng.integers(len(words) + 1))
                words.insert(pos, lex.markers[rng.integers(len(lex.markers))])
        text = " ".join(w + suffixes[rng.integers(len(suffixes))] for w in words)
        label = Label(int(lab))
        if config.label_noise and rng.random() < config.label_noise:
            label = Label(1 - label)
        docs.append(Document(f"{prefix}{i:05d}", text, label))
    return docs


def synth_codeswitch(config: SynthConfig | None = None, seed: int = 0):
    """Generate (source, target) datasets sharing a latent rule over disjoint surface words.

    Both languages build words as ``stem + suffix`` with language-specific
    suffix sets, so no whole word occurs in both. A document is OFF exactly
    when it contains one of the shared marker stems (before label noise).
    The target language also draws neutral words from its own extra stems.
    """
    config = config or SynthConfig()
    for size, what in ((config.source_size, "source"), (config.target_size, "target")):
        n_off = int(np.floor(size * config.off_ratio + 0.5))
        if n_off < 4 or size - n_off < 4:
            raise ValueError(f"{what} size {size} gives fewer than 4 documents in a class")
    if config.target_size >= config.source_size:
        raise ValueError("target must be smaller than source")
    if set(config.source_suffixes) & set(config.target_suffixes):
        raise ValueError("source and target suffix sets must be disjoint")
    lex = synth_lexicon(config, seed)
    rng = np.random.default_rng([seed, 1])
    src_n_off = int(np.floor(config.source_size * config.off_ratio + 0.5))
    tgt_n_off = int(np.floor(config.target_size * config.off_ratio + 0.5))
    source = _synth_docs(rng, config.source_size, src_n_off, lex, config.source_suffixes,
                         lex.neutral, config, "src")
    target = _synth_docs(rng, config.target_size, tgt_n_off, lex, config.target_suffixes,
                         lex.neutral + lex.target_only, config, "tgt")
    return LabeledDataset(source, "synth-source"), LabeledDataset(target, "synth-target")


def dataset_digest(ds: LabeledDataset) -> str:
    h = hashlib.sha256()
    for d in ds:
        h.update(f"{d.id}\t{d.text}\t{'' if d.label is None else int(d.label)}\n".encode())
    return h.hexdigest()


def concat(datasets: Sequence[LabeledDataset], name: str) -> LabeledDataset:
    return LabeledDataset([d for ds in datasets for d in ds], name)

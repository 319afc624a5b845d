"""Emoji-to-text conversion and emoji removal driven by a sequence->name table."""
from __future__ import annotations

import re
from collections import Counter
from functools import lru_cache
from importlib import resources
from pathlib import Path

# Pictographic blocks used to catch emoji that the table does not know.
# ZWJ alone is left untouched: Malayalam script uses it inside words.
_PICT = "\U0001F000-\U0001FAFF\u2600-\u27BF\u2B00-\u2BFF"
_MODS = "\uFE0F\U0001F3FB-\U0001F3FF\U000E0020-\U000E007F"
_STRAY = re.compile(f"[{_PICT}][{_MODS}]*(?:\u200D[{_PICT}][{_MODS}]*)*")
_SPACES = re.compile(r" {2,}")


class EmojiTable:
    """Mapping from emoji sequences (ZWJ sequences, variation selectors
    included) to plain lowercase names such as ``slightly smiling face``."""

    def __init__(self, mapping: dict[str, str]):
        for seq, name in mapping.items():
            if not seq or not name.strip() or "_" in name:
                raise ValueError(f"bad emoji table entry {seq!r} -> {name!r}")
        self.mapping = dict(mapping)
        self._starts = {seq[0] for seq in self.mapping}
        self._longest = max((len(seq) for seq in self.mapping), default=0)

    def __len__(self):
        return len(self.mapping)

    def __contains__(self, seq):
        return seq in self.mapping

    def sub(self, text: str, repl) -> tuple[str, int]:
        """Replace table sequences left to right, longest match first."""
        if not self._starts.intersection(text):
            return text, 0
        out = []
        n = 0
        i = 0
        while i < len(text):
            if text[i] in self._starts:
                for size in range(min(self._longest, len(text) - i), 0, -1):
                    seq = text[i : i + size]
                    if seq in self.mapping:
                        out.append(repl(seq))
                        n += 1
                        i += size
                        break
                else:
                    out.append(text[i])
                    i += 1
            else:
                out.append(text[i])
                i += 1
        return "".join(out), n

    @classmethod
    def from_tsv(cls, path) -> "EmojiTable":
        mapping = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                seq, name = line.split("\t")
                mapping[seq] = name
        return cls(mapping)

    def to_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# emoji_sequence\tname\n")
            for seq, name in self.mapping.items():
                fh.write(f"{seq}\t{name}\n")


@lru_cache(maxsize=1)
def default_table() -> EmojiTable:
    ref = resources.files("offlang.textprep") / "data" / "emoji.tsv"
    with resources.as_file(ref) as path:
        return EmojiTable.from_tsv(Path(path))


def _substitute(text: str, table: EmojiTable, repl, tally: Counter | None) -> str:
    out, n_known = table.sub(text, repl)
    out, n_unknown = _STRAY.subn(" ", out)
    if tally is not None:
        tally["converted"] += n_known
        tally["unknown"] += n_unknown
    if not (n_known or n_unknown):
        return text
    return _SPACES.sub(" ", out).strip(" ")


def convert_emojis(text: str, table: EmojiTable | None = None, tally: Counter | None = None) -> str:
    """Replace every emoji sequence with its name, space separated.

    Emoji missing from the table are dropped and counted under
    ``tally["unknown"]`` when a Counter is passed.
    """
    table = table or default_table()
    return _substitute(text, table, lambda seq: f" {table.mapping[seq]} ", tally)


def strip_emojis(text: str, table: EmojiTable | None = None, tally: Counter | None = None) -> str:
    table = table or default_table()
    return _substitute(text, table, lambda seq: " ", tally)

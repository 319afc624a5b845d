"""Regenerate ``src/offlang/textprep/data/emoji.tsv`` from the ``emoji`` package.

Usage: python tools/build_emoji_table.py [path/to/emoji/package/parent]

Names are converted to plain lowercase words (``:slightly_smiling_face:`` ->
``slightly smiling face``). Only needed when refreshing the shipped table.
"""
import sys
from pathlib import Path

if len(sys.argv) > 1:
    sys.path.insert(0, sys.argv[1])

import emoji  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "src/offlang/textprep/data/emoji.tsv"


def plain_name(alias: str) -> str:
    name = alias.strip(":").replace("_", " ").lower()
    return " ".join(name.split())


def main() -> None:
    rows = []
    for seq, info in emoji.EMOJI_DATA.items():
        name = plain_name(info["en"])
        if not name or "\t" in seq or "\n" in seq:
            continue
        rows.append((seq, name))
    rows.sort(key=lambda r: [ord(c) for c in r[0]])
    with open(OUT, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# emoji_sequence\tname\n")
        for seq, name in rows:
            fh.write(f"{seq}\t{name}\n")
    print(f"wrote {len(rows)} entries to {OUT}")


if __name__ == "__main__":
    main()

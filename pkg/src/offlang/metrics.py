"""Confusion matrices, per-class P/R/F1, weighted and macro averages, and
report rendering in the usual results-table column order."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Sequence

import numpy as np

from .corpus import Label

REPORT_VERSION = 1
DISPLAY_NAMES = {Label.NOT: "Non Hate Offensive", Label.OFF: "Hate Offensive"}


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[gold][pred], classes ordered (NOT, OFF)."""

    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    def tp(self, c: int) -> int:
        return self.counts[c][c]

    def fp(self, c: int) -> int:
        return sum(self.counts[g][c] for g in range(2) if g != c)

    def fn(self, c: int) -> int:
        return sum(self.counts[c][p] for p in range(2) if p != c)

    def support(self, c: int) -> int:
        return sum(self.counts[c])

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)


def confusion(golds: Sequence[int], preds: Sequence[int]) -> ConfusionMatrix:
    golds = [int(g) for g in golds]
    preds = [int(p) for p in preds]
    if len(golds) != len(preds):
        raise ValueError(f"length mismatch: {len(golds)} golds vs {len(preds)} predictions")
    if not golds:
        raise ValueError("cannot evaluate an empty prediction set")
    m = [[0, 0], [0, 0]]
    for g, p in zip(golds, preds):
        if g not in (0, 1) or p not in (0, 1):
            raise ValueError(f"labels must be 0/1, got gold={g} pred={p}")
        m[g][p] += 1
    return ConfusionMatrix((tuple(m[0]), tuple(m[1])))


def _div(a: float, b: float) -> float:
    return a / b if b else 0.0


def class_prf(cm: ConfusionMatrix, cls: int) -> tuple[float, float, float]:
    """Precision, recall, F1 for one class; zero denominators give 0."""
    cls = int(cls)
    tp, fp, fn = cm.tp(cls), cm.fp(cls), cm.fn(cls)
    p = _div(tp, tp + fp)
    r = _div(tp, tp + fn)
    return p, r, _div(2 * p * r, p + r)


def weighted_average(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Gold-support weighted mean of per-class P, R and F1."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    out = np.zeros(3)
    for c in range(2):
        out += (cm.support(c) / cm.total) * np.array(class_prf(cm, c))
    return tuple(float(v) for v in out)


def macro_f1(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    return (class_prf(cm, 0)[2] + class_prf(cm, 1)[2]) / 2


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    per_class: dict[str, ClassScores]
    weighted: dict[str, float]
    macro_f1: float
    confusion: list[list[int]]
    zero_division: list[str] = field(default_factory=list)
    name: str = ""

    @property
    def weighted_f1(self) -> float:
        return self.weighted["f1"]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = REPORT_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        if d.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported report version {d.get('version')!r}")
        return cls(
            per_class={k: ClassScores(**v) for k, v in d["per_class"].items()},
            weighted=dict(d["weighted"]),
            macro_f1=d["macro_f1"],
            confusion=d["confusion"],
            zero_division=list(d.get("zero_division", [])),
            name=d.get("name", ""),
        )


def evaluate(golds, preds, name: str = "") -> EvalReport:
    cm = confusion(golds, preds)
    per_class = {}
    flags = []
    for lab in Label:
        p, r, f = class_prf(cm, lab)
        if cm.tp(lab) + cm.fp(lab) == 0:
            flags.append(f"{lab.name}.precision")
        if cm.support(lab) == 0:
            flags.append(f"{lab.name}.recall")
        per_class[lab.name] = ClassScores(p, r, f, cm.support(lab))
    wp, wr, wf = weighted_average(cm)
    return EvalReport(
        per_class=per_class,
        weighted={"precision": wp, "recall": wr, "f1": wf},
        macro_f1=macro_f1(cm),
        confusion=[list(row) for row in cm.counts],
        zero_division=flags,
        name=name,
    )


def round2(x: float) -> str:
    """Two decimals, round-half-even on the shortest decimal repr of ``x``."""
    return str(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def render_report(reports, fmt: str = "text", display_names: dict | None = None) -> str:
    """Render one report or a list of them.

    ``text``: a table with per-class P/R/F1 blocks (NOT then OFF), the
    weighted block and macro F1, one row per report, values to 2 decimals.
    ``structured``: JSON with full precision.
    """
    if isinstance(reports, EvalReport):
        reports = [reports]
    if fmt == "structured":
        payload = [r.to_dict() for r in reports]
        return json.dumps(payload[0] if len(payload) == 1 else payload, indent=2, sort_keys=True)
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    names = display_names or DISPLAY_NAMES
    blocks = [names[Label.NOT], names[Label.OFF], "Weighted Average"]
    name_w = max([5] + [len(r.name) for r in reports])
    cell = 6
    block_w = 3 * cell + 2
    head1 = " " * name_w + " | " + " | ".join(b[:block_w].center(block_w) for b in blocks) + " |"
    sub = " ".join(s.rjust(cell) for s in ("P", "R", "F1"))
    head2 = "Model".ljust(name_w) + " | " + " | ".join([sub] * 3) + " | F1 Macro"
    lines = [head1, head2, "-" * len(head2)]
    for r in reports:
        vals = []
        for lab in (Label.NOT, Label.OFF):
            s = r.per_class[lab.name]
            vals.append(" ".join(round2(v).rjust(cell) for v in (s.precision, s.recall, s.f1)))
        w = r.weighted
        vals.append(" ".join(round2(w[k]).rjust(cell) for k in ("precision", "recall", "f1")))
        lines.append(r.name.ljust(name_w) + " | " + " | ".join(vals) + " | " + round2(r.macro_f1).rjust(8))
    flagged = sorted({f for r in reports for f in r.zero_division})
    if flagged:
        lines.append("zero-division convention applied (reported as 0): " + ", ".join(flagged))
    return "\n".join(lines)


def parse_structured(text: str):
    data = json.loads(text)
    if isinstance(data, list):
        return [EvalReport.from_dict(d) for d in data]
    return EvalReport.from_dict(data)

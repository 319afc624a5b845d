from fractions import Fraction

import numpy as np
import pytest

from oracles import prf_oracle
from offlang.metrics import (
    ClassScores, ConfusionMatrix, EvalReport, class_prf, confusion, evaluate, macro_f1, parse_structured,
    render_report, round2, weighted_average,
)


def test_confusion_basics():
    assert confusion([0, 1, 1], [0, 1, 1]).counts == ((1, 0), (0, 2))
    assert confusion([1], [0]).counts[1][0] == 1


def test_confusion_ten_fixture():
    golds = [0, 0, 0, 0, 0, 0, 1, 1, 1, 1]
    preds = [0, 0, 0, 1, 0, 1, 1, 0, 1, 1]
    # hand tally: NOT->NOT 4, NOT->OFF 2, OFF->NOT 1, OFF->OFF 3
    assert confusion(golds, preds).counts == ((4, 2), (1, 3))


def test_confusion_errors():
    with pytest.raises(ValueError):
        confusion([0, 1], [0])
    with pytest.raises(ValueError):
        confusion([], [])


def test_hand_prf():
    # OFF column: TP=3, FP=1, FN=2
    cm = ConfusionMatrix(((5, 1), (2, 3)))
    p, r, f = class_prf(cm, 1)
    assert (p, r) == (0.75, 0.6)
    assert f == pytest.approx(2 / 3, abs=1e-12)
    assert round(f, 6) == 0.666667


def test_absent_class_is_zero():
    cm = confusion([0, 0], [0, 0])
    assert class_prf(cm, 1) == (0.0, 0.0, 0.0)
    assert class_prf(cm, 0) == (1.0, 1.0, 1.0)
    report = evaluate([0, 0], [0, 0])
    assert "OFF.precision" in report.zero_division and "OFF.recall" in report.zero_division


def test_weighted_and_macro_hand_case():
    golds = [0] * 8 + [1] * 2
    preds = [0] * 7 + [1] + [1, 0]
    cm = confusion(golds, preds)
    f_not = class_prf(cm, 0)[2]
    f_off = class_prf(cm, 1)[2]
    assert (f_not, f_off) == (pytest.approx(0.875), pytest.approx(0.5))
    assert weighted_average(cm)[2] == pytest.approx(0.8 * f_not + 0.2 * f_off)
    assert macro_f1(cm) == (f_not + f_off) / 2


def test_weighted_formula_matches_given_numbers():
    # with per-class F1 of 0.9 / 0.5 and supports 8 / 2 the weighted mean is 0.82, the macro 0.70
    assert 0.8 * 0.9 + 0.2 * 0.5 == pytest.approx(0.82)
    assert (0.9 + 0.5) / 2 == pytest.approx(0.70)


@pytest.mark.parametrize("case", range(200))
def test_matches_rational_oracle(case):
    rng = np.random.default_rng(case)
    n = int(rng.integers(1, 13))
    golds = rng.integers(0, 2, size=n).tolist()
    preds = rng.integers(0, 2, size=n).tolist()
    per_class, weighted, macro = prf_oracle(golds, preds)
    r = evaluate(golds, preds)
    for c, name in ((0, "NOT"), (1, "OFF")):
        s = r.per_class[name]
        P, R, F, support = per_class[c]
        assert s.support == support
        for got, want in ((s.precision, P), (s.recall, R), (s.f1, F)):
            assert abs(Fraction(got) - want) <= Fraction(1, 10**12)
    for key, want in zip(("precision", "recall", "f1"), weighted):
        assert abs(Fraction(r.weighted[key]) - want) <= Fraction(1, 10**12)
    assert abs(Fraction(r.macro_f1) - macro) <= Fraction(1, 10**12)
    # micro identity: weighted recall equals accuracy
    acc = Fraction(sum(g == p for g, p in zip(golds, preds)), n)
    assert abs(Fraction(r.weighted["recall"]) - acc) <= Fraction(1, 10**12)


def test_one_class_gold_weighted_equals_class_metric():
    r = evaluate([1, 1, 1], [1, 0, 1])
    assert r.weighted["f1"] == r.per_class["OFF"].f1


def test_round2_half_even():
    assert round2(0.666667) == "0.67"
    assert round2(0.125) == "0.12"
    assert round2(0.135) == "0.14"
    assert round2(1.0) == "1.00"


def test_text_layout():
    r = evaluate([0] * 14 + [1] * 2, [0] * 13 + [1] + [1, 0], name="RF")
    text = render_report(r)
    head1, head2 = text.splitlines()[:2]
    assert head1.index("Non Hate Offensive") < head1.index("Hate Offensive", head1.index("Non Hate") + 5)
    assert head1.index("Hate Offensive", 20) < head1.index("Weighted Average")
    assert head2.split("|")[0].strip() == "Model"
    assert head2.rstrip().endswith("F1 Macro")
    row = text.splitlines()[3].split("|")
    assert row[0].strip() == "RF" and len(row) == 5


def test_table_row_shape_for_published_style_numbers():
    r = EvalReport(
        per_class={"NOT": ClassScores(0.95, 0.97, 0.96, 90), "OFF": ClassScores(0.82, 0.76, 0.79, 10)},
        weighted={"precision": 0.93, "recall": 0.93, "f1": 0.93},
        macro_f1=0.87, confusion=[[0, 0], [0, 0]], name="Random Forest")
    row = render_report(r).splitlines()[3]
    cells = row.split("|")
    assert cells[3].split() == ["0.93", "0.93", "0.93"]
    assert cells[4].strip() == "0.87"


def test_structured_roundtrip():
    r = evaluate([0, 1, 1, 0, 1], [0, 1, 0, 0, 1], name="x")
    back = parse_structured(render_report(r, "structured"))
    assert back == r
    many = parse_structured(render_report([r, r], "structured"))
    assert many == [r, r]


def test_unknown_format():
    with pytest.raises(ValueError):
        render_report(evaluate([0], [0]), "html")

import json
import subprocess
import sys
import unicodedata

import pytest

from offlang.cli import main
from offlang.corpus import load_tsv
from offlang.textprep import default_table


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    (d / "s.json").write_text(json.dumps({"source_size": 300, "target_size": 120, "seed": 3}))
    assert main(["synth", "--config", str(d / "s.json"), "--output-dir", str(d)]) == 0
    return d


def _config(tmp_path, name, **overrides):
    cfg = {"data": {"train": "target.tsv", "validation_fraction": 0.25},
           "classical": {"n_trees": 15}}
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_synth_files_reload_and_repeat(synth_dir, tmp_path):
    src = load_tsv(synth_dir / "source.tsv")
    tgt = load_tsv(synth_dir / "target.tsv")
    assert len(src) == 300 and len(tgt) == 120
    assert main(["synth", "--config", str(synth_dir / "s.json"), "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "target.tsv").read_bytes() == (synth_dir / "target.tsv").read_bytes()
    assert main(["synth", "--seed", "4", "--config", str(synth_dir / "s.json"),
                 "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "target.tsv").read_bytes() != (synth_dir / "target.tsv").read_bytes()


def test_preprocess_regimes(tmp_path):
    src = tmp_path / "in.tsv"
    src.write_text("id\ttext\tlabel\na\tHello, World!! 🙂\tNOT\nb\tyou're WRONG...\tOFF\n",
                   encoding="utf-8")
    assert main(["preprocess", str(src), str(tmp_path / "t.tsv"), "--regime", "transformer"]) == 0
    t = load_tsv(tmp_path / "t.tsv")
    assert t.documents[0].text == "Hello, World!! slightly smiling face"
    assert main(["preprocess", str(src), str(tmp_path / "c.tsv"), "--regime", "classical"]) == 0
    c = load_tsv(tmp_path / "c.tsv")
    assert [d.id for d in c] == ["a", "b"] and [d.label for d in c] == [d.label for d in t]
    keys = set(default_table().mapping)
    for d in c:
        assert not any(unicodedata.category(ch).startswith("P") for ch in d.text)
        assert not any(k in d.text for k in keys)
    assert c.documents[1].text == "you re wrong"


def test_preprocess_empty_input_fails(tmp_path):
    (tmp_path / "empty.tsv").write_text("")
    assert main(["preprocess", str(tmp_path / "empty.tsv"), str(tmp_path / "o.tsv"),
                 "--regime", "classical"]) == 2


def test_train_rf_and_evaluate_reproduces_report(synth_dir, tmp_path, capsys):
    cfg = _config(synth_dir, "rf.json", model="rf", output_dir=str(tmp_path / "run"))
    assert main(["train", "--config", str(cfg)]) == 0
    run = tmp_path / "run"
    for name in ("model.ckpt", "bow_vocab.tsv", "report.json", "report.txt", "training_log.tsv",
                 "manifest.json", "validation.tsv"):
        assert (run / name).is_file()
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["seeds"] == [0, 1, 2] and len(manifest["config_hash"]) == 64
    out = tmp_path / "eval.json"
    assert main(["evaluate", str(run), "--data", str(run / "validation.tsv"), "--output", str(out)]) == 0
    assert json.loads(out.read_text()) == json.loads((run / "report.json").read_text())
    assert "Weighted Average" in capsys.readouterr().out


def test_rerun_is_identical_and_changed_config_needs_force(synth_dir, tmp_path):
    run = tmp_path / "run"
    cfg = _config(synth_dir, "mnb.json", model="mnb", output_dir=str(run))
    assert main(["train", "--config", str(cfg)]) == 0
    first = {p.name: p.read_bytes() for p in run.iterdir()}
    assert main(["train", "--config", str(cfg)]) == 0
    assert {p.name: p.read_bytes() for p in run.iterdir()} == first
    cfg2 = _config(synth_dir, "mnb2.json", model="mnb", output_dir=str(run),
                   classical={"smoothing": 0.5})
    assert main(["train", "--config", str(cfg2)]) == 1
    assert main(["train", "--config", str(cfg2), "--force"]) == 0


def test_config_errors_exit_one(synth_dir, tmp_path):
    bad = _config(synth_dir, "bad.json", model="encoder", recipe="MSE+ASE",
                  output_dir=str(tmp_path / "x"))
    assert main(["train", "--config", str(bad)]) == 1
    assert not (tmp_path / "x").exists()
    typo = _config(synth_dir, "typo.json", modle="rf")
    assert main(["train", "--config", str(typo)]) == 1
    assert main(["train", "--config", str(tmp_path / "nope.json")]) == 1
    assert main(["bogus"]) == 1


def test_missing_model_exit_code(synth_dir, tmp_path):
    assert main(["evaluate", str(tmp_path / "nope"), "--data", str(synth_dir / "target.tsv")]) == 2


def test_encoder_ensemble_evaluate_and_predict(synth_dir, tmp_path):
    run = tmp_path / "enc"
    cfg = _config(synth_dir, "enc.json", model="encoder", recipe="TL+LM+ASE",
                  data={"train": "target.tsv", "source": "source.tsv", "validation_fraction": 0.25},
                  encoder={"d_model": 16, "heads": 2, "layers": 1, "ff_dim": 32, "max_len": 24,
                           "bpe_merges": 100},
                  train={"learning_rate": 1e-3, "epochs": 1, "batch_size": 16},
                  mlm={"learning_rate": 1e-3, "epochs": 1, "batch_size": 16},
                  output_dir=str(run))
    assert main(["train", "--config", str(cfg)]) == 0
    assert sorted(p.name for p in (run / "ensemble").iterdir()) == [
        "ensemble.json", "member_0.ckpt", "member_1.ckpt", "member_2.ckpt"]
    out = tmp_path / "ev.json"
    assert main(["evaluate", str(run / "ensemble"), "--data", str(run / "validation.tsv"),
                 "--output", str(out)]) == 0
    assert json.loads(out.read_text()) == json.loads((run / "report.json").read_text())

    unl = tmp_path / "unl.tsv"
    rows = [line.split("\t")[:2] for line in (synth_dir / "target.tsv").read_text().splitlines()[1:8]]
    unl.write_text("id\ttext\n" + "".join(f"{a}\t{b}\n" for a, b in rows))
    pred = tmp_path / "pred.tsv"
    assert main(["predict", str(run), str(unl), str(pred)]) == 0
    lines = pred.read_text().splitlines()
    assert lines[0] == "id\tlabel\tp_NOT\tp_OFF"
    assert [ln.split("\t")[0] for ln in lines[1:]] == [r[0] for r in rows]
    for ln in lines[1:]:
        _, lab, p0, p1 = ln.split("\t")
        assert lab in ("NOT", "OFF")
        assert abs(float(p0) + float(p1) - 1) < 1e-9


def test_predict_warns_on_labeled_input(synth_dir, tmp_path):
    run = tmp_path / "svm"
    cfg = _config(synth_dir, "svm.json", model="svm", output_dir=str(run))
    assert main(["train", "--config", str(cfg)]) == 0
    with pytest.warns(UserWarning, match="label"):
        assert main(["predict", str(run), str(synth_dir / "target.tsv"), str(tmp_path / "p.tsv")]) == 0
    lines = (tmp_path / "p.tsv").read_text().splitlines()
    assert lines[0] == "id\tlabel" and len(lines) == 121


def test_vocabulary_tampering_detected(synth_dir, tmp_path):
    run = tmp_path / "mnb"
    cfg = _config(synth_dir, "m.json", model="mnb", output_dir=str(run))
    assert main(["train", "--config", str(cfg)]) == 0
    with open(run / "bow_vocab.tsv", "a") as fh:
        fh.write("extra\t999999\n")
    assert main(["evaluate", str(run), "--data", str(run / "validation.tsv")]) == 2


def test_gradcheck_exit_codes(capsys):
    assert main(["gradcheck"]) == 0
    a = capsys.readouterr().out
    assert main(["gradcheck", "--seed", "1"]) == 0
    b = capsys.readouterr().out
    assert a != b
    assert main(["gradcheck", "--strict", "1e-15"]) == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "offlang.cli", "gradcheck", "--seed", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "max relative error" in res.stdout

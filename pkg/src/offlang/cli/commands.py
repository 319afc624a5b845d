"""Subcommand implementations. Each returns a process exit status."""
from __future__ import annotations

import hashlib
import json
import logging
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .. import classical
from ..corpus import (
    DataError, Document, LabeledDataset, SynthConfig, TsvSchema, load_tsv, stratified_split,
    synth_codeswitch, write_tsv,
)
from ..encoder import EncoderConfig, NumericalError, TrainHyper, VocabularyMismatch
from ..encoder.gradcheck import TINY, grad_errors
from ..features import BowVocabulary, build_vocabulary, to_matrix, vectorize
from ..metrics import evaluate, render_report
from ..strategies import (
    Checkpoint, CheckpointError, EnsembleModel, Recipe, RecipeData, RecipeSettings,
    load_checkpoint, load_ensemble, run_recipe, save_checkpoint, save_ensemble,
)
from ..textprep import SubwordVocabulary, classical_tokens, encode_batch, preprocess_transformer, train_bpe
from .config import ConfigError, ExperimentConfig, load_config

log = logging.getLogger("offlang")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MODEL_INFO = "model_info.json"
MANIFEST = "manifest.json"


class OutputDirError(ConfigError):
    pass


def _schema(cfg: ExperimentConfig, labeled: bool = True) -> TsvSchema:
    s = cfg.data.schema
    return TsvSchema(id=s.id, text=s.text, label=s.label if labeled else None, header=s.header)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# preprocessing

def preprocess_dataset(ds: LabeledDataset, regime: str, lowercase: bool = True) -> LabeledDataset:
    if regime == "classical":
        fn = lambda t: " ".join(classical_tokens(t, lowercase=lowercase))  # noqa: E731
    elif regime == "transformer":
        fn = preprocess_transformer
    else:
        raise ConfigError(f"unknown preprocessing regime {regime!r}")
    return LabeledDataset([Document(d.id, fn(d.text), d.label) for d in ds], ds.name)


def cmd_preprocess(input_path, regime: str, output_path, lowercase: bool = True) -> int:
    labeled = _has_label_column(input_path)
    ds = load_tsv(input_path, TsvSchema(label="label" if labeled else None))
    if len(ds) == 0:
        raise DataError(f"{input_path}: no documents")
    out = preprocess_dataset(ds, regime, lowercase)
    write_tsv(out, output_path)
    log.info("wrote %d documents to %s", len(out), output_path)
    return EXIT_OK


def _has_label_column(path) -> bool:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\r\n").split("\t")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    return "label" in header


# --------------------------------------------------------------------------
# loaded-model wrapper shared by train / evaluate / predict

class LoadedModel:
    """A trained model plus the preprocessing and vocabulary it expects."""

    def __init__(self, model, info: dict, vocab):
        self.model = model
        self.info = info
        self.vocab = vocab

    @property
    def name(self) -> str:
        return self.info.get("name", self.info["kind"])

    def prepare(self, ds: LabeledDataset) -> LabeledDataset:
        return preprocess_dataset(ds, self.info["regime"], self.info.get("lowercase", True))

    def predict(self, ds: LabeledDataset):
        """(labels, probabilities or None) for raw (unpreprocessed) documents."""
        ds = self.prepare(ds)
        if self.info["kind"] == "encoder":
            ids, lengths = encode_batch(self.vocab, ds.texts, self.model.config.max_len)
            if isinstance(self.model, EnsembleModel):
                probs = self.model.predict_proba(ids, lengths)
                return self.model.predict(ids, lengths), probs
            probs = self.model.predict_proba(ids, lengths)
            return classical.argmax_not_on_tie(probs), probs
        X = to_matrix([vectorize(self.vocab, d.text.split()) for d in ds], len(self.vocab))
        return classical.predict_labels(self.model, X), classical.predict_proba(self.model, X)


def load_model(path) -> LoadedModel:
    """Load from a run directory, an ensemble directory or a checkpoint file
    inside a run directory."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no model at {path}")
    run_dir = path if path.is_dir() else path.parent
    if not (run_dir / MODEL_INFO).is_file() and (run_dir.parent / MODEL_INFO).is_file():
        run_dir = run_dir.parent
    info_path = run_dir / MODEL_INFO
    if not info_path.is_file():
        raise CheckpointError(f"{run_dir}: missing {MODEL_INFO}")
    info = json.loads(info_path.read_text(encoding="utf-8"))
    if path.is_dir():
        target = run_dir / info["model_file"]
    else:
        target = path
    if target.is_dir():
        model = load_ensemble(target)
    else:
        model = load_checkpoint(target)
    if info["kind"] == "encoder":
        vocab = SubwordVocabulary.load(run_dir / info["vocab_file"])
        if model.vocab_fingerprint != vocab.fingerprint:
            raise VocabularyMismatch(f"{target}: model and {info['vocab_file']} disagree on vocabulary")
    else:
        vocab_file = run_dir / info["vocab_file"]
        if _sha256(vocab_file) != info["vocab_sha256"]:
            raise VocabularyMismatch(f"{vocab_file}: contents changed since training")
        vocab = BowVocabulary.load(vocab_file)
    return LoadedModel(model, info, vocab)


# --------------------------------------------------------------------------
# train

def _prepare_output(out: Path, digest: str, force: bool) -> None:
    manifest = out / MANIFEST
    if manifest.is_file():
        old = json.loads(manifest.read_text(encoding="utf-8")).get("config_hash")
        if old != digest and not force:
            raise OutputDirError(
                f"{out} holds results of a different config (hash {old[:12]}); use --force to overwrite"
            )
    out.mkdir(parents=True, exist_ok=True)


def _load_splits(cfg: ExperimentConfig):
    train = load_tsv(cfg.data.train, _schema(cfg))
    if len(train) == 0:
        raise DataError(f"{cfg.data.train}: no documents")
    if cfg.data.validation:
        validation = load_tsv(cfg.data.validation, _schema(cfg))
    else:
        train, validation = stratified_split(train, cfg.data.validation_fraction, cfg.data.split_seed)
    return train, validation


def _train_classical(cfg: ExperimentConfig, train: LabeledDataset, out: Path, threads: int):
    c = cfg.classical
    prepped = preprocess_dataset(train, cfg.regime, c.lowercase)
    tokens = [d.text.split() for d in prepped]
    vocab = build_vocabulary(tokens, c.min_frequency)
    X = to_matrix([vectorize(vocab, t) for t in tokens], len(vocab))
    y = train.labels()
    if cfg.model == "mnb":
        model = classical.train_mnb(X, y, c.smoothing)
    elif cfg.model == "svm":
        model = classical.train_svm_sgd(X, y, classical.SvmHyper(c.alpha, c.svm_seed, c.svm_epochs))
    else:
        model = classical.train_random_forest(X, y, c.n_trees, cfg.seeds[0], threads=threads)
    vocab.save(out / "bow_vocab.tsv")
    save_checkpoint(model, out / "model.ckpt")
    info = {"kind": cfg.model, "regime": cfg.regime, "lowercase": c.lowercase,
            "model_file": "model.ckpt", "vocab_file": "bow_vocab.tsv",
            "vocab_sha256": _sha256(out / "bow_vocab.tsv"), "name": cfg.model.upper()}
    return model, info, []


def _hyper(section, seed: int) -> TrainHyper:
    return TrainHyper(learning_rate=section.learning_rate, epochs=section.epochs,
                      batch_size=section.batch_size, seed=seed)


def _train_encoder(cfg: ExperimentConfig, train: LabeledDataset, out: Path, threads: int):
    recipe = Recipe.parse(cfg.recipe)
    prepped = preprocess_dataset(train, cfg.regime)
    source = None
    if cfg.data.source:
        source = preprocess_dataset(load_tsv(cfg.data.source, _schema(cfg)), cfg.regime)
    # one shared subword vocabulary over both languages
    bpe_text = prepped.texts + (source.texts if source is not None else [])
    vocab = train_bpe(bpe_text, cfg.encoder.bpe_merges)
    vocab.save(out / "vocab.bpe")
    e = cfg.encoder
    enc_cfg = EncoderConfig(vocab_size=vocab.size, d_model=e.d_model, heads=e.heads, layers=e.layers,
                            ff_dim=e.ff_dim, max_len=e.max_len, dropout=e.dropout)
    settings = RecipeSettings(
        config=enc_cfg,
        hyper=_hyper(cfg.train, cfg.seeds[0]),
        source_hyper=_hyper(cfg.source_train, cfg.seeds[0]) if cfg.source_train else None,
        mlm_hyper=_hyper(cfg.mlm, cfg.seeds[0]) if cfg.mlm else None,
        threads=threads,
    )
    data = RecipeData(prepped, vocab, source=source,
                      lm_extra=source if cfg.lm_include_source else None)
    seeds = cfg.seeds if recipe.aggregation else cfg.seeds[:1]
    model = run_recipe(recipe, data, seeds, settings)
    if isinstance(model, EnsembleModel):
        save_ensemble(model, out / "ensemble")
        model_file = "ensemble"
        logs = [(f"member{i}", m) for i, m in enumerate(model.members)]
    else:
        save_checkpoint(model, out / "model.ckpt")
        model_file = "model.ckpt"
        logs = [("", model)]
    info = {"kind": "encoder", "regime": cfg.regime, "recipe": str(recipe),
            "model_file": model_file, "vocab_file": "vocab.bpe", "name": f"encoder ({recipe})"}
    return model, info, logs


def _training_log_lines(logs, val_records):
    lines = []
    for prefix, ck in logs:
        tag = f"{prefix}/" if prefix else ""
        for epoch, split, loss, acc in ck.encoder.history:
            lines.append(f"{epoch}\t{tag}{split}\t{loss!r}\t{'' if acc is None else repr(acc)}")
        for epoch, split, loss, acc in ck.log:
            lines.append(f"{epoch}\t{tag}{split}\t{loss!r}\t{acc!r}")
    for split, loss, acc in val_records:
        lines.append(f"final\t{split}\t{'' if loss is None else repr(loss)}\t{acc!r}")
    return lines


def cmd_train(config_path, output_dir=None, threads: int = 1, force: bool = False,
              seed: int | None = None) -> int:
    cfg = load_config(config_path)
    if seed is not None:
        # shift the whole seed list so ensembles keep their member count
        cfg.seeds = [seed + i for i in range(len(cfg.seeds))]
    if output_dir:
        cfg.output_dir = str(output_dir)
    out = Path(cfg.output_dir)
    digest = cfg.digest()
    _prepare_output(out, digest, force)
    train, validation = _load_splits(cfg)
    if cfg.model == "encoder":
        model, info, logs = _train_encoder(cfg, train, out, threads)
    else:
        model, info, logs = _train_classical(cfg, train, out, threads)
    _dump_json(info, out / MODEL_INFO)
    write_tsv(validation, out / "validation.tsv")

    loaded = load_model(out)
    preds, probs = loaded.predict(validation)
    golds = validation.labels()
    report = evaluate(golds, preds, name=loaded.name)
    (out / "report.json").write_text(render_report(report, "structured") + "\n", encoding="utf-8")
    text = render_report(report, "text")
    (out / "report.txt").write_text(text + "\n", encoding="utf-8")
    print(text)

    val_loss = None
    if probs is not None:
        picked = np.clip(probs[np.arange(len(golds)), golds], 1e-12, 1.0)
        val_loss = float(-np.mean(np.log(picked)))
    acc = float(np.mean(preds == golds))
    lines = _training_log_lines(logs, [("validation", val_loss, acc)])
    (out / "training_log.tsv").write_text(
        "epoch\tsplit\tloss\taccuracy\n" + "".join(ln + "\n" for ln in lines), encoding="utf-8")

    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != MANIFEST)
    manifest = {
        "config_hash": digest,
        "config": cfg.to_dict(),
        "seeds": cfg.seeds,
        "model": cfg.model,
        "recipe": cfg.recipe,
        "files": {str(p.relative_to(out)): _sha256(p) for p in files},
    }
    _dump_json(manifest, out / MANIFEST)
    return EXIT_OK


# --------------------------------------------------------------------------
# evaluate / predict

def cmd_evaluate(model_paths, data_path, output=None, schema: TsvSchema | None = None) -> int:
    data = load_tsv(data_path, schema or TsvSchema())
    if len(data) == 0:
        raise DataError(f"{data_path}: no documents")
    golds = data.labels()
    reports = []
    for mp in model_paths:
        loaded = load_model(mp)
        preds, _ = loaded.predict(data)
        reports.append(evaluate(golds, preds, name=loaded.name))
    text = render_report(reports, "text")
    print(text)
    if output:
        Path(output).write_text(render_report(reports, "structured") + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_predict(model_path, input_path, output_path) -> int:
    if _has_label_column(input_path):
        warnings.warn(f"{input_path} has a label column; labels are ignored", stacklevel=2)
        log.warning("%s has a label column; labels are ignored", input_path)
    data = load_tsv(input_path, TsvSchema(label=None, n_columns=None))
    loaded = load_model(model_path)
    preds, probs = loaded.predict(data)
    with open(output_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id\tlabel\tp_NOT\tp_OFF\n" if probs is not None else "id\tlabel\n")
        for i, doc in enumerate(data):
            lab = "OFF" if preds[i] == 1 else "NOT"
            if probs is not None:
                fh.write(f"{doc.id}\t{lab}\t{float(probs[i, 0])!r}\t{float(probs[i, 1])!r}\n")
            else:
                fh.write(f"{doc.id}\t{lab}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# gradcheck / synth

def cmd_gradcheck(seed: int = 0, tolerance: float = 1e-4, objective: str = "classify") -> int:
    errors = grad_errors(TINY, seed, objective)
    worst = max(errors, key=errors.get)
    print(f"max relative error {errors[worst]:.3e} ({worst}), tolerance {tolerance:.1e}, seed {seed}")
    return EXIT_OK if errors[worst] < tolerance else EXIT_NUMERIC


def cmd_synth(config_path=None, seed: int | None = None, output_dir=None) -> int:
    raw = {}
    if config_path:
        try:
            raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}") from None
    raw = dict(raw)
    cfg_seed = raw.pop("seed", 0)
    cfg_out = raw.pop("output_dir", "synth")
    known = set(SynthConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"synth config: unknown key(s) {unknown}")
    for key in ("source_suffixes", "target_suffixes"):
        if key in raw:
            raw[key] = tuple(raw[key])
    try:
        config = SynthConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"synth config: {exc}") from None
    seed = cfg_seed if seed is None else seed
    out = Path(output_dir or cfg_out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        source, target = synth_codeswitch(config, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_tsv(source, out / "source.tsv")
    write_tsv(target, out / "target.tsv")
    _dump_json({"seed": seed, "config": asdict(config)}, out / "synth.json")
    print(f"wrote {len(source)} source and {len(target)} target documents to {out}")
    return EXIT_OK


def handle_errors(fn, *args, **kwargs) -> int:
    """Run a command, mapping failures onto exit codes."""
    try:
        return fn(*args, **kwargs)
    except (ConfigError, FileNotFoundError, CheckpointError, VocabularyMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ConfigError) else EXIT_DATA
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA

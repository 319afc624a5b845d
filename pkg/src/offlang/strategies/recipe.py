"""Transfer initialisation and composable training recipes
(base, TL, LM, MSE/ASE self-ensembles)."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from ..corpus import LabeledDataset, stratified_split
from ..encoder.model import Checkpoint, EncoderConfig, init_encoder, init_head
from ..encoder.train import TrainHyper, VocabularyMismatch, mlm_pretrain, train_classifier
from ..textprep.bpe import SubwordVocabulary
from .ensemble import EnsembleModel, train_ensemble

STAGES = ("TL", "LM", "MSE", "ASE")


class RecipeError(ValueError):
    pass


def transfer_init(source: Checkpoint, target_vocab_fingerprint: str, num_classes: int = 2):
    """Copy the source encoder and softmax head as the starting point for
    target-language fine-tuning. The vocabulary must be the shared one."""
    if source.vocab_fingerprint != target_vocab_fingerprint:
        raise VocabularyMismatch(
            "transfer needs the vocabulary the source model was trained with "
            f"(source {str(source.vocab_fingerprint)[:12]}, target {str(target_vocab_fingerprint)[:12]})"
        )
    if source.head.W.shape[0] != num_classes:
        raise ValueError(f"source head has {source.head.W.shape[0]} classes, target needs {num_classes}")
    return source.encoder.copy(), source.head.copy()


@dataclass(frozen=True)
class Recipe:
    transfer: bool = False
    lm: bool = False
    aggregation: str | None = None  # None, "MSE" or "ASE"

    @classmethod
    def parse(cls, text: str) -> "Recipe":
        """Parse descriptors such as ``base``, ``TL``, ``TL+ASE+LM``."""
        parts = [p.strip().upper() for p in text.split("+") if p.strip()]
        if parts == ["BASE"]:
            return cls()
        unknown = [p for p in parts if p not in STAGES]
        if unknown or not parts:
            raise RecipeError(f"unknown recipe component(s) {unknown or text!r}; use base or {STAGES}")
        if len(set(parts)) != len(parts):
            raise RecipeError(f"repeated component in recipe {text!r}")
        if "MSE" in parts and "ASE" in parts:
            raise RecipeError("a recipe can aggregate with MSE or ASE, not both")
        agg = "MSE" if "MSE" in parts else "ASE" if "ASE" in parts else None
        return cls("TL" in parts, "LM" in parts, agg)

    @property
    def tags(self) -> list[str]:
        return [t for t, on in (("TL", self.transfer), ("LM", self.lm)) if on]

    def __str__(self):
        parts = self.tags + ([self.aggregation] if self.aggregation else [])
        return "+".join(parts) if parts else "base"


@dataclass
class RecipeData:
    target_train: LabeledDataset
    vocab: SubwordVocabulary
    source: LabeledDataset | None = None
    source_checkpoint: Checkpoint | None = None
    lm_extra: LabeledDataset | None = None  # optional extra MLM text (e.g. source language)


@dataclass
class RecipeSettings:
    config: EncoderConfig | None = None
    hyper: TrainHyper = field(default_factory=TrainHyper)
    source_hyper: TrainHyper | None = None
    mlm_hyper: TrainHyper | None = None
    n_members: int = 3
    split_fraction: float | None = None  # per-member train/validation resampling
    threads: int = 1


def train_source(data: RecipeData, settings: RecipeSettings, seed: int) -> Checkpoint:
    if data.source is None:
        raise RecipeError("TL recipe needs a source-language dataset or checkpoint")
    cfg = settings.config or EncoderConfig(vocab_size=data.vocab.size)
    hyper = replace(settings.source_hyper or settings.hyper, seed=seed)
    enc = init_encoder(cfg, seed, data.vocab.fingerprint)
    head = init_head(cfg, seed)
    return train_classifier(enc, head, data.source, data.vocab, hyper,
                            provenance={"source_task": data.source.name, "seed": seed, "strategies": []})


def run_recipe(recipe: Recipe | str, data: RecipeData, seeds: Sequence[int],
               settings: RecipeSettings | None = None, split_seeds: Sequence[int] | None = None):
    """Run [TL init] -> [MLM on task text] -> classifier fine-tune -> [ensemble].

    Returns a Checkpoint for recipes without aggregation (first seed only),
    otherwise an EnsembleModel with one member per seed.
    """
    recipe = Recipe.parse(recipe) if isinstance(recipe, str) else recipe
    settings = settings or RecipeSettings()
    seeds = list(seeds)
    if not seeds:
        raise RecipeError("at least one seed is required")
    cfg = settings.config or EncoderConfig(vocab_size=data.vocab.size)
    source_ck = None
    if recipe.transfer:
        source_ck = data.source_checkpoint or train_source(data, settings, seeds[0])
        if source_ck.config != cfg:
            raise RecipeError("source checkpoint config differs from the target encoder config")

    def member(seed: int, split_seed: int | None = None) -> Checkpoint:
        train = data.target_train
        if split_seed is not None:
            train, _ = stratified_split(train, settings.split_fraction or 0.1, split_seed)
        if source_ck is not None:
            enc, head = transfer_init(source_ck, data.vocab.fingerprint, cfg.num_classes)
        else:
            enc = init_encoder(cfg, seed, data.vocab.fingerprint)
            head = init_head(cfg, seed)
        if recipe.lm:
            corpus = train if data.lm_extra is None else LabeledDataset(
                list(train.documents) + list(data.lm_extra.documents), "lm-corpus")
            enc = mlm_pretrain(enc, corpus, data.vocab,
                               replace(settings.mlm_hyper or settings.hyper, seed=seed))
        prov = {}
        if recipe.tags:
            prov = {"strategies": recipe.tags, "seed": seed, "target_task": train.name}
            if source_ck is not None:
                prov["source_task"] = source_ck.provenance.get("source_task", "source")
            if split_seed is not None:
                prov["split_seed"] = split_seed
        return train_classifier(enc, head, train, data.vocab, replace(settings.hyper, seed=seed), prov)

    if recipe.aggregation is None:
        return member(seeds[0])
    n = len(seeds)
    if split_seeds is None and settings.split_fraction is not None:
        split_seeds = seeds
    return train_ensemble(member, n, seeds, split_seeds, recipe.aggregation, settings.threads)

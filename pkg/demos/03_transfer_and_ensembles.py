"""
Transfer, masked-LM adaptation and self-ensembles
=================================================

A small encoder is trained on a larger source-language set, its weights
seed the target classifier, a masked-LM pass adapts it to target text, and
three seeds are combined by averaging or by vote.
"""
import time

import numpy as np

from offlang.corpus import SynthConfig, stratified_split, synth_codeswitch
from offlang.encoder import EncoderConfig, TrainHyper
from offlang.metrics import evaluate, render_report
from offlang.strategies import (
    RecipeData, RecipeSettings, ase_aggregate, ase_label, mse_aggregate, run_recipe,
)
from offlang.textprep import encode_batch, train_bpe

source, target = synth_codeswitch(SynthConfig(source_size=2000, target_size=200), seed=0)
train, val = stratified_split(target, validation_fraction=0.25, seed=0)
vocab = train_bpe(source.texts + target.texts, merge_count=300)

cfg = EncoderConfig(vocab_size=vocab.size, d_model=32, heads=2, layers=1, ff_dim=64, max_len=32)
hyper = TrainHyper(learning_rate=1e-3, epochs=4, batch_size=16)
settings = RecipeSettings(config=cfg, hyper=hyper, mlm_hyper=hyper, n_members=3)
data = RecipeData(target_train=train, vocab=vocab, source=source)

ids, lengths = encode_batch(vocab, val.texts, cfg.max_len)


def score(name, probs):
    return evaluate(val.labels(), np.argmax(probs, axis=1), name=name)


###############################################################################
# Single models: random init against transfer, with and without MLM.

reports = []
for recipe in ("base", "TL", "TL+LM"):
    start = time.perf_counter()
    ck = run_recipe(recipe, data, seeds=[0], settings=settings)
    reports.append(score(recipe, ck.predict_proba(ids, lengths)))
    print(f"{recipe:<8} trained in {time.perf_counter() - start:.1f}s")

###############################################################################
# Three-member ensemble: ASE averages probabilities, MSE takes the vote.

ens = run_recipe("TL+ASE", data, seeds=[0, 1, 2], settings=settings)
members = ens.member_probs(ids, lengths)
reports.append(evaluate(val.labels(), ase_label(ase_aggregate(members)), name="TL+ASE"))
reports.append(evaluate(val.labels(), mse_aggregate(members), name="TL+MSE"))
print(render_report(reports))
votes = np.argmax(members, axis=2)
print(f"all three members agree on {np.mean((votes == votes[0]).all(axis=0)):.0%} of comments")

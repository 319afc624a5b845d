"""Self-ensembles: N copies of one recipe under different seeds (or splits),
aggregated by majority vote (MSE) or probability averaging (ASE)."""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..encoder.model import Checkpoint
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

AGGREGATIONS = ("MSE", "ASE")


def ase_aggregate(member_probs) -> np.ndarray:
    """Mean of member distributions: p(c) = (1/N) * sum_k p_k(c).

    ``member_probs`` has shape (N, C) or (N, n, C).
    """
    p = np.asarray(member_probs, dtype=np.float64)
    if p.shape[0] < 1:
        raise ValueError("ensemble needs at least one member")
    # shifted mean: exact when all members agree, otherwise equal to the plain mean up to rounding
    return p[0] + (p - p[0]).sum(axis=0) / p.shape[0]


def ase_label(avg) -> np.ndarray:
    """argmax with ties to the lower class index."""
    return np.argmax(np.asarray(avg), axis=-1)


def mse_aggregate(member_probs) -> np.ndarray:
    """Mode of the members' argmax votes.

    Ties are broken by the higher mean probability among the tied classes,
    then by the lower class index.
    """
    p = np.asarray(member_probs, dtype=np.float64)
    single = p.ndim == 2
    if single:
        p = p[:, None, :]
    n_members, n, n_classes = p.shape
    if n_members < 1:
        raise ValueError("ensemble needs at least one member")
    votes = np.argmax(p, axis=-1)  # (N, n)
    counts = np.stack([(votes == c).sum(0) for c in range(n_classes)], axis=-1)  # (n, C)
    mean = ase_aggregate(p)
    top = counts == counts.max(axis=-1, keepdims=True)
    # among tied classes pick the highest mean prob; argmax resolves equal means to the lower index
    out = np.argmax(np.where(top, mean, -np.inf), axis=-1)
    return out[0] if single else out


@dataclass
class EnsembleModel:
    members: list[Checkpoint]
    aggregation: str = "ASE"

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        fp = {m.vocab_fingerprint for m in self.members}
        cfg = {m.config for m in self.members}
        if len(fp) > 1 or len(cfg) > 1:
            raise ValueError("ensemble members must share config and vocabulary")

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def vocab_fingerprint(self):
        return self.members[0].vocab_fingerprint

    @property
    def config(self):
        return self.members[0].config

    def member_probs(self, ids, lengths=None) -> np.ndarray:
        """(N, n, C) per-member probabilities for stacked ids."""
        return np.stack([m.predict_proba(ids, lengths) for m in self.members])

    def predict_proba(self, ids, lengths=None) -> np.ndarray:
        return ase_aggregate(self.member_probs(ids, lengths))

    def predict(self, ids, lengths=None) -> np.ndarray:
        mp = self.member_probs(ids, lengths)
        if self.aggregation == "MSE":
            return mse_aggregate(mp)
        return ase_label(ase_aggregate(mp))


def _as_batch(ids):
    arr = np.asarray(getattr(ids, "ids", ids))
    return arr.ndim == 1, (arr[None, :] if arr.ndim == 1 else arr)


def predict_mse(e: EnsembleModel, ids):
    """Majority-vote label(s) for one TokenIdSequence or a stacked batch."""
    single, batch = _as_batch(ids)
    out = mse_aggregate(e.member_probs(batch))
    return int(out[0]) if single else out


def predict_ase(e: EnsembleModel, ids):
    """(averaged distribution, label) for one sequence or a stacked batch."""
    single, batch = _as_batch(ids)
    avg = ase_aggregate(e.member_probs(batch))
    lab = ase_label(avg)
    return (avg[0], int(lab[0])) if single else (avg, lab)


def train_ensemble(recipe: Callable[[int, int | None], Checkpoint], n: int, seeds: Sequence[int],
                   split_seeds: Sequence[int] | None = None, aggregation: str = "ASE",
                   threads: int = 1) -> EnsembleModel:
    """Train ``n`` members with ``recipe(seed, split_seed)``.

    Members are independent, so running them on ``threads`` workers gives
    the same result as running them one after another.
    """
    seeds = list(seeds)
    if n < 1 or len(seeds) != n:
        raise ValueError(f"need exactly n={n} seeds, got {len(seeds)}")
    if len(set(seeds)) != len(seeds):
        warnings.warn("duplicate ensemble seeds: some members will be identical", stacklevel=2)
    splits = list(split_seeds) if split_seeds is not None else [None] * n
    if len(splits) != n:
        raise ValueError("split_seeds must match the number of members")
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            members = list(pool.map(recipe, seeds, splits))
    else:
        members = [recipe(s, sp) for s, sp in zip(seeds, splits)]
    return EnsembleModel(members, aggregation)


def save_ensemble(e: EnsembleModel, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, m in enumerate(e.members):
        name = f"member_{i}.ckpt"
        save_checkpoint(m, d / name)
        names.append(name)
    manifest = {"format": "offlang-ensemble", "version": 1,
                "aggregation": e.aggregation, "members": names}
    (d / "ensemble.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return d


def load_ensemble(directory) -> EnsembleModel:
    d = Path(directory)
    try:
        manifest = json.loads((d / "ensemble.json").read_text())
    except FileNotFoundError:
        raise CheckpointError(f"{d}: no ensemble.json") from None
    if manifest.get("format") != "offlang-ensemble" or manifest.get("version") != 1:
        raise CheckpointError(f"{d}: unsupported ensemble manifest")
    return EnsembleModel([load_checkpoint(d / m) for m in manifest["members"]],
                         manifest["aggregation"])

"""Central finite-difference check of the encoder's analytic gradients."""
from __future__ import annotations

import numpy as np

from ..textprep.bpe import CLS, N_SPECIAL, PAD, SEP
from .model import ClassifierHead, EncoderConfig, classify_loss, init_encoder, init_head, mlm_loss

TINY = EncoderConfig(vocab_size=16, d_model=8, heads=2, layers=1, ff_dim=16, max_len=8, dropout=0.0)


def random_batch(cfg: EncoderConfig, batch: int, rng) -> np.ndarray:
    """Valid framed id sequences of random length, padded to max_len."""
    ids = np.full((batch, cfg.max_len), PAD, dtype=np.int64)
    for r in range(batch):
        n = int(rng.integers(3, cfg.max_len + 1))
        ids[r, 0] = CLS
        ids[r, 1:n - 1] = rng.integers(N_SPECIAL, cfg.vocab_size, size=n - 2)
        ids[r, n - 1] = SEP
    return ids


def relative_error(analytic: np.ndarray, numeric: np.ndarray, atol: float = 1e-8) -> float:
    """||a - n|| / (||a|| + ||n||) over a whole tensor; plain ||a - n|| when
    both norms are below ``atol`` (a vanishing gradient)."""
    diff = float(np.linalg.norm(analytic - numeric))
    denom = float(np.linalg.norm(analytic) + np.linalg.norm(numeric))
    if denom < atol:
        return diff
    return diff / denom


def numeric_grad(f, arr: np.ndarray, step: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + step
        up = f()
        flat[i] = old - step
        down = f()
        flat[i] = old
        gf[i] = (up - down) / (2 * step)
    return g


def grad_errors(config: EncoderConfig = TINY, seed: int = 0, objective: str = "classify",
                batch: int = 3, step: float = 1e-5, weights=None, head=None) -> dict[str, float]:
    """Per-tensor relative error between backprop and central differences (float64)."""
    rng = np.random.default_rng([seed, 0x6C])
    w = (weights or init_encoder(config, seed)).astype(np.float64)
    hd = (head or init_head(config, seed)).astype(np.float64)
    # move off the all-zero bias / unit-gain initialisation so every term is exercised
    if weights is None:
        for name, arr in w.params.items():
            arr += rng.normal(0.0, 0.1, size=arr.shape)
        hd.bias += rng.normal(0.0, 0.1, size=hd.bias.shape)
    ids = random_batch(config, batch, rng)
    labels = rng.integers(0, config.num_classes, size=batch)

    if objective == "classify":
        params = dict(w.params, **{"head.W": hd.W, "head.b": hd.bias})
        loss = lambda: classify_loss(w, hd, ids, labels, with_grads=False)[0]  # noqa: E731
        _, _, grads = classify_loss(w, hd, ids, labels)
    elif objective == "mlm":
        mlm_b = rng.normal(0.0, 0.1, size=config.vocab_size)
        rows, cols = np.nonzero((ids != PAD) & (ids != CLS) & (ids != SEP))
        targets = rng.integers(N_SPECIAL, config.vocab_size, size=len(rows))
        params = dict(w.params, **{"mlm.b": mlm_b})
        loss = lambda: mlm_loss(w, mlm_b, ids, rows, cols, targets, with_grads=False)[0]  # noqa: E731
        _, grads = mlm_loss(w, mlm_b, ids, rows, cols, targets)
    else:
        raise ValueError(f"unknown objective {objective!r}")
    return {name: relative_error(grads[name], numeric_grad(loss, arr, step))
            for name, arr in params.items()}


def grad_check(config: EncoderConfig = TINY, seed: int = 0, objective: str = "classify") -> float:
    """Largest per-tensor relative error; below 1e-4 means backprop is right."""
    if config.d_model > 8 or config.layers != 1 or config.max_len > 8:
        raise ValueError("grad_check expects a tiny config (d_model<=8, layers=1, max_len<=8)")
    return max(grad_errors(config, seed, objective).values())

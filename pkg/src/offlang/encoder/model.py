"""Pre-norm transformer encoder with a [CLS] softmax head, written directly
in numpy with hand-derived backward passes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..textprep.bpe import PAD

GELU_C = math.sqrt(2.0 / math.pi)


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    heads: int = 4
    layers: int = 2
    ff_dim: int = 128
    max_len: int = 64
    dropout: float = 0.1
    num_classes: int = 2

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} not divisible by heads={self.heads}")
        if self.max_len < 3:
            raise ValueError("max_len must be >= 3")
        if min(self.vocab_size, self.d_model, self.heads, self.layers, self.ff_dim) < 1:
            raise ValueError(f"invalid encoder config {self}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self):
        return dict(self.__dict__)


def param_shapes(cfg: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Encoder tensors in their canonical (serialisation) order."""
    D, F = cfg.d_model, cfg.ff_dim
    shapes = {"tok_emb": (cfg.vocab_size, D), "pos_emb": (cfg.max_len, D)}
    for i in range(cfg.layers):
        p = f"layer{i}."
        shapes.update({
            p + "ln1.g": (D,), p + "ln1.b": (D,),
            p + "wq": (D, D), p + "bq": (D,),
            p + "wk": (D, D), p + "bk": (D,),
            p + "wv": (D, D), p + "bv": (D,),
            p + "wo": (D, D), p + "bo": (D,),
            p + "ln2.g": (D,), p + "ln2.b": (D,),
            p + "w1": (D, F), p + "b1": (F,),
            p + "w2": (F, D), p + "b2": (D,),
        })
    shapes.update({"lnf.g": (D,), "lnf.b": (D,)})
    return shapes


@dataclass
class EncoderWeights:
    config: EncoderConfig
    params: dict[str, np.ndarray]
    vocab_fingerprint: str | None = None
    history: list[tuple] = field(default_factory=list)

    def copy(self) -> "EncoderWeights":
        return replace(self, params={k: v.copy() for k, v in self.params.items()},
                       history=list(self.history))

    def astype(self, dtype) -> "EncoderWeights":
        return replace(self, params={k: v.astype(dtype) for k, v in self.params.items()})


@dataclass
class ClassifierHead:
    W: np.ndarray  # (num_classes, d_model)
    bias: np.ndarray  # (num_classes,)

    def copy(self) -> "ClassifierHead":
        return ClassifierHead(self.W.copy(), self.bias.copy())

    def astype(self, dtype) -> "ClassifierHead":
        return ClassifierHead(self.W.astype(dtype), self.bias.astype(dtype))


@dataclass
class EncoderOutput:
    hidden_states: np.ndarray  # (L, D), or (B, L, D) for batches

    @property
    def h(self) -> np.ndarray:
        return self.hidden_states[..., 0, :]


def init_encoder(config: EncoderConfig, seed: int = 0, vocab_fingerprint: str | None = None,
                 dtype=np.float32) -> EncoderWeights:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) matrices, N(0, 0.02) embeddings,
    zero biases, unit layer-norm gains."""
    rng = np.random.default_rng([seed, 0xE1C])
    params = {}
    for name, shape in param_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if name in ("tok_emb", "pos_emb"):
            arr = rng.normal(0.0, 0.02, size=shape)
        elif leaf == "g":
            arr = np.ones(shape)
        elif len(shape) == 1:
            arr = np.zeros(shape)
        else:
            bound = 1.0 / math.sqrt(shape[0])
            arr = rng.uniform(-bound, bound, size=shape)
        params[name] = arr.astype(dtype)
    return EncoderWeights(config, params, vocab_fingerprint)


def init_head(config: EncoderConfig, seed: int = 0, dtype=np.float32) -> ClassifierHead:
    rng = np.random.default_rng([seed, 0x4EAD])
    bound = 1.0 / math.sqrt(config.d_model)
    W = rng.uniform(-bound, bound, size=(config.num_classes, config.d_model))
    return ClassifierHead(W.astype(dtype), np.zeros(config.num_classes, dtype=dtype))


# --------------------------------------------------------------------------
# primitives

def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _layernorm(x, g, b, eps=1e-5):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def _layernorm_back(dy, cache):
    xhat, inv, g = cache
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(0)
    db = dy.reshape(-1, dy.shape[-1]).sum(0)
    dxhat = dy * g
    dx = inv * (dxhat - dxhat.mean(-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dg, db


def _gelu(u):
    inner = GELU_C * (u + 0.044715 * u ** 3)
    t = np.tanh(inner)
    return 0.5 * u * (1.0 + t), t


def _gelu_back(du_out, u, t):
    dinner = GELU_C * (1.0 + 3 * 0.044715 * u * u)
    return du_out * (0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * dinner)


def _dropout(x, rate, rng):
    if rng is None or rate <= 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * keep, keep


def _linear_back(dy, x, W):
    """Grads for y = x @ W + b with x (..., i) and dy (..., o)."""
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ W.T, x2.T @ dy2, dy2.sum(0)


# --------------------------------------------------------------------------
# encoder forward / backward

def check_ids(w: EncoderWeights, ids: np.ndarray):
    cfg = w.config
    if ids.ndim != 2:
        raise ShapeError(f"expected (batch, length) ids, got shape {ids.shape}")
    if ids.shape[1] > cfg.max_len:
        raise ShapeError(f"sequence length {ids.shape[1]} exceeds max_len {cfg.max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= cfg.vocab_size):
        raise ShapeError(f"token id outside encoder vocabulary of {cfg.vocab_size}")


def encode_forward(w: EncoderWeights, ids: np.ndarray, rng=None):
    """Hidden states (B, L, D) plus the cache needed by ``encode_backward``.

    ``rng`` switches on dropout (training mode); pass None for inference.
    Keys at [PAD] positions are masked out of every attention distribution.
    """
    check_ids(w, ids)
    P, cfg = w.params, w.config
    B, L = ids.shape
    H = cfg.heads
    dh = cfg.d_model // H
    dtype = P["tok_emb"].dtype
    rate = cfg.dropout
    key_ok = (ids != PAD)[:, None, None, :]
    scale = dtype.type(1.0 / math.sqrt(dh))

    x = P["tok_emb"][ids] + P["pos_emb"][:L]
    x, emb_keep = _dropout(x, rate, rng)
    caches = []
    for i in range(cfg.layers):
        p = f"layer{i}."
        a, ln1 = _layernorm(x, P[p + "ln1.g"], P[p + "ln1.b"])
        q = (a @ P[p + "wq"] + P[p + "bq"]).reshape(B, L, H, dh).transpose(0, 2, 1, 3)
        k = (a @ P[p + "wk"] + P[p + "bk"]).reshape(B, L, H, dh).transpose(0, 2, 1, 3)
        v = (a @ P[p + "wv"] + P[p + "bv"]).reshape(B, L, H, dh).transpose(0, 2, 1, 3)
        scores = np.where(key_ok, (q @ k.transpose(0, 1, 3, 2)) * scale, -np.inf)
        attn = softmax(scores)
        ctx = (attn @ v).transpose(0, 2, 1, 3).reshape(B, L, cfg.d_model)
        o = ctx @ P[p + "wo"] + P[p + "bo"]
        o, o_keep = _dropout(o, rate, rng)
        x = x + o
        b, ln2 = _layernorm(x, P[p + "ln2.g"], P[p + "ln2.b"])
        u = b @ P[p + "w1"] + P[p + "b1"]
        gu, t = _gelu(u)
        f = gu @ P[p + "w2"] + P[p + "b2"]
        f, f_keep = _dropout(f, rate, rng)
        x = x + f
        caches.append((a, ln1, q, k, v, attn, ctx, o_keep, b, ln2, u, t, gu, f_keep))
    hs, lnf = _layernorm(x, P["lnf.g"], P["lnf.b"])
    return hs, (ids, emb_keep, caches, lnf)


def encode_backward(w: EncoderWeights, dhs: np.ndarray, cache) -> dict[str, np.ndarray]:
    P, cfg = w.params, w.config
    ids, emb_keep, caches, lnf = cache
    B, L = ids.shape
    H = cfg.heads
    dh = cfg.d_model // H
    scale = 1.0 / math.sqrt(dh)
    grads: dict[str, np.ndarray] = {}

    dx, grads["lnf.g"], grads["lnf.b"] = _layernorm_back(dhs, lnf)
    for i in reversed(range(cfg.layers)):
        p = f"layer{i}."
        a, ln1, q, k, v, attn, ctx, o_keep, b, ln2, u, t, gu, f_keep = caches[i]
        # feed-forward block
        df = dx if f_keep is None else dx * f_keep
        dgu, grads[p + "w2"], grads[p + "b2"] = _linear_back(df, gu, P[p + "w2"])
        du = _gelu_back(dgu, u, t)
        db_, grads[p + "w1"], grads[p + "b1"] = _linear_back(du, b, P[p + "w1"])
        dln2, grads[p + "ln2.g"], grads[p + "ln2.b"] = _layernorm_back(db_, ln2)
        dx = dx + dln2
        # attention block
        do = dx if o_keep is None else dx * o_keep
        dctx, grads[p + "wo"], grads[p + "bo"] = _linear_back(do, ctx, P[p + "wo"])
        dctx = dctx.reshape(B, L, H, dh).transpose(0, 2, 1, 3)
        dattn = dctx @ v.transpose(0, 1, 3, 2)
        dv = attn.transpose(0, 1, 3, 2) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(-1, keepdims=True)) * scale
        dq = dscores @ k
        dk = dscores.transpose(0, 1, 3, 2) @ q
        da = 0
        for name, dz in (("q", dq), ("k", dk), ("v", dv)):
            dz = dz.transpose(0, 2, 1, 3).reshape(B, L, cfg.d_model)
            dpart, grads[p + "w" + name], grads[p + "b" + name] = _linear_back(dz, a, P[p + "w" + name])
            da = da + dpart
        dln1, grads[p + "ln1.g"], grads[p + "ln1.b"] = _layernorm_back(da, ln1)
        dx = dx + dln1
    if emb_keep is not None:
        dx = dx * emb_keep
    dtok = np.zeros_like(P["tok_emb"])
    np.add.at(dtok, ids.ravel(), dx.reshape(-1, cfg.d_model))
    grads["tok_emb"] = dtok
    dpos = np.zeros_like(P["pos_emb"])
    dpos[:L] = dx.sum(0)
    grads["pos_emb"] = dpos
    return grads


# --------------------------------------------------------------------------
# classification head (p(c|h) = softmax(W h + b)) and losses

def head_logits(head: ClassifierHead, hidden_states: np.ndarray) -> np.ndarray:
    """Logits from the [CLS] state only (position 0); other positions are ignored."""
    h = hidden_states[..., 0, :]
    return h @ head.W.T + head.bias


def classify_loss(w: EncoderWeights, head: ClassifierHead, ids, labels, rng=None, with_grads=True):
    """Mean cross-entropy of the [CLS] classifier; returns (loss, probs, grads)."""
    hs, cache = encode_forward(w, ids, rng)
    logits = head_logits(head, hs)
    probs = softmax(logits)
    B = len(labels)
    picked = probs[np.arange(B), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, np.finfo(probs.dtype).tiny))))
    if not with_grads:
        return loss, probs, None
    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1
    dlogits /= B
    h = hs[:, 0, :]
    grads_head = {"head.W": dlogits.T @ h, "head.b": dlogits.sum(0)}
    dhs = np.zeros_like(hs)
    dhs[:, 0, :] = dlogits @ head.W
    grads = encode_backward(w, dhs, cache)
    grads.update(grads_head)
    return loss, probs, grads


def mlm_loss(w: EncoderWeights, mlm_bias: np.ndarray, ids, rows, cols, targets, rng=None,
             with_grads=True):
    """Masked-token cross-entropy with the output projection tied to ``tok_emb``.

    ``(rows, cols)`` index the selected positions of the (already masked)
    ``ids`` and ``targets`` holds their original ids.
    """
    hs, cache = encode_forward(w, ids, rng)
    E = w.params["tok_emb"]
    hsel = hs[rows, cols]
    logits = hsel @ E.T + mlm_bias
    probs = softmax(logits)
    n = len(targets)
    picked = probs[np.arange(n), targets]
    loss = float(-np.mean(np.log(np.maximum(picked, np.finfo(probs.dtype).tiny))))
    if not with_grads:
        return loss, None
    dlogits = probs
    dlogits[np.arange(n), targets] -= 1
    dlogits /= n
    dhs = np.zeros_like(hs)
    np.add.at(dhs, (rows, cols), dlogits @ E)
    grads = encode_backward(w, dhs, cache)
    grads["tok_emb"] = grads["tok_emb"] + dlogits.T @ hsel
    grads["mlm.b"] = dlogits.sum(0)
    return loss, grads


def forward(w: EncoderWeights, head: ClassifierHead, ids, train_mode: bool = False, seed: int = 0):
    """Encode one TokenIdSequence (or id array) and classify it.

    Returns (EncoderOutput, class probabilities). Dropout is active only in
    ``train_mode``, drawing from an RNG seeded by ``seed``.
    """
    arr = np.asarray(getattr(ids, "ids", ids))
    single = arr.ndim == 1
    batch = arr[None, :] if single else arr
    if head.W.shape[1] != w.config.d_model:
        raise ShapeError("classifier head width does not match encoder d_model")
    rng = np.random.default_rng(seed) if train_mode else None
    hs, _ = encode_forward(w, batch, rng)
    probs = softmax(head_logits(head, hs))
    if single:
        return EncoderOutput(hs[0]), probs[0]
    return EncoderOutput(hs), probs


def predict_proba(w: EncoderWeights, head: ClassifierHead, ids: np.ndarray, lengths=None,
                  batch_size: int = 64) -> np.ndarray:
    """Inference-mode class probabilities for a stacked id matrix (n, max_len).

    Each batch is cut to its longest sequence; masking makes this exact.
    """
    ids = np.asarray(ids)
    if lengths is None:
        lengths = (ids != PAD).sum(1)
    out = np.zeros((len(ids), head.W.shape[0]), dtype=np.float64)
    for s in range(0, len(ids), batch_size):
        chunk = ids[s:s + batch_size]
        width = int(max(lengths[s:s + batch_size])) if len(chunk) else 1
        hs, _ = encode_forward(w, chunk[:, :width])
        out[s:s + batch_size] = softmax(head_logits(head, hs).astype(np.float64))
    return out


@dataclass
class Checkpoint:
    """Encoder + classifier head + everything needed to reuse them."""

    encoder: EncoderWeights
    head: ClassifierHead
    provenance: dict = field(default_factory=dict)
    log: list[tuple] = field(default_factory=list)  # (epoch, split, loss, accuracy)

    @property
    def config(self) -> EncoderConfig:
        return self.encoder.config

    @property
    def vocab_fingerprint(self) -> str | None:
        return self.encoder.vocab_fingerprint

    def predict_proba(self, ids, lengths=None) -> np.ndarray:
        return predict_proba(self.encoder, self.head, ids, lengths)

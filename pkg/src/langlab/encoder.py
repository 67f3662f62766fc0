"""A small trainable transformer encoder with hand-written backprop.

Stands in for the pre-trained multilingual encoder: masked-token
pretraining on the synthetic corpus gives it language clusters before any
fine-tuning.  Pre-layer-norm residual blocks, learned position
embeddings, exact erf-based GELU, additive key masking.  Everything runs
in float64; forward passes record a GradientTape from which
backward_batch produces exact analytical parameter gradients.

Parameter names: ``tok_emb``, ``pos_emb``, ``mlm_bias``,
``final_ln_{g,b}`` and per layer i ``L{i}_ln1_{g,b}``,
``L{i}_{wq,bq,wk,bk,wv,bv,wo,bo}``, ``L{i}_ln2_{g,b}``,
``L{i}_{w1,b1,w2,b2}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from langlab.optim import AdamState, adam_step
from langlab.rng import stream
from langlab.vocab import MASK_ID, N_SPECIAL, PAD_ID

LN_EPS = 1e-6
KEY_MASK_BIAS = -1e30
INV_SQRT_2 = 1.0 / np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    max_len: int = 128
    dropout: float = 0.1

    def __post_init__(self):
        if min(self.vocab_size, self.d_model, self.n_layers,
               self.n_heads, self.d_ff, self.max_len) < 1:
            raise ValueError("all encoder dimensions must be >= 1")
        if self.d_model % self.n_heads:
            raise ValueError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0,1), got {self.dropout}")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size, "d_model": self.d_model,
            "n_layers": self.n_layers, "n_heads": self.n_heads,
            "d_ff": self.d_ff, "max_len": self.max_len,
            "dropout": self.dropout,
        }


@dataclass
class EncoderModel:
    config: EncoderConfig
    params: dict[str, np.ndarray]

    @classmethod
    def init(cls, config: EncoderConfig, seed: int = 0,
             init_std: float = 0.02) -> "EncoderModel":
        rng = stream(seed, "encoder-init")
        d, ff, v = config.d_model, config.d_ff, config.vocab_size
        p: dict[str, np.ndarray] = {}

        def w(name, *shape):
            p[name] = rng.normal(0.0, init_std, size=shape)

        def zeros(name, *shape):
            p[name] = np.zeros(shape)

        def ones(name, *shape):
            p[name] = np.ones(shape)

        w("tok_emb", v, d)
        w("pos_emb", config.max_len, d)
        zeros("mlm_bias", v)
        for i in range(config.n_layers):
            L = f"L{i}_"
            ones(L + "ln1_g", d); zeros(L + "ln1_b", d)
            for nm in ("wq", "wk", "wv", "wo"):
                w(L + nm, d, d)
            for nm in ("bq", "bk", "bv", "bo"):
                zeros(L + nm, d)
            ones(L + "ln2_g", d); zeros(L + "ln2_b", d)
            w(L + "w1", d, ff); zeros(L + "b1", ff)
            w(L + "w2", ff, d); zeros(L + "b2", d)
        ones("final_ln_g", d); zeros("final_ln_b", d)
        return cls(config=config, params=p)

    def copy(self) -> "EncoderModel":
        return EncoderModel(self.config,
                            {k: v.copy() for k, v in self.params.items()})


@dataclass
class GradientTape:
    """Forward intermediates for one minibatch; consumed once by backward."""

    ids: np.ndarray
    lengths: np.ndarray
    key_bias: np.ndarray
    emb_drop_mask: np.ndarray | None
    layers: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    used: bool = False


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, xhat, inv


def _layer_norm_backward(dy, g, xhat, inv):
    dxhat = dy * g
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    db = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    m1 = dxhat.mean(axis=-1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    return dx, dg, db


def _gelu(x):
    return x * 0.5 * (1.0 + erf(x * INV_SQRT_2))


def _gelu_grad(x):
    cdf = 0.5 * (1.0 + erf(x * INV_SQRT_2))
    pdf = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return cdf + x * pdf


def _dropout_mask(shape, rate, rng):
    return (rng.random(shape) >= rate) / (1.0 - rate)


def _split_heads(x, n_heads):
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def forward_batch(model: EncoderModel, ids: np.ndarray, lengths: np.ndarray,
                  *, train: bool = False, rng=None, want_tape: bool = False):
    """Run the encoder over a padded id batch.

    ids: (B, T) int array padded with PAD; lengths: (B,) true lengths.
    Returns (hidden (B, T, d_model), tape or None).  Dropout is active
    only when train=True, drawing masks from rng.
    """
    cfg, p = model.config, model.params
    ids = np.asarray(ids)
    lengths = np.asarray(lengths)
    B, T = ids.shape
    if T > cfg.max_len:
        raise ValueError(f"sequence length {T} exceeds max {cfg.max_len}")
    if ids.min() < 0 or ids.max() >= cfg.vocab_size:
        raise ValueError("token id out of range")
    drop = train and cfg.dropout > 0.0
    if drop and rng is None:
        raise ValueError("training-mode forward needs an rng for dropout")

    # additive bias over keys: 0 for real positions, -1e30 for padding
    cols = np.arange(T)
    key_bias = np.where(cols[None, :] < lengths[:, None], 0.0, KEY_MASK_BIAS)
    key_bias = key_bias[:, None, None, :]

    x = p["tok_emb"][ids] + p["pos_emb"][:T]
    emb_mask = None
    if drop:
        emb_mask = _dropout_mask(x.shape, cfg.dropout, rng)
        x = x * emb_mask

    tape = GradientTape(ids=ids, lengths=lengths, key_bias=key_bias,
                        emb_drop_mask=emb_mask) if want_tape else None
    scale = 1.0 / np.sqrt(cfg.d_model // cfg.n_heads)

    for i in range(cfg.n_layers):
        L = f"L{i}_"
        h1, xhat1, inv1 = _layer_norm(x, p[L + "ln1_g"], p[L + "ln1_b"])
        q = _split_heads(h1 @ p[L + "wq"] + p[L + "bq"], cfg.n_heads)
        k = _split_heads(h1 @ p[L + "wk"] + p[L + "bk"], cfg.n_heads)
        v = _split_heads(h1 @ p[L + "wv"] + p[L + "bv"], cfg.n_heads)
        scores = q @ k.swapaxes(-1, -2) * scale + key_bias
        scores -= scores.max(axis=-1, keepdims=True)
        e = np.exp(scores)
        attn = e / e.sum(axis=-1, keepdims=True)
        ctx = _merge_heads(attn @ v)
        att_out = ctx @ p[L + "wo"] + p[L + "bo"]
        att_mask = None
        if drop:
            att_mask = _dropout_mask(att_out.shape, cfg.dropout, rng)
            att_out = att_out * att_mask
        x_att = x + att_out

        h2, xhat2, inv2 = _layer_norm(x_att, p[L + "ln2_g"], p[L + "ln2_b"])
        ff_pre = h2 @ p[L + "w1"] + p[L + "b1"]
        ff_act = _gelu(ff_pre)
        ff_out = ff_act @ p[L + "w2"] + p[L + "b2"]
        ff_mask = None
        if drop:
            ff_mask = _dropout_mask(ff_out.shape, cfg.dropout, rng)
            ff_out = ff_out * ff_mask
        x_new = x_att + ff_out

        if want_tape:
            tape.layers.append({
                "x": x, "xhat1": xhat1, "inv1": inv1, "h1": h1,
                "q": q, "k": k, "v": v, "attn": attn, "ctx": ctx,
                "att_mask": att_mask, "x_att": x_att,
                "xhat2": xhat2, "inv2": inv2, "h2": h2,
                "ff_pre": ff_pre, "ff_act": ff_act, "ff_mask": ff_mask,
            })
        x = x_new

    hidden, xhatf, invf = _layer_norm(x, p["final_ln_g"], p["final_ln_b"])
    if want_tape:
        tape.final = {"x": x, "xhat": xhatf, "inv": invf}
    return hidden, tape


def backward_batch(model: EncoderModel, tape: GradientTape,
                   d_hidden: np.ndarray) -> dict[str, np.ndarray]:
    """Exact parameter gradients for the forward pass recorded in tape.

    Upstream gradient at padded positions is zeroed (padding is not part
    of the sequence).  The tape is single-use.
    """
    if tape.used:
        raise RuntimeError("gradient tape already consumed")
    tape.used = True

    cfg, p = model.config, model.params
    B, T = tape.ids.shape
    cols = np.arange(T)
    real = (cols[None, :] < tape.lengths[:, None])[..., None]
    d_hidden = d_hidden * real

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    scale = 1.0 / np.sqrt(cfg.d_model // cfg.n_heads)

    fin = tape.final
    dx, dg, db = _layer_norm_backward(d_hidden, p["final_ln_g"],
                                      fin["xhat"], fin["inv"])
    grads["final_ln_g"] += dg
    grads["final_ln_b"] += db

    for i in reversed(range(cfg.n_layers)):
        L = f"L{i}_"
        t = tape.layers[i]
        d = cfg.d_model

        # feed-forward branch
        d_ff_out = dx if t["ff_mask"] is None else dx * t["ff_mask"]
        ff2d = t["ff_act"].reshape(-1, cfg.d_ff)
        dff2d = d_ff_out.reshape(-1, d)
        grads[L + "w2"] += ff2d.T @ dff2d
        grads[L + "b2"] += dff2d.sum(axis=0)
        d_ff_act = d_ff_out @ p[L + "w2"].T
        d_ff_pre = d_ff_act * _gelu_grad(t["ff_pre"])
        h22d = t["h2"].reshape(-1, d)
        dpre2d = d_ff_pre.reshape(-1, cfg.d_ff)
        grads[L + "w1"] += h22d.T @ dpre2d
        grads[L + "b1"] += dpre2d.sum(axis=0)
        d_h2 = d_ff_pre @ p[L + "w1"].T
        d_x_att, dg2, db2 = _layer_norm_backward(d_h2, p[L + "ln2_g"],
                                                 t["xhat2"], t["inv2"])
        grads[L + "ln2_g"] += dg2
        grads[L + "ln2_b"] += db2
        d_x_att = d_x_att + dx  # residual

        # attention branch
        d_att_out = d_x_att if t["att_mask"] is None else d_x_att * t["att_mask"]
        ctx2d = t["ctx"].reshape(-1, d)
        datt2d = d_att_out.reshape(-1, d)
        grads[L + "wo"] += ctx2d.T @ datt2d
        grads[L + "bo"] += datt2d.sum(axis=0)
        d_ctx = _split_heads(d_att_out @ p[L + "wo"].T, cfg.n_heads)
        attn, q, k, v = t["attn"], t["q"], t["k"], t["v"]
        d_attn = d_ctx @ v.swapaxes(-1, -2)
        d_v = attn.swapaxes(-1, -2) @ d_ctx
        d_scores = (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True)) * attn
        d_q = d_scores @ k * scale
        d_k = d_scores.swapaxes(-1, -2) @ q * scale
        dq2d = _merge_heads(d_q).reshape(-1, d)
        dk2d = _merge_heads(d_k).reshape(-1, d)
        dv2d = _merge_heads(d_v).reshape(-1, d)
        h12d = t["h1"].reshape(-1, d)
        grads[L + "wq"] += h12d.T @ dq2d
        grads[L + "bq"] += dq2d.sum(axis=0)
        grads[L + "wk"] += h12d.T @ dk2d
        grads[L + "bk"] += dk2d.sum(axis=0)
        grads[L + "wv"] += h12d.T @ dv2d
        grads[L + "bv"] += dv2d.sum(axis=0)
        d_h1 = (dq2d @ p[L + "wq"].T + dk2d @ p[L + "wk"].T
                + dv2d @ p[L + "wv"].T).reshape(B, T, d)
        d_x, dg1, db1 = _layer_norm_backward(d_h1, p[L + "ln1_g"],
                                             t["xhat1"], t["inv1"])
        grads[L + "ln1_g"] += dg1
        grads[L + "ln1_b"] += db1
        dx = d_x + d_x_att  # residual

    if tape.emb_drop_mask is not None:
        dx = dx * tape.emb_drop_mask
    np.add.at(grads["tok_emb"], tape.ids, dx)
    grads["pos_emb"][:T] += dx.sum(axis=0)
    return grads


# ----------------------------------------------------------------------------
# Single-sequence evaluation interface
# ----------------------------------------------------------------------------

def _sequence_ids(sequence) -> np.ndarray:
    tokens = getattr(sequence, "tokens", sequence)
    return np.asarray(tokens, dtype=np.int64)


def encode(model: EncoderModel, sequence) -> np.ndarray:
    """Final-layer embedding per token, eval mode (deterministic)."""
    ids = _sequence_ids(sequence)
    if ids.ndim != 1 or ids.size == 0:
        raise ValueError("encode expects a nonempty token sequence")
    hidden, _ = forward_batch(model, ids[None, :], np.array([ids.size]))
    return hidden[0]


def text_embedding(model: EncoderModel, sequence) -> np.ndarray:
    """Embedding of position 0, used as the whole-text representation."""
    return encode(model, sequence)[0]


def encode_batch(model: EncoderModel, ids, lengths) -> np.ndarray:
    """Eval-mode batch encode; returns (B, T, d_model)."""
    hidden, _ = forward_batch(model, ids, lengths)
    return hidden


# ----------------------------------------------------------------------------
# Masked-token pretraining
# ----------------------------------------------------------------------------

def _pad_id_batch(seqs: list[np.ndarray]):
    lengths = np.array([s.size for s in seqs])
    T = int(lengths.max())
    ids = np.full((len(seqs), T), PAD_ID, dtype=np.int64)
    for r, s in enumerate(seqs):
        ids[r, : s.size] = s
    return ids, lengths


def mlm_step_loss(model, ids, lengths, mask_rate, rng):
    """One masked-prediction forward/backward; returns (loss, grads).

    Eligible positions (non-special ids) are replaced by MASK with
    probability mask_rate; if none get drawn, one eligible position is
    forced so every step has a defined loss.
    """
    p = model.params
    eligible = ids >= N_SPECIAL
    mask = eligible & (rng.random(ids.shape) < mask_rate)
    if not mask.any():
        rows, colz = np.nonzero(eligible)
        pick = rng.integers(rows.size)
        mask[rows[pick], colz[pick]] = True

    masked_ids = np.where(mask, MASK_ID, ids)
    hidden, tape = forward_batch(model, masked_ids, lengths, want_tape=True)

    rows, colz = np.nonzero(mask)
    h = hidden[rows, colz]                      # (M, d)
    gold = ids[rows, colz]                      # (M,)
    logits = h @ p["tok_emb"].T + p["mlm_bias"]
    logits -= logits.max(axis=-1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=-1, keepdims=True)
    n = gold.size
    loss = -np.log(np.maximum(probs[np.arange(n), gold], 1e-300)).mean()

    d_logits = probs.copy()
    d_logits[np.arange(n), gold] -= 1.0
    d_logits /= n
    d_hidden = np.zeros_like(hidden)
    d_hidden[rows, colz] = d_logits @ p["tok_emb"]
    grads = backward_batch(model, tape, d_hidden)
    grads["tok_emb"] += d_logits.T @ h          # tied output projection
    grads["mlm_bias"] += d_logits.sum(axis=0)
    return loss, grads


def mlm_masked_accuracy(model, sequences, mask_rate, seed=0):
    """Fraction of masked positions predicted correctly (eval check)."""
    rng = stream(seed, "mlm-eval")
    p = model.params
    seqs = [_sequence_ids(s) for s in sequences]
    ids, lengths = _pad_id_batch(seqs)
    eligible = (ids >= N_SPECIAL)
    mask = eligible & (rng.random(ids.shape) < mask_rate)
    if not mask.any():
        return float("nan")
    masked_ids = np.where(mask, MASK_ID, ids)
    hidden, _ = forward_batch(model, masked_ids, lengths)
    rows, colz = np.nonzero(mask)
    logits = hidden[rows, colz] @ p["tok_emb"].T + p["mlm_bias"]
    return float((logits.argmax(axis=-1) == ids[rows, colz]).mean())


def mlm_pretrain(model: EncoderModel, corpus, *, mask_rate: float = 0.15,
                 steps: int = 2000, batch_size: int = 32, lr: float = 1e-3,
                 seed: int = 0) -> tuple[EncoderModel, list[float]]:
    """Masked-token pretraining; returns (trained model, per-step losses).

    Each step samples a batch with replacement, masks a mask_rate
    fraction of non-special tokens, and minimizes cross-entropy of the
    original ids under the tied-weight output projection.
    """
    if not 0.0 < mask_rate < 1.0:
        raise ValueError(f"mask_rate must be in (0,1), got {mask_rate}")
    seqs = [_sequence_ids(getattr(ex, "sequence", ex)) for ex in corpus]
    if not seqs:
        raise ValueError("empty pretraining corpus")
    if steps == 0:
        return model, []

    model = model.copy()
    state = AdamState()
    losses: list[float] = []
    batch_rng = stream(seed, "mlm-batch")
    mask_rng = stream(seed, "mlm-mask")
    for step in range(steps):
        pick = batch_rng.integers(len(seqs), size=min(batch_size, len(seqs)))
        ids, lengths = _pad_id_batch([seqs[i] for i in pick])
        loss, grads = mlm_step_loss(model, ids, lengths, mask_rate, mask_rng)
        if not np.isfinite(loss):
            raise FloatingPointError(
                f"masked-prediction loss became non-finite at step {step}"
            )
        adam_step(model.params, grads, state, lr)
        losses.append(float(loss))
    return model, losses

"""Compact pre-norm encoder-decoder transformer in numpy.

Forward and backward passes are written by hand so analytic gradients can be
checked against finite differences. Matrix products go through numpy/BLAS;
the softmax/cross-entropy head, embedding scatter-add and Adam update are
delegated to the switchable kernels in kernels.py. Everything runs in
float64 for reproducibility and gradient-check headroom.
"""

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ..errors import ConfigError
from . import kernels

DTYPE = np.float64
NEG = -1e9
LN_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters for the translator and the tag synthesizer.

    Defaults are a desk-scale shrink of a standard base configuration; the
    2000/100 step schedule keeps a 20:1 steps-to-validation ratio. patience
    counts consecutive non-improving validations before an early stop
    (0 disables).
    """

    layers: int = 2
    heads: int = 4
    model_dim: int = 128
    ff_dim: int = 256
    dropout: float = 0.1
    max_steps: int = 2000
    validation_interval: int = 100
    seed: int = 1
    label_smoothing: float = 0.1
    learning_rate: float = 2e-3
    warmup_steps: int = 100
    grad_clip: float = 1.0
    batch_size: int = 32
    max_len: int = 64
    patience: int = 0
    synth_fit_threshold: float = 0.9

    def validate(self, min_steps=1):
        if self.layers < 1:
            raise ConfigError(f"layers must be >= 1, got {self.layers}")
        if self.heads < 1:
            raise ConfigError(f"heads must be >= 1, got {self.heads}")
        if self.model_dim < 1 or self.model_dim % self.heads != 0:
            raise ConfigError(
                f"model_dim ({self.model_dim}) must be positive and divisible "
                f"by heads ({self.heads})"
            )
        if self.ff_dim < 1:
            raise ConfigError(f"ff_dim must be >= 1, got {self.ff_dim}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ConfigError(
                f"label_smoothing must be in [0, 1), got {self.label_smoothing}"
            )
        if self.max_steps < min_steps:
            raise ConfigError(
                f"max_steps must be >= {min_steps}, got {self.max_steps}"
            )
        if self.validation_interval < 1:
            raise ConfigError(
                f"validation_interval must be >= 1, got {self.validation_interval}"
            )
        if self.max_steps >= 1 and self.validation_interval > self.max_steps:
            raise ConfigError(
                f"validation_interval ({self.validation_interval}) must not "
                f"exceed max_steps ({self.max_steps})"
            )
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.warmup_steps < 1:
            raise ConfigError(f"warmup_steps must be >= 1, got {self.warmup_steps}")
        if self.grad_clip <= 0:
            raise ConfigError(f"grad_clip must be > 0, got {self.grad_clip}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_len < 2:
            raise ConfigError(f"max_len must be >= 2, got {self.max_len}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")
        if not 0.0 < self.synth_fit_threshold <= 1.0:
            raise ConfigError(
                f"synth_fit_threshold must be in (0, 1], got {self.synth_fit_threshold}"
            )
        return self

    ARCHITECTURE_FIELDS = ("layers", "heads", "model_dim", "ff_dim", "max_len")

    def override(self, **overrides):
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def sinusoid_positions(max_len, dim):
    pos = np.arange(max_len, dtype=DTYPE)[:, None]
    idx = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2.0 * (idx // 2)) / dim)
    return np.where(idx % 2 == 0, np.sin(angle), np.cos(angle))


# --- primitive layers: each fwd returns (out, cache), bwd consumes it -------


def _linear_fwd(x, w, b):
    return x @ w + b, (x, w)


def _linear_bwd(dy, cache):
    x, w = cache
    dx = dy @ w.T
    flat_x = x.reshape(-1, x.shape[-1])
    flat_dy = dy.reshape(-1, dy.shape[-1])
    return dx, flat_x.T @ flat_dy, flat_dy.sum(axis=0)


def _ln_fwd(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def _ln_bwd(dy, cache):
    xhat, inv, g = cache
    flat_dy = dy.reshape(-1, dy.shape[-1])
    flat_xhat = xhat.reshape(-1, xhat.shape[-1])
    dg = (flat_dy * flat_xhat).sum(axis=0)
    db = flat_dy.sum(axis=0)
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def masked_softmax(scores, bias):
    """Softmax over the last axis after adding an additive mask bias."""
    s = scores + bias
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax_bwd(da, a):
    return (da - (da * a).sum(axis=-1, keepdims=True)) * a


def _dropout_fwd(x, p, rng):
    if rng is None or p <= 0.0:
        return x, None
    mask = (rng.random(x.shape) >= p).astype(DTYPE) / (1.0 - p)
    return x * mask, mask


def _dropout_bwd(dy, mask):
    return dy if mask is None else dy * mask


def _split_heads(x, heads):
    b, t, d = x.shape
    return x.reshape(b, t, heads, d // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _attn_fwd(params, prefix, xq, xkv, bias, heads):
    q, cq = _linear_fwd(xq, params[f"{prefix}.wq"], params[f"{prefix}.bq"])
    k, ck = _linear_fwd(xkv, params[f"{prefix}.wk"], params[f"{prefix}.bk"])
    v, cv = _linear_fwd(xkv, params[f"{prefix}.wv"], params[f"{prefix}.bv"])
    qh = _split_heads(q, heads)
    kh = _split_heads(k, heads)
    vh = _split_heads(v, heads)
    scale = 1.0 / math.sqrt(qh.shape[-1])
    attn = masked_softmax((qh @ kh.transpose(0, 1, 3, 2)) * scale, bias)
    ctx = _merge_heads(attn @ vh)
    out, co = _linear_fwd(ctx, params[f"{prefix}.wo"], params[f"{prefix}.bo"])
    return out, (cq, ck, cv, co, qh, kh, vh, attn, scale)


def _attn_bwd(dout, cache, grads, prefix, heads):
    cq, ck, cv, co, qh, kh, vh, attn, scale = cache
    dctx, dwo, dbo = _linear_bwd(dout, co)
    _acc(grads, f"{prefix}.wo", dwo)
    _acc(grads, f"{prefix}.bo", dbo)
    dctx_h = _split_heads(dctx, heads)
    dattn = dctx_h @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ dctx_h
    dscores = _softmax_bwd(dattn, attn) * scale
    dqh = dscores @ kh
    dkh = dscores.transpose(0, 1, 3, 2) @ qh
    dq = _merge_heads(dqh)
    dk = _merge_heads(dkh)
    dv = _merge_heads(dvh)
    dxq, dwq, dbq = _linear_bwd(dq, cq)
    dxk, dwk, dbk = _linear_bwd(dk, ck)
    dxv, dwv, dbv = _linear_bwd(dv, cv)
    _acc(grads, f"{prefix}.wq", dwq)
    _acc(grads, f"{prefix}.bq", dbq)
    _acc(grads, f"{prefix}.wk", dwk)
    _acc(grads, f"{prefix}.bk", dbk)
    _acc(grads, f"{prefix}.wv", dwv)
    _acc(grads, f"{prefix}.bv", dbv)
    return dxq, dxk + dxv


def _ff_fwd(params, prefix, x):
    h, c1 = _linear_fwd(x, params[f"{prefix}.w1"], params[f"{prefix}.b1"])
    r = np.maximum(h, 0.0)
    y, c2 = _linear_fwd(r, params[f"{prefix}.w2"], params[f"{prefix}.b2"])
    return y, (c1, c2, h)


def _ff_bwd(dy, cache, grads, prefix):
    c1, c2, h = cache
    dr, dw2, db2 = _linear_bwd(dy, c2)
    dh = dr * (h > 0.0)
    dx, dw1, db1 = _linear_bwd(dh, c1)
    _acc(grads, f"{prefix}.w1", dw1)
    _acc(grads, f"{prefix}.b1", db1)
    _acc(grads, f"{prefix}.w2", dw2)
    _acc(grads, f"{prefix}.b2", db2)
    return dx


def _acc(grads, name, value):
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value


class Transformer:
    """Parameter container plus forward/backward over padded id batches."""

    def __init__(self, config, vocab_size, pad_id=0, params=None, rng=None):
        config.validate(min_steps=0)
        self.config = config
        self.vocab_size = vocab_size
        self.pad_id = pad_id
        self.pos = sinusoid_positions(config.max_len, config.model_dim)
        if params is not None:
            self.params = params
        else:
            if rng is None:
                rng = np.random.default_rng(config.seed)
            self.params = self._init_params(rng)

    # -- initialization ------------------------------------------------------

    def _init_params(self, rng):
        c = self.config
        d, f, v = c.model_dim, c.ff_dim, self.vocab_size
        params = {}

        def xavier(fan_in, fan_out):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(DTYPE)

        def add_attn(prefix):
            for name in ("wq", "wk", "wv", "wo"):
                params[f"{prefix}.{name}"] = xavier(d, d)
            for name in ("bq", "bk", "bv", "bo"):
                params[f"{prefix}.{name}"] = np.zeros(d, dtype=DTYPE)

        def add_ln(prefix):
            params[f"{prefix}.g"] = np.ones(d, dtype=DTYPE)
            params[f"{prefix}.b"] = np.zeros(d, dtype=DTYPE)

        def add_ff(prefix):
            params[f"{prefix}.w1"] = xavier(d, f)
            params[f"{prefix}.b1"] = np.zeros(f, dtype=DTYPE)
            params[f"{prefix}.w2"] = xavier(f, d)
            params[f"{prefix}.b2"] = np.zeros(d, dtype=DTYPE)

        params["embed"] = rng.normal(0.0, 1.0 / math.sqrt(d), size=(v, d)).astype(DTYPE)
        for i in range(c.layers):
            add_ln(f"enc{i}.ln1")
            add_attn(f"enc{i}.attn")
            add_ln(f"enc{i}.ln2")
            add_ff(f"enc{i}.ff")
        add_ln("enc.ln")
        for i in range(c.layers):
            add_ln(f"dec{i}.ln1")
            add_attn(f"dec{i}.self")
            add_ln(f"dec{i}.ln2")
            add_attn(f"dec{i}.cross")
            add_ln(f"dec{i}.ln3")
            add_ff(f"dec{i}.ff")
        add_ln("dec.ln")
        params["out.w"] = xavier(d, v)
        params["out.b"] = np.zeros(v, dtype=DTYPE)
        return params

    # -- masks ---------------------------------------------------------------

    def _src_bias(self, src):
        nonpad = src != self.pad_id
        return np.where(nonpad[:, None, None, :], 0.0, NEG)

    def _tgt_bias(self, tgt_in):
        t = tgt_in.shape[1]
        causal = np.tril(np.ones((t, t), dtype=bool))
        nonpad = tgt_in != self.pad_id
        allowed = causal[None, None, :, :] & nonpad[:, None, None, :]
        return np.where(allowed, 0.0, NEG)

    def _embed_fwd(self, ids):
        scale = math.sqrt(self.config.model_dim)
        return self.params["embed"][ids] * scale + self.pos[: ids.shape[1]][None, :, :]

    def _embed_bwd(self, grads, ids, dx):
        scale = math.sqrt(self.config.model_dim)
        if "embed" not in grads:
            grads["embed"] = np.zeros_like(self.params["embed"])
        rows = (dx * scale).reshape(-1, dx.shape[-1])
        kernels.scatter_add_rows(grads["embed"], ids.ravel().astype(np.int64), rows)

    # -- encoder / decoder stacks --------------------------------------------

    def _encoder_fwd(self, src, rng):
        p, c = self.params, self.config
        bias = self._src_bias(src)
        x = self._embed_fwd(src)
        x, drop0 = _dropout_fwd(x, c.dropout, rng)
        layer_caches = []
        for i in range(c.layers):
            h1, cln1 = _ln_fwd(x, p[f"enc{i}.ln1.g"], p[f"enc{i}.ln1.b"])
            a, cattn = _attn_fwd(p, f"enc{i}.attn", h1, h1, bias, c.heads)
            a, cd1 = _dropout_fwd(a, c.dropout, rng)
            x = x + a
            h2, cln2 = _ln_fwd(x, p[f"enc{i}.ln2.g"], p[f"enc{i}.ln2.b"])
            ff, cff = _ff_fwd(p, f"enc{i}.ff", h2)
            ff, cd2 = _dropout_fwd(ff, c.dropout, rng)
            x = x + ff
            layer_caches.append((cln1, cattn, cd1, cln2, cff, cd2))
        memory, cln_final = _ln_fwd(x, p["enc.ln.g"], p["enc.ln.b"])
        cache = (drop0, layer_caches, cln_final)
        return memory, bias, cache

    def _encoder_bwd(self, dmemory, src, cache, grads):
        p, c = self.params, self.config
        drop0, layer_caches, cln_final = cache
        dx, dg, db = _ln_bwd(dmemory, cln_final)
        _acc(grads, "enc.ln.g", dg)
        _acc(grads, "enc.ln.b", db)
        for i in reversed(range(c.layers)):
            cln1, cattn, cd1, cln2, cff, cd2 = layer_caches[i]
            dff = _dropout_bwd(dx, cd2)
            dh2 = _ff_bwd(dff, cff, grads, f"enc{i}.ff")
            dxl, dg, db = _ln_bwd(dh2, cln2)
            _acc(grads, f"enc{i}.ln2.g", dg)
            _acc(grads, f"enc{i}.ln2.b", db)
            dx = dx + dxl
            da = _dropout_bwd(dx, cd1)
            dq, dkv = _attn_bwd(da, cattn, grads, f"enc{i}.attn", c.heads)
            dh1 = dq + dkv
            dxl, dg, db = _ln_bwd(dh1, cln1)
            _acc(grads, f"enc{i}.ln1.g", dg)
            _acc(grads, f"enc{i}.ln1.b", db)
            dx = dx + dxl
        dx = _dropout_bwd(dx, drop0)
        self._embed_bwd(grads, src, dx)

    def _decoder_fwd(self, tgt_in, memory, src_bias, rng):
        p, c = self.params, self.config
        self_bias = self._tgt_bias(tgt_in)
        x = self._embed_fwd(tgt_in)
        x, drop0 = _dropout_fwd(x, c.dropout, rng)
        layer_caches = []
        for i in range(c.layers):
            h1, cln1 = _ln_fwd(x, p[f"dec{i}.ln1.g"], p[f"dec{i}.ln1.b"])
            a, cself = _attn_fwd(p, f"dec{i}.self", h1, h1, self_bias, c.heads)
            a, cd1 = _dropout_fwd(a, c.dropout, rng)
            x = x + a
            h2, cln2 = _ln_fwd(x, p[f"dec{i}.ln2.g"], p[f"dec{i}.ln2.b"])
            a, ccross = _attn_fwd(p, f"dec{i}.cross", h2, memory, src_bias, c.heads)
            a, cd2 = _dropout_fwd(a, c.dropout, rng)
            x = x + a
            h3, cln3 = _ln_fwd(x, p[f"dec{i}.ln3.g"], p[f"dec{i}.ln3.b"])
            ff, cff = _ff_fwd(p, f"dec{i}.ff", h3)
            ff, cd3 = _dropout_fwd(ff, c.dropout, rng)
            x = x + ff
            layer_caches.append((cln1, cself, cd1, cln2, ccross, cd2, cln3, cff, cd3))
        out, cln_final = _ln_fwd(x, p["dec.ln.g"], p["dec.ln.b"])
        cache = (drop0, layer_caches, cln_final)
        return out, cache

    def _decoder_bwd(self, dout, tgt_in, cache, grads):
        """Returns the gradient flowing into the encoder memory."""
        p, c = self.params, self.config
        drop0, layer_caches, cln_final = cache
        dx, dg, db = _ln_bwd(dout, cln_final)
        _acc(grads, "dec.ln.g", dg)
        _acc(grads, "dec.ln.b", db)
        dmemory = None
        for i in reversed(range(c.layers)):
            cln1, cself, cd1, cln2, ccross, cd2, cln3, cff, cd3 = layer_caches[i]
            dff = _dropout_bwd(dx, cd3)
            dh3 = _ff_bwd(dff, cff, grads, f"dec{i}.ff")
            dxl, dg, db = _ln_bwd(dh3, cln3)
            _acc(grads, f"dec{i}.ln3.g", dg)
            _acc(grads, f"dec{i}.ln3.b", db)
            dx = dx + dxl
            da = _dropout_bwd(dx, cd2)
            dq, dmem = _attn_bwd(da, ccross, grads, f"dec{i}.cross", c.heads)
            dmemory = dmem if dmemory is None else dmemory + dmem
            dxl, dg, db = _ln_bwd(dq, cln2)
            _acc(grads, f"dec{i}.ln2.g", dg)
            _acc(grads, f"dec{i}.ln2.b", db)
            dx = dx + dxl
            da = _dropout_bwd(dx, cd1)
            dq, dkv = _attn_bwd(da, cself, grads, f"dec{i}.self", c.heads)
            dh1 = dq + dkv
            dxl, dg, db = _ln_bwd(dh1, cln1)
            _acc(grads, f"dec{i}.ln1.g", dg)
            _acc(grads, f"dec{i}.ln1.b", db)
            dx = dx + dxl
        dx = _dropout_bwd(dx, drop0)
        self._embed_bwd(grads, tgt_in, dx)
        return dmemory

    # -- public entry points ---------------------------------------------------

    def forward_backward(self, src, tgt_in, tgt_out, rng=None):
        """One training step's loss and parameter gradients.

        rng enables dropout (training mode); pass None for a deterministic
        evaluation pass. Loss is the mean label-smoothed cross entropy over
        non-pad target positions.
        """
        p, c = self.params, self.config
        memory, src_bias, enc_cache = self._encoder_fwd(src, rng)
        dec_out, dec_cache = self._decoder_fwd(tgt_in, memory, src_bias, rng)
        logits, clogits = _linear_fwd(dec_out, p["out.w"], p["out.b"])
        flat_logits = np.ascontiguousarray(logits.reshape(-1, self.vocab_size))
        loss_sum, count, dflat = kernels.xent_loss_grad(
            flat_logits,
            tgt_out.ravel().astype(np.int64),
            self.pad_id,
            c.label_smoothing,
        )
        if count == 0:
            raise ValueError("batch contains no non-pad target tokens")
        loss = loss_sum / count
        dlogits = (dflat / count).reshape(logits.shape)
        grads = {}
        ddec, dw, db = _linear_bwd(dlogits, clogits)
        _acc(grads, "out.w", dw)
        _acc(grads, "out.b", db)
        dmemory = self._decoder_bwd(ddec, tgt_in, dec_cache, grads)
        if dmemory is None:
            dmemory = np.zeros_like(memory)
        self._encoder_bwd(dmemory, src, enc_cache, grads)
        return loss, count, grads

    def loss_on(self, src, tgt_in, tgt_out):
        """Evaluation loss (sum, token count) without dropout."""
        p, c = self.params, self.config
        memory, src_bias, _ = self._encoder_fwd(src, None)
        dec_out, _ = self._decoder_fwd(tgt_in, memory, src_bias, None)
        logits = dec_out @ p["out.w"] + p["out.b"]
        flat = np.ascontiguousarray(logits.reshape(-1, self.vocab_size))
        loss_sum, count = kernels.xent_loss(
            flat, tgt_out.ravel().astype(np.int64), self.pad_id, c.label_smoothing
        )
        return loss_sum, count

    def encode(self, src):
        memory, src_bias, _ = self._encoder_fwd(src, None)
        return memory, src_bias

    def decode_logits(self, tgt_in, memory, src_bias):
        """Logits over the next token at every prefix position (no dropout)."""
        dec_out, _ = self._decoder_fwd(tgt_in, memory, src_bias, None)
        return dec_out @ self.params["out.w"] + self.params["out.b"]

    def parameter_count(self):
        return sum(int(p.size) for p in self.params.values())

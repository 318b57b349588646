"""Training, fine-tuning and checkpointing for the numpy transformer.

Adam with warmup + inverse-sqrt decay, global-norm gradient clipping, and
best-validation checkpoint selection. A single numpy Generator seeded from
the config drives init, batch shuffling and dropout, so the whole loss trace
is reproducible bit for bit given (seed, config, data) on one backend.
"""

import json

import numpy as np

from ..errors import ArchitectureMismatch, ConfigError, Divergence, EmptyCorpus
from ..fileio import atomic_write
from . import kernels
from .model import DTYPE, ModelConfig, Transformer
from .vocab import Vocab, vocab_from_pairs

CHECKPOINT_FORMAT_VERSION = 1

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.98
ADAM_EPS = 1e-9


class Checkpoint:
    """Self-describing bundle of config, vocabulary and trained weights."""

    def __init__(self, config, params, vocab, training_meta=None):
        self.config = config
        self.params = params
        self.vocab = vocab
        self.training_meta = training_meta or {}

    def build_model(self):
        return Transformer(
            self.config, len(self.vocab), pad_id=self.vocab.pad_id, params=self.params
        )

    def save(self, path):
        meta = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "config": self.config.to_dict(),
            "vocab_tokens": list(self.vocab.tokens),
            "training_meta": self.training_meta,
        }
        arrays = {f"param:{name}": arr for name, arr in self.params.items()}
        with atomic_write(path, mode="wb") as out:
            np.savez(out, meta=json.dumps(meta), **arrays)

    @classmethod
    def load(cls, path):
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            version = meta.get("format_version")
            if version != CHECKPOINT_FORMAT_VERSION:
                raise ConfigError(
                    f"checkpoint {path} has format_version {version!r}, "
                    f"expected {CHECKPOINT_FORMAT_VERSION}"
                )
            params = {
                key[len("param:") :]: np.array(data[key])
                for key in data.files
                if key.startswith("param:")
            }
        return cls(
            config=ModelConfig.from_dict(meta["config"]),
            params=params,
            vocab=Vocab(tokens=tuple(meta["vocab_tokens"])),
            training_meta=meta["training_meta"],
        )


def learning_rate_at(step, config):
    """Linear warmup to the peak rate, then inverse-sqrt decay."""
    warm = config.warmup_steps
    return config.learning_rate * min(step / warm, (warm / step) ** 0.5)


def encode_pairs(pairs, vocab, config):
    """Tokenize and id-encode (source, target) string pairs.

    The source gets a trailing eos; bos/eos framing for the target happens at
    batch time. Sequences longer than config.max_len are a hard error since
    the position table cannot represent them.
    """
    eos = vocab.eos_id
    encoded = []
    for i, (src, tgt) in enumerate(pairs):
        src_ids = vocab.encode(src) + [eos]
        tgt_ids = vocab.encode(tgt)
        if len(src_ids) > config.max_len or len(tgt_ids) + 1 > config.max_len:
            raise ConfigError(
                f"pair {i} exceeds max_len={config.max_len} "
                f"(source {len(src_ids)}, target {len(tgt_ids) + 1} tokens)"
            )
        encoded.append((np.array(src_ids, dtype=np.int64), np.array(tgt_ids, dtype=np.int64)))
    return encoded


def make_batch(encoded, indices, vocab):
    pad, bos, eos = vocab.pad_id, vocab.bos_id, vocab.eos_id
    chosen = [encoded[i] for i in indices]
    s_max = max(len(s) for s, _ in chosen)
    t_max = max(len(t) for _, t in chosen) + 1
    b = len(chosen)
    src = np.full((b, s_max), pad, dtype=np.int64)
    tgt_in = np.full((b, t_max), pad, dtype=np.int64)
    tgt_out = np.full((b, t_max), pad, dtype=np.int64)
    for row, (s, t) in enumerate(chosen):
        src[row, : len(s)] = s
        tgt_in[row, 0] = bos
        tgt_in[row, 1 : len(t) + 1] = t
        tgt_out[row, : len(t)] = t
        tgt_out[row, len(t)] = eos
    return src, tgt_in, tgt_out


def _clip_grads(grads, clip):
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = total**0.5
    if norm > clip:
        scale = clip / norm
        for g in grads.values():
            g *= scale
    return norm


def evaluate_loss(model, encoded, vocab, batch_size):
    """Mean per-token loss over a dataset, deterministic order, no dropout."""
    total, count = 0.0, 0
    for start in range(0, len(encoded), batch_size):
        idx = range(start, min(start + batch_size, len(encoded)))
        src, tgt_in, tgt_out = make_batch(encoded, idx, vocab)
        loss_sum, n = model.loss_on(src, tgt_in, tgt_out)
        total += loss_sum
        count += n
    return total / max(count, 1)


def train(
    config,
    training_pairs,
    validation_pairs=(),
    vocab=None,
    init_params=None,
    log=None,
):
    """Optimize a transformer on (source, target) string pairs.

    Runs at most config.max_steps Adam steps, evaluates validation loss every
    config.validation_interval steps and returns the best-validation
    checkpoint (the final parameters when no validation pairs are given).
    With config.patience > 0, training stops early once that many
    consecutive validations pass without a new best loss.
    """
    config.validate(min_steps=1)
    if not training_pairs:
        raise EmptyCorpus("no training pairs")
    if vocab is None:
        vocab = vocab_from_pairs(training_pairs)
    encoded_train = encode_pairs(training_pairs, vocab, config)
    encoded_valid = encode_pairs(validation_pairs, vocab, config)

    rng = np.random.default_rng(config.seed)
    if init_params is None:
        model = Transformer(config, len(vocab), pad_id=vocab.pad_id, rng=rng)
    else:
        model = Transformer(
            config,
            len(vocab),
            pad_id=vocab.pad_id,
            params={k: v.astype(DTYPE, copy=True) for k, v in init_params.items()},
        )

    adam_m = {k: np.zeros_like(v) for k, v in model.params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in model.params.items()}

    train_trace = []
    val_trace = []
    best_loss = None
    best_params = None
    best_step = None
    stale_validations = 0
    stopped_early = False
    step = 0
    n = len(encoded_train)

    while step < config.max_steps and not stopped_early:
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            if step >= config.max_steps or stopped_early:
                break
            step += 1
            idx = order[start : start + config.batch_size]
            src, tgt_in, tgt_out = make_batch(encoded_train, idx, vocab)
            loss, _, grads = model.forward_backward(src, tgt_in, tgt_out, rng=rng)
            if not np.isfinite(loss):
                raise Divergence(step, loss)
            _clip_grads(grads, config.grad_clip)
            lr = learning_rate_at(step, config)
            for name, p in model.params.items():
                kernels.adam_update(
                    p.ravel(),
                    grads[name].ravel(),
                    adam_m[name].ravel(),
                    adam_v[name].ravel(),
                    lr,
                    ADAM_BETA1,
                    ADAM_BETA2,
                    ADAM_EPS,
                    step,
                )
            train_trace.append(float(loss))
            if step % config.validation_interval == 0 and encoded_valid:
                vloss = evaluate_loss(model, encoded_valid, vocab, config.batch_size)
                val_trace.append([step, float(vloss)])
                if best_loss is None or vloss < best_loss:
                    best_loss = float(vloss)
                    best_step = step
                    best_params = {k: v.copy() for k, v in model.params.items()}
                    stale_validations = 0
                else:
                    stale_validations += 1
                    if config.patience and stale_validations >= config.patience:
                        stopped_early = True
                if log is not None:
                    log(f"step {step}: train {loss:.4f} valid {vloss:.4f}")
            elif log is not None and step % config.validation_interval == 0:
                log(f"step {step}: train {loss:.4f}")

    final_params = best_params if best_params is not None else model.params
    meta = {
        "steps": step,
        "best_step": best_step if best_step is not None else step,
        "best_val_loss": best_loss,
        "final_val_loss": val_trace[-1][1] if val_trace else None,
        "stopped_early": stopped_early,
        "train_loss_trace": train_trace,
        "val_loss_trace": val_trace,
        "backend": kernels.BACKEND,
    }
    return Checkpoint(config=config, params=final_params, vocab=vocab, training_meta=meta)


def fine_tune(base, config_overrides, training_pairs, validation_pairs=(), log=None):
    """Continue optimizing a checkpoint on new data.

    Overrides may adjust schedule parameters but not the architecture. A
    max_steps of 0 is allowed and returns a copy of the base parameters
    unchanged. The base vocabulary is reused; out-of-vocabulary tokens in the
    new data fall back to unk.
    """
    overrides = dict(config_overrides or {})
    for name in ModelConfig.ARCHITECTURE_FIELDS:
        if name in overrides and overrides[name] != getattr(base.config, name):
            raise ArchitectureMismatch(name, getattr(base.config, name), overrides[name])
    config = base.config.override(**overrides)
    config.validate(min_steps=0)
    if not training_pairs:
        raise EmptyCorpus("no fine-tuning pairs")
    if config.max_steps == 0:
        params = {k: v.copy() for k, v in base.params.items()}
        meta = dict(base.training_meta)
        meta.update({"steps": 0, "fine_tuned_from_steps": base.training_meta.get("steps")})
        return Checkpoint(config=config, params=params, vocab=base.vocab, training_meta=meta)
    ckpt = train(
        config,
        training_pairs,
        validation_pairs,
        vocab=base.vocab,
        init_params=base.params,
        log=log,
    )
    ckpt.training_meta["fine_tuned_from_steps"] = base.training_meta.get("steps")
    return ckpt

#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Covers the three hot kernels (Adam update, embedding scatter-add, fused
softmax/cross-entropy) on training-sized shapes, plus one full training
step of the default translator configuration under each backend.

Run:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from tagmt.mt import kernels
from tagmt.mt.model import ModelConfig, Transformer
from tagmt.toy import make_copy_task


def timeit(fn, repeats=20):
    fn()  # warm-up / JIT compile
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def bench_pair(name, np_fn, nb_fn, repeats=20):
    t_np = timeit(np_fn, repeats)
    if nb_fn is None:
        print(f"{name:<26} numpy {t_np * 1e3:8.3f} ms   numba      n/a")
        return
    t_nb = timeit(nb_fn, repeats)
    print(
        f"{name:<26} numpy {t_np * 1e3:8.3f} ms   numba {t_nb * 1e3:8.3f} ms"
        f"   speedup {t_np / t_nb:5.1f}x"
    )


def bench_adam():
    rng = np.random.default_rng(0)
    n = 2_000_000
    g = rng.normal(size=n)

    def run(update):
        p = np.zeros(n)
        m = np.zeros(n)
        v = np.zeros(n)
        update(p, g, m, v, 1e-3, 0.9, 0.98, 1e-9, 3)

    bench_pair(
        "adam_update (2M params)",
        lambda: run(kernels.adam_update_numpy),
        (lambda: run(kernels.adam_update_numba)) if kernels.HAS_NUMBA else None,
    )


def bench_scatter_add():
    rng = np.random.default_rng(1)
    vocab, dim, tokens = 4000, 128, 2048
    ids = rng.integers(0, vocab, size=tokens).astype(np.int64)
    rows = rng.normal(size=(tokens, dim))

    def run(scatter):
        out = np.zeros((vocab, dim))
        scatter(out, ids, rows)

    bench_pair(
        "scatter_add (2048x128)",
        lambda: run(kernels.scatter_add_rows_numpy),
        (lambda: run(kernels.scatter_add_rows_numba)) if kernels.HAS_NUMBA else None,
    )


def bench_xent():
    rng = np.random.default_rng(2)
    n, v = 1024, 4000
    logits = np.ascontiguousarray(rng.normal(size=(n, v)))
    gold = rng.integers(0, v, size=n).astype(np.int64)

    bench_pair(
        "xent_loss_grad (1024x4k)",
        lambda: kernels.xent_loss_grad_numpy(logits, gold, 0, 0.1),
        (lambda: kernels.xent_loss_grad_numba(logits, gold, 0, 0.1))
        if kernels.HAS_NUMBA
        else None,
    )


def bench_training_step():
    from tagmt.mt.train import encode_pairs, make_batch
    from tagmt.mt.vocab import vocab_from_pairs

    pairs = make_copy_task(64, seed=5, vocab_size=2000, min_len=10, max_len=14)
    config = ModelConfig(dropout=0.0, max_len=20)
    vocab = vocab_from_pairs(pairs)
    encoded = encode_pairs(pairs, vocab, config)
    src, tgt_in, tgt_out = make_batch(encoded, range(32), vocab)
    model = Transformer(config, len(vocab), rng=np.random.default_rng(7))

    def step():
        model.forward_backward(src, tgt_in, tgt_out)

    t = timeit(step, repeats=10)
    print(
        f"{'training step (B=32)':<26} {kernels.BACKEND:<5} backend "
        f"{t * 1e3:8.1f} ms/step   ({1 / t:5.1f} steps/s)"
    )


def main():
    print(f"active backend: {kernels.BACKEND} (select with TAGMT_BACKEND=numpy|numba)")
    print("-" * 78)
    bench_adam()
    bench_scatter_add()
    bench_xent()
    bench_training_step()


if __name__ == "__main__":
    main()

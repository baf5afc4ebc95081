"""Throughput comparison of the compiled and pure-Python sampling kernels.

Both kernel twins implement identical operations, so this benchmark is a
pure speed measurement: completions sampled per second from a trained
model, and label resamples per second for the polling baselines.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --corpus-lines 20000 --completions 2000
"""

import argparse
import time

import numpy as np

import lmpoll as L
from lmpoll.kernels import HAVE_C, _pykernels

if HAVE_C:
    from lmpoll.kernels import _ckernels


def build_model(corpus_lines: int, seed: int) -> L.NgramModel:
    spec = L.SynthSpec(
        n=corpus_lines * 2,
        star_weights=(0.12, 0.10, 0.14, 0.24, 0.40),
        positivity_by_star=(0.1, 0.3, 0.5, 0.7, 0.9),
        tokens_min=6,
        tokens_max=14,
        seed=seed,
    )
    population = L.synthesize_population(
        spec,
        list(L.builtin_positive().words),
        list(L.builtin_negative().words),
        list(L.builtin_filler().words),
    )
    corpus = L.build_review_corpus(population, corpus_lines, seed=seed + 1)
    return L.NgramModel.train(corpus.lines, order=5, alpha=0.001)


def time_completions(mod, model: L.NgramModel, n: int, temperature: float) -> float:
    handle = mod.make_model(model.tables, model.base,
                            len(model.vocab), model.eol_id)
    tail = model._prompt_tail("review:")
    start = time.perf_counter()
    tokens = 0
    for seed in range(n):
        tokens += len(mod.sample_completion(handle, tail, 256, model.alpha,
                                            temperature, seed))
    elapsed = time.perf_counter() - start
    return n / elapsed, tokens / elapsed


def time_resample(mod, population: int, positives: int, k: int,
                  repeats: int) -> float:
    labels = np.zeros(population, dtype=np.uint8)
    labels[:positives] = 1
    start = time.perf_counter()
    mod.resample_pos_counts(labels, k, repeats, 12345, False)
    elapsed = time.perf_counter() - start
    return repeats / elapsed


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus-lines", type=int, default=10_000)
    ap.add_argument("--completions", type=int, default=1_000)
    ap.add_argument("--temperature", type=float, default=0.8)
    ap.add_argument("--resample-population", type=int, default=10_000)
    ap.add_argument("--resample-repeats", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=20260819)
    args = ap.parse_args()

    print(f"training order-5 model on {args.corpus_lines} review lines ...")
    model = build_model(args.corpus_lines, args.seed)
    print(f"vocabulary {len(model.vocab)} tokens\n")

    impls = [("python", _pykernels)]
    if HAVE_C:
        impls.insert(0, ("c", _ckernels))
    else:
        print("compiled kernels unavailable; timing the pure path only\n")

    rows = []
    for name, mod in impls:
        comp_rate, tok_rate = time_completions(
            mod, model, args.completions, args.temperature)
        res_rate = time_resample(
            mod, args.resample_population, args.resample_population // 3,
            26, args.resample_repeats)
        rows.append((name, comp_rate, tok_rate, res_rate))

    header = (f"{'kernel':<8} {'completions/s':>14} {'tokens/s':>12} "
              f"{'resamples/s':>13}")
    print(header)
    print("-" * len(header))
    for name, comp_rate, tok_rate, res_rate in rows:
        print(f"{name:<8} {comp_rate:>14.0f} {tok_rate:>12.0f} "
              f"{res_rate:>13.0f}")
    if len(rows) == 2:
        print(f"\nspeedup (c over python): completions x{rows[0][1] / rows[1][1]:.1f}, "
              f"resamples x{rows[0][3] / rows[1][3]:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Pure-Python/numpy kernels.

These are the reference implementations of the hot inner loops. The compiled
variants in ``_ckernels`` must match them bit-for-bit: integer results are
exact by construction, and float results stay identical because both sides
perform the same libm operations in the same order on IEEE-754 doubles.

Anything float-bearing that could be reduced in more than one order (means,
variances) is deliberately *not* done here; kernels return per-item integers
or token ids and the callers reduce once, in Python, on both paths.
"""

from __future__ import annotations

import bisect

import numpy as np

IMPL = "python"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0
# resampling scratch cap: int64 cells for one chunk of index rows (~128 MB)
_IDX_BUDGET = 16_000_000


def _mix64(z: int) -> int:
    z &= _MASK64
    z = (z ^ (z >> 30)) * _C1 & _MASK64
    z = (z ^ (z >> 27)) * _C2 & _MASK64
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_C1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_C2)
    z ^= z >> np.uint64(31)
    return z


def mix64(z: int) -> int:
    """SplitMix64 finalizer (exposed for parity tests)."""
    return _mix64(z)


def resample_pos_counts(
    labels: np.ndarray,
    k: int,
    repeats: int,
    seed: int,
    with_replacement: bool,
) -> np.ndarray:
    """Positive-label counts over `repeats` seeded resamples of size k.

    Repeat r draws from the SplitMix64 stream seeded with the r-th child of
    `seed`. Without replacement uses a partial Fisher-Yates pass; with
    replacement uses k independent modulo draws. Vectorized across repeats,
    but draw-for-draw identical to the scalar compiled loop.
    """
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    n = labels.shape[0]
    states = _mix64_vec(
        np.uint64(seed) ^ (np.arange(1, repeats + 1, dtype=np.uint64) * np.uint64(_GOLDEN))
    )
    counts = np.zeros(repeats, dtype=np.int64)
    if with_replacement:
        for _ in range(k):
            states += np.uint64(_GOLDEN)
            j = _mix64_vec(states) % np.uint64(n)
            counts += labels[j.astype(np.int64)]
        return counts
    # each repeat only consumes its own child stream, so chunking the
    # repeats bounds the scratch index matrix without changing any draw
    chunk = max(1, _IDX_BUDGET // max(n, 1))
    for lo in range(0, repeats, chunk):
        hi = min(lo + chunk, repeats)
        st = states[lo:hi]
        rows = np.arange(hi - lo)
        idx = np.tile(np.arange(n, dtype=np.int64), (hi - lo, 1))
        for t in range(k):
            st += np.uint64(_GOLDEN)
            j = (np.int64(t) + (_mix64_vec(st) % np.uint64(n - t)).astype(np.int64))
            picked = idx[rows, j]
            idx[rows, j] = idx[rows, t]
            idx[rows, t] = picked
            counts[lo:hi] += labels[picked]
    return counts


def _lookup(keys, key: int) -> int:
    """Index of `key` in the sorted key container, or -1."""
    if isinstance(keys, list):
        pos = bisect.bisect_left(keys, key)
        if pos < len(keys) and keys[pos] == key:
            return pos
        return -1
    pos = int(np.searchsorted(keys, key))
    if pos < keys.shape[0] and int(keys[pos]) == key:
        return pos
    return -1


def make_model(orders: list, base: int, vocab_size: int, eol_id: int):
    """Wrap per-order count tables into a sampler handle.

    `orders` is a list of (context_len, keys, offsets, tokens, counts,
    totals) tuples sorted by context_len descending and ending with the
    length-0 table.
    """
    return (orders, base, vocab_size, eol_id)


def sample_completion(
    handle,
    prompt_tail: list[int],
    max_tokens: int,
    alpha: float,
    temperature: float,
    seed: int,
) -> list[int]:
    """Generate one completion as a list of token ids.

    The longest context whose key is present supplies the next-token
    distribution; additive smoothing spreads `alpha` over the whole
    vocabulary, so unseen tokens form a single uniform bucket. Sampling
    follows p(t)**(1/temperature) renormalized; temperature 0 is argmax
    with ties broken toward the smallest token id.
    """
    orders, base, vocab_size, eol_id = handle
    k_minus_1 = len(prompt_tail)
    window = list(prompt_tail)
    out: list[int] = []
    state = seed
    for _ in range(max_tokens):
        token = -1
        for ctx_len, keys, offsets, tokens, counts, _totals in orders:
            key = 0
            for j in range(k_minus_1 - ctx_len, k_minus_1):
                key = key * base + window[j]
            slot = _lookup(keys, key)
            if slot < 0:
                continue
            start = int(offsets[slot])
            end = int(offsets[slot + 1])
            token, state = _draw(
                tokens, counts, start, end,
                alpha, temperature, vocab_size, state,
            )
            break
        if token == eol_id:
            break
        out.append(token)
        if k_minus_1:
            window.pop(0)
            window.append(token)
    return out


def _draw(tokens, counts, start, end, alpha, temperature, vocab_size, state):
    n_seen = end - start
    if temperature == 0.0:
        best = -1
        best_count = -1
        for i in range(start, end):
            c = int(counts[i])
            if c > best_count:
                best_count = c
                best = int(tokens[i])
        return best, state
    one_pass = temperature == 1.0
    inv_t = 0.0 if one_pass else 1.0 / temperature
    # weights are scaled by the slot maximum before powering so that
    # count ** (1/T) can never overflow for small temperatures; the scale
    # cancels in the ratios, leaving the distribution unchanged
    max_w = 1.0
    if not one_pass:
        for i in range(start, end):
            base_w = float(counts[i]) + alpha
            if base_w > max_w:
                max_w = base_w
    weight_sum = 0.0
    for i in range(start, end):
        base_w = float(counts[i]) + alpha
        weight_sum += base_w if one_pass else (base_w / max_w) ** inv_t
    unseen_w = alpha if one_pass else (alpha / max_w) ** inv_t
    n_unseen = vocab_size - n_seen
    weight_sum += n_unseen * unseen_w
    state = (state + _GOLDEN) & _MASK64
    x = ((_mix64(state) >> 11) * _INV_2_53) * weight_sum
    cum = 0.0
    for i in range(start, end):
        base_w = float(counts[i]) + alpha
        cum += base_w if one_pass else (base_w / max_w) ** inv_t
        if x < cum:
            return int(tokens[i]), state
    if n_unseen == 0 or unseen_w == 0.0:
        # float spill past the last seen token with an empty/weightless bucket
        return int(tokens[end - 1]), state
    while True:
        state = (state + _GOLDEN) & _MASK64
        cand = _mix64(state) % vocab_size
        pos = int(np.searchsorted(tokens[start:end], cand)) if not isinstance(tokens, list) \
            else bisect.bisect_left(tokens, cand, start, end) - start
        if pos >= n_seen or int(tokens[start + pos]) != cand:
            return cand, state

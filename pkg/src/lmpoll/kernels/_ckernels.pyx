# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Must match ``_pykernels`` bit-for-bit; the parity tests
drive both implementations over the same inputs and compare raw outputs."""

from libc.math cimport pow as c_pow
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPL = "c"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t lmp_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long lmp_mix64(unsigned long long z) nogil

cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z):
    """SplitMix64 finalizer (exposed for parity tests)."""
    return int(lmp_mix64(<unsigned long long> (z & 0xFFFFFFFFFFFFFFFF)))


def resample_pos_counts(labels, long long k, long long repeats, seed, bint with_replacement):
    """Positive-label counts over `repeats` seeded resamples of size k."""
    cdef const unsigned char[::1] lab = np.ascontiguousarray(labels, dtype=np.uint8)
    cdef long long n = lab.shape[0]
    cdef cnp.ndarray out_arr = np.zeros(repeats, dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef unsigned long long base_seed = <unsigned long long> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long state, z
    cdef long long r, t, j, c, tmp
    cdef long long* idx = NULL
    if not with_replacement:
        idx = <long long*> malloc(n * sizeof(long long))
        if idx == NULL:
            raise MemoryError()
    try:
        with nogil:
            for r in range(repeats):
                state = lmp_mix64(base_seed ^ ((<unsigned long long> (r + 1)) * GOLDEN))
                c = 0
                if with_replacement:
                    for t in range(k):
                        state += GOLDEN
                        z = lmp_mix64(state)
                        c += lab[<long long> (z % (<unsigned long long> n))]
                else:
                    for t in range(n):
                        idx[t] = t
                    for t in range(k):
                        state += GOLDEN
                        z = lmp_mix64(state)
                        j = t + <long long> (z % (<unsigned long long> (n - t)))
                        tmp = idx[t]
                        idx[t] = idx[j]
                        idx[j] = tmp
                        c += lab[idx[t]]
                out[r] = c
    finally:
        if idx != NULL:
            free(idx)
    return out_arr


cdef class CModel:
    """Per-order count tables flattened into C pointer arrays."""

    cdef long long n_orders
    cdef long long base
    cdef long long vocab_size
    cdef long long eol_id
    cdef long long* ctx_lens
    cdef long long* n_keys
    cdef long long** keys
    cdef long long** offsets
    cdef int** tokens
    cdef long long** counts
    cdef object _refs  # keep numpy arrays alive

    def __cinit__(self, orders, long long base, long long vocab_size, long long eol_id):
        cdef long long m = len(orders)
        self.n_orders = m
        self.base = base
        self.vocab_size = vocab_size
        self.eol_id = eol_id
        self.ctx_lens = <long long*> malloc(m * sizeof(long long))
        self.n_keys = <long long*> malloc(m * sizeof(long long))
        self.keys = <long long**> malloc(m * sizeof(long long*))
        self.offsets = <long long**> malloc(m * sizeof(long long*))
        self.tokens = <int**> malloc(m * sizeof(int*))
        self.counts = <long long**> malloc(m * sizeof(long long*))
        if (self.ctx_lens == NULL or self.n_keys == NULL or self.keys == NULL
                or self.offsets == NULL or self.tokens == NULL or self.counts == NULL):
            raise MemoryError()
        self._refs = []
        cdef long long i
        cdef cnp.ndarray a_keys, a_off, a_tok, a_cnt
        for i in range(m):
            ctx_len, keys, offsets, tokens, counts, _totals = orders[i]
            a_keys = np.ascontiguousarray(keys, dtype=np.int64)
            a_off = np.ascontiguousarray(offsets, dtype=np.int64)
            a_tok = np.ascontiguousarray(tokens, dtype=np.int32)
            a_cnt = np.ascontiguousarray(counts, dtype=np.int64)
            self._refs.extend([a_keys, a_off, a_tok, a_cnt])
            self.ctx_lens[i] = <long long> ctx_len
            self.n_keys[i] = a_keys.shape[0]
            self.keys[i] = <long long*> cnp.PyArray_DATA(a_keys)
            self.offsets[i] = <long long*> cnp.PyArray_DATA(a_off)
            self.tokens[i] = <int*> cnp.PyArray_DATA(a_tok)
            self.counts[i] = <long long*> cnp.PyArray_DATA(a_cnt)

    def __dealloc__(self):
        free(self.ctx_lens)
        free(self.n_keys)
        free(self.keys)
        free(self.offsets)
        free(self.tokens)
        free(self.counts)


cdef long long _bisect(const long long* arr, long long n, long long key) nogil:
    cdef long long lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef long long _bisect_i32(const int* arr, long long n, int key) nogil:
    cdef long long lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def make_model(orders, long long base, long long vocab_size, long long eol_id):
    """Wrap per-order count tables into a sampler handle (compiled twin)."""
    return CModel(orders, base, vocab_size, eol_id)


def sample_completion(CModel model, prompt_tail, long long max_tokens,
                      double alpha, double temperature, seed):
    """Generate one completion as a list of token ids (compiled twin)."""
    cdef cnp.ndarray tail_arr = np.ascontiguousarray(prompt_tail, dtype=np.int64)
    cdef long long k_minus_1 = tail_arr.shape[0]
    cdef long long* window = <long long*> malloc((k_minus_1 if k_minus_1 else 1) * sizeof(long long))
    cdef int* out = <int*> malloc((max_tokens if max_tokens else 1) * sizeof(int))
    if window == NULL or out == NULL:
        free(window)
        free(out)
        raise MemoryError()
    cdef long long i
    for i in range(k_minus_1):
        window[i] = (<long long*> cnp.PyArray_DATA(tail_arr))[i]
    cdef unsigned long long state = <unsigned long long> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef long long n_out = 0
    cdef long long t, oi, j, key, slot, start, end, token
    cdef long long n_seen, n_unseen, cand_pos
    cdef double inv_t, weight_sum, unseen_w, base_w, x, cum, max_w
    cdef bint one_pass
    cdef long long best, best_count, c
    cdef unsigned long long z
    cdef int cand
    with nogil:
        for t in range(max_tokens):
            token = -1
            for oi in range(model.n_orders):
                key = 0
                for j in range(k_minus_1 - model.ctx_lens[oi], k_minus_1):
                    key = key * model.base + window[j]
                slot = _bisect(model.keys[oi], model.n_keys[oi], key)
                if slot >= model.n_keys[oi] or model.keys[oi][slot] != key:
                    continue
                start = model.offsets[oi][slot]
                end = model.offsets[oi][slot + 1]
                n_seen = end - start
                if temperature == 0.0:
                    best = -1
                    best_count = -1
                    for i in range(start, end):
                        c = model.counts[oi][i]
                        if c > best_count:
                            best_count = c
                            best = model.tokens[oi][i]
                    token = best
                    break
                one_pass = temperature == 1.0
                inv_t = 0.0 if one_pass else 1.0 / temperature
                # weights are scaled by the slot maximum before powering so
                # that count ** (1/T) can never overflow for small
                # temperatures; the scale cancels in the ratios, leaving the
                # distribution unchanged
                max_w = 1.0
                if not one_pass:
                    for i in range(start, end):
                        base_w = (<double> model.counts[oi][i]) + alpha
                        if base_w > max_w:
                            max_w = base_w
                weight_sum = 0.0
                for i in range(start, end):
                    base_w = (<double> model.counts[oi][i]) + alpha
                    weight_sum += base_w if one_pass else c_pow(base_w / max_w, inv_t)
                unseen_w = alpha if one_pass else c_pow(alpha / max_w, inv_t)
                n_unseen = model.vocab_size - n_seen
                weight_sum += (<double> n_unseen) * unseen_w
                state += GOLDEN
                x = ((<double> (lmp_mix64(state) >> 11)) * INV_2_53) * weight_sum
                cum = 0.0
                token = -2
                for i in range(start, end):
                    base_w = (<double> model.counts[oi][i]) + alpha
                    cum += base_w if one_pass else c_pow(base_w / max_w, inv_t)
                    if x < cum:
                        token = model.tokens[oi][i]
                        break
                if token == -2:
                    if n_unseen == 0 or unseen_w == 0.0:
                        token = model.tokens[oi][end - 1]
                    else:
                        while True:
                            state += GOLDEN
                            cand = <int> (lmp_mix64(state) % (<unsigned long long> model.vocab_size))
                            cand_pos = _bisect_i32(model.tokens[oi] + start, n_seen, cand)
                            if cand_pos >= n_seen or model.tokens[oi][start + cand_pos] != cand:
                                token = cand
                                break
                break
            if token == model.eol_id:
                break
            out[n_out] = <int> token
            n_out += 1
            for j in range(k_minus_1 - 1):
                window[j] = window[j + 1]
            if k_minus_1:
                window[k_minus_1 - 1] = token
    result = [out[i] for i in range(n_out)]
    free(window)
    free(out)
    return result

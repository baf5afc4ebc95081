"""Generation backends.

Three interchangeable ways to answer "given this prompt, give me n
completions": a count-based n-gram model trained on a corpus (the local
stand-in for a fine-tuned neural LM: fast, seeded, and it memorizes its
training lines the way an overfit LM does), a replay backend that serves
verbatim lines from a review set (the ground-truth control), and a remote
backend speaking the wire protocol of a model server.

All randomness is SplitMix64: completion i of a request uses the i-th child
stream of the request seed, so any single completion is reproducible in
isolation and results are independent of batching.
"""

from __future__ import annotations

import base64
import bisect
import gzip
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import requests

from . import kernels
from .corpus import Corpus, review_line
from .errors import ArgumentError, BackendError, DataError
from .ingest import ReviewSet
from .rng import check_seed, child_seed

BOS_TOKEN = "<BOS>"
EOL_TOKEN = "<EOL>"

_MODEL_MAGIC = "lmpoll-ngram/1"


@dataclass(frozen=True)
class GenerationRequest:
    """One polling request: n seeded completions of a prompt."""

    prompt: str
    n: int
    seed: int
    max_tokens: int = 256
    temperature: float = 1.0

    def __post_init__(self):
        if "\n" in self.prompt or "\r" in self.prompt:
            raise ArgumentError("prompt must be a single line")
        if not isinstance(self.n, int) or self.n < 1:
            raise ArgumentError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.max_tokens, int) or self.max_tokens < 1:
            raise ArgumentError(
                f"max_tokens must be a positive integer, got {self.max_tokens!r}"
            )
        if not self.temperature >= 0.0:
            raise ArgumentError(
                f"temperature must be >= 0, got {self.temperature!r}"
            )
        check_seed(self.seed)

    def to_wire(self) -> dict:
        return {
            "prompt": self.prompt,
            "n": self.n,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
            "seed": self.seed,
        }


class GenerationBackend:
    """Interface: `generate` returns exactly request.n completion strings.

    Completions are the characters to append to the prompt, except for
    backends with `emits_full_records` set, whose outputs are complete
    record lines and whose prompt acts as a content filter.
    """

    emits_full_records = False

    def name(self) -> str:
        raise NotImplementedError

    def generate(self, request: GenerationRequest) -> list[str]:
        raise NotImplementedError


def _b64(arr: np.ndarray, dtype: str) -> str:
    return base64.b64encode(np.ascontiguousarray(arr.astype(dtype)).tobytes()).decode("ascii")


def _unb64(text: str, dtype: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text.encode("ascii")), dtype=dtype).copy()


class NgramModel(GenerationBackend):
    """Order-k n-gram LM with additive smoothing and longest-context backoff.

    Tokens are whitespace-separated; each training line is padded with
    (order-1) BOS markers and closed with an EOL marker. The next-token
    distribution conditions on the longest context suffix that occurred in
    training (falling back one token at a time, down to the unigram table),
    then smooths additively: p(t | ctx) = (count + alpha) / (total + alpha*V)
    over the full vocabulary of size V.

    Sampling raises the distribution to 1/temperature and renormalizes;
    temperature 0 is argmax with ties broken toward the lexicographically
    smallest token (token ids are assigned in sorted-vocabulary order, so
    the smallest id wins).
    """

    def __init__(self, order, alpha, vocab, tables):
        self.order = order
        self.alpha = alpha
        self.vocab = list(vocab)
        self.token_to_id = {t: i for i, t in enumerate(self.vocab)}
        self.tables = tables  # [(ctx_len, keys, offsets, tokens, counts, totals)] desc
        self.base = len(self.vocab) + 1  # digit len(vocab) is the unknown sentinel
        self.bos_id = self.token_to_id[BOS_TOKEN]
        self.eol_id = self.token_to_id[EOL_TOKEN]
        self.fits_int64 = self.base ** self.order < 2 ** 63
        self._handle = None
        self._sampler = None

    # -- training ---------------------------------------------------------

    @classmethod
    def train(cls, corpus: Corpus | Iterable[str], order: int = 5,
              alpha: float = 0.001, force_slow_path: bool = False) -> "NgramModel":
        if not isinstance(order, int) or order < 2:
            raise ArgumentError(f"order must be an integer >= 2, got {order!r}")
        if not alpha >= 0.0:
            raise ArgumentError(f"alpha must be >= 0, got {alpha!r}")
        lines = corpus.lines if isinstance(corpus, Corpus) else list(corpus)
        token_lines = [ln.split() for ln in lines if ln.strip()]
        if not token_lines:
            raise ArgumentError("training corpus is empty")
        vocab = sorted({t for toks in token_lines for t in toks} | {BOS_TOKEN, EOL_TOKEN})
        t2i = {t: i for i, t in enumerate(vocab)}
        base = len(vocab) + 1
        if base ** order < 2 ** 63 and not force_slow_path:
            tables = cls._count_fast(token_lines, t2i, order, base)
        else:
            tables = cls._count_slow(token_lines, t2i, order, base)
        return cls(order, alpha, vocab, tables)

    @staticmethod
    def _count_fast(token_lines, t2i, order, base):
        """Vectorized counting: one sliding-window pass, grouped with np.unique."""
        bos = t2i[BOS_TOKEN]
        eol = t2i[EOL_TOKEN]
        pad = [bos] * (order - 1)
        flat: list[int] = []
        line_of: list[int] = []
        for li, toks in enumerate(token_lines):
            ids = pad + [t2i[t] for t in toks] + [eol]
            flat.extend(ids)
            line_of.extend([li] * len(ids))
        big = np.asarray(flat, dtype=np.int64)
        lines_arr = np.asarray(line_of, dtype=np.int64)
        win = np.lib.stride_tricks.sliding_window_view(big, order)
        valid = lines_arr[: win.shape[0]] == lines_arr[order - 1:]
        win = np.ascontiguousarray(win[valid])
        nxt = win[:, order - 1]
        tables = []
        for ctx_len in range(order - 1, -1, -1):
            ctx_cols = win[:, order - 1 - ctx_len: order - 1]
            powers = np.asarray(
                [base ** p for p in range(ctx_len - 1, -1, -1)], dtype=np.int64
            )
            keys_all = ctx_cols @ powers if ctx_len else np.zeros(len(win), dtype=np.int64)
            codes = keys_all * np.int64(base) + nxt
            uniq, counts = np.unique(codes, return_counts=True)
            ctx_keys_all = uniq // np.int64(base)
            tokens = (uniq % np.int64(base)).astype(np.int32)
            keys, starts = np.unique(ctx_keys_all, return_index=True)
            offsets = np.append(starts, len(uniq)).astype(np.int64)
            totals = np.add.reduceat(counts, starts).astype(np.int64)
            tables.append((ctx_len, keys.astype(np.int64), offsets,
                           tokens, counts.astype(np.int64), totals))
        return tables

    @staticmethod
    def _count_slow(token_lines, t2i, order, base):
        """Dict-based counting; handles vocabularies too large for int64 keys."""
        bos = t2i[BOS_TOKEN]
        eol = t2i[EOL_TOKEN]
        by_order: list[dict] = [dict() for _ in range(order)]
        for toks in token_lines:
            padded = [bos] * (order - 1) + [t2i[t] for t in toks] + [eol]
            for pos in range(order - 1, len(padded)):
                nxt = padded[pos]
                for ctx_len in range(order):
                    key = 0
                    for j in range(pos - ctx_len, pos):
                        key = key * base + padded[j]
                    slots = by_order[ctx_len].setdefault(key, {})
                    slots[nxt] = slots.get(nxt, 0) + 1
        tables = []
        for ctx_len in range(order - 1, -1, -1):
            table = by_order[ctx_len]
            keys_sorted = sorted(table)
            offsets = [0]
            tokens: list[int] = []
            counts: list[int] = []
            totals: list[int] = []
            for key in keys_sorted:
                slots = table[key]
                toks_sorted = sorted(slots)
                tokens.extend(toks_sorted)
                counts.extend(slots[t] for t in toks_sorted)
                totals.append(sum(slots.values()))
                offsets.append(len(tokens))
            fits = not keys_sorted or keys_sorted[-1] < 2 ** 63
            keys_out = (np.asarray(keys_sorted, dtype=np.int64)
                        if fits else list(keys_sorted))
            tables.append((
                ctx_len,
                keys_out,
                np.asarray(offsets, dtype=np.int64),
                np.asarray(tokens, dtype=np.int32),
                np.asarray(counts, dtype=np.int64),
                np.asarray(totals, dtype=np.int64),
            ))
        return tables

    # -- inference --------------------------------------------------------

    def _get_sampler(self):
        if self._sampler is None:
            if self.fits_int64:
                mod = kernels
            else:
                mod = kernels.pure_python
            self._handle = mod.make_model(
                self.tables, self.base, len(self.vocab), self.eol_id
            )
            self._sampler = mod.sample_completion
        return self._sampler

    def _context_ids(self, tokens) -> list[int]:
        # tokens the model has never seen carry no usable statistics, so
        # they are dropped from the conditioning window; the surviving
        # known tokens still anchor the continuation
        ids = [self.token_to_id[t] for t in tokens if t in self.token_to_id]
        padded = [self.bos_id] * (self.order - 1) + ids
        return padded[len(padded) - (self.order - 1):]

    def _prompt_tail(self, prompt: str) -> list[int]:
        return self._context_ids(prompt.split())

    def name(self) -> str:
        return f"ngram(order={self.order}, alpha={self.alpha})"

    def generate(self, request: GenerationRequest) -> list[str]:
        sampler = self._get_sampler()
        tail = self._prompt_tail(request.prompt)
        join_space = bool(request.prompt) and not request.prompt.endswith(" ")
        out = []
        for i in range(request.n):
            ids = sampler(self._handle, tail, request.max_tokens,
                          self.alpha, request.temperature,
                          child_seed(request.seed, i))
            text = " ".join(self.vocab[t] for t in ids)
            if text and join_space:
                text = " " + text
            out.append(text)
        return out

    def next_distribution(self, context_tokens: list[str]) -> dict[str, float]:
        """Smoothed next-token distribution after backoff (diagnostic API).

        Walks the same longest-seen-context rule the sampler uses and
        returns p(t | ctx) for every vocabulary token.
        """
        window = self._context_ids(context_tokens)
        for ctx_len, keys, offsets, tokens, counts, totals in self.tables:
            key = 0
            for j in range(len(window) - ctx_len, len(window)):
                key = key * self.base + window[j]
            if isinstance(keys, list):
                pos = bisect.bisect_left(keys, key)
                found = pos < len(keys) and keys[pos] == key
            else:
                pos = int(np.searchsorted(keys, key))
                found = pos < len(keys) and int(keys[pos]) == key
            if not found:
                continue
            start, end = int(offsets[pos]), int(offsets[pos + 1])
            total = int(totals[pos])
            denom = total + self.alpha * len(self.vocab)
            dist = {t: self.alpha / denom for t in self.vocab}
            for i in range(start, end):
                dist[self.vocab[int(tokens[i])]] = (int(counts[i]) + self.alpha) / denom
            return dist
        raise DataError("no context table matched; model tables are corrupt")

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write a gzip'd JSONL model file (byte-stable for a given model)."""
        path = Path(path)
        with path.open("wb") as fh:
            with gzip.GzipFile(filename="", mode="wb", fileobj=fh, mtime=0) as gz:
                header = {
                    "format": _MODEL_MAGIC,
                    "order": self.order,
                    "alpha": self.alpha,
                    "vocab": self.vocab,
                }
                gz.write((json.dumps(header, ensure_ascii=False) + "\n").encode("utf-8"))
                for ctx_len, keys, offsets, tokens, counts, totals in self.tables:
                    if isinstance(keys, list):
                        keys_field: object = {"list": keys}
                    else:
                        keys_field = {"b64": _b64(keys, "<i8")}
                    rec = {
                        "ctx_len": ctx_len,
                        "keys": keys_field,
                        "offsets": _b64(offsets, "<i8"),
                        "tokens": _b64(tokens, "<i4"),
                        "counts": _b64(counts, "<i8"),
                        "totals": _b64(totals, "<i8"),
                    }
                    gz.write((json.dumps(rec) + "\n").encode("utf-8"))

    @classmethod
    def load(cls, path: str | Path) -> "NgramModel":
        path = Path(path)
        try:
            with gzip.open(path, "rt", encoding="utf-8") as gz:
                lines = gz.read().splitlines()
        except (OSError, EOFError) as exc:
            raise DataError(f"{path}: not a readable model file ({exc})") from exc
        if not lines:
            raise DataError(f"{path}: empty model file")
        header = json.loads(lines[0])
        if header.get("format") != _MODEL_MAGIC:
            raise DataError(f"{path}: unrecognized model format")
        tables = []
        for line in lines[1:]:
            rec = json.loads(line)
            kf = rec["keys"]
            keys = kf["list"] if "list" in kf else _unb64(kf["b64"], "<i8")
            tables.append((
                int(rec["ctx_len"]),
                keys,
                _unb64(rec["offsets"], "<i8"),
                _unb64(rec["tokens"], "<i4"),
                _unb64(rec["counts"], "<i8"),
                _unb64(rec["totals"], "<i8"),
            ))
        expected = list(range(int(header["order"]) - 1, -1, -1))
        if [t[0] for t in tables] != expected:
            raise DataError(f"{path}: model tables incomplete")
        return cls(int(header["order"]), float(header["alpha"]),
                   header["vocab"], tables)


def train_ngram(corpus: Corpus | Iterable[str], order: int = 5,
                smoothing_alpha: float = 0.001) -> NgramModel:
    """Count-train an n-gram model on a corpus. See NgramModel.train."""
    return NgramModel.train(corpus, order=order, alpha=smoothing_alpha)


def sample(model: NgramModel, request: GenerationRequest) -> list[str]:
    """Draw request.n seeded completions from a trained model."""
    return model.generate(request)


class ReplayBackend(GenerationBackend):
    """Serves verbatim record lines drawn from a review set.

    The prompt is a case-insensitive content filter: only reviews whose
    text contains it are eligible (empty prompt means all). Draws are
    seeded and with replacement, one child stream pick per completion.
    """

    emits_full_records = True

    def __init__(self, review_set: ReviewSet):
        if not len(review_set):
            raise ArgumentError("replay backend needs a non-empty review set")
        self._reviews = list(review_set.reviews)

    def name(self) -> str:
        return f"replay({len(self._reviews)} reviews)"

    def generate(self, request: GenerationRequest) -> list[str]:
        needle = request.prompt.strip().lower()
        if needle:
            pool = [r for r in self._reviews if needle in r.text.lower()]
        else:
            pool = self._reviews
        if not pool:
            raise BackendError(
                f"no reviews match replay filter {request.prompt!r}"
            )
        return [
            review_line(pool[child_seed(request.seed, i) % len(pool)])
            for i in range(request.n)
        ]


def replay_generate(review_set: ReviewSet, request: GenerationRequest) -> list[str]:
    """Replay request.n seeded ground-truth records from a review set.

    The request prompt acts as a case-insensitive content filter; see
    ReplayBackend.
    """
    return ReplayBackend(review_set).generate(request)


def remote_generate(url: str, request: GenerationRequest,
                    timeout: float = 60.0, retries: int = 3) -> list[str]:
    """POST the request to `url`/generate and return the completions.

    Retries transient failures (connection errors, timeouts, HTTP 503) with
    a short backoff; anything else, or a malformed response, raises
    BackendError.
    """
    endpoint = url.rstrip("/") + "/generate"
    last = "no attempts made"
    for attempt in range(max(1, retries)):
        if attempt:
            time.sleep(0.2 * attempt)
        try:
            resp = requests.post(endpoint, json=request.to_wire(), timeout=timeout)
        except requests.RequestException as exc:
            last = f"{type(exc).__name__}: {exc}"
            continue
        if resp.status_code == 503:
            last = "HTTP 503 (no model loaded)"
            continue
        if resp.status_code != 200:
            raise BackendError(
                f"generate failed: HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            body = resp.json()
            texts = body["texts"]
        except (ValueError, KeyError, TypeError) as exc:
            raise BackendError(f"protocol violation in response: {exc}") from exc
        if not isinstance(texts, list) or len(texts) != request.n \
                or not all(isinstance(t, str) for t in texts):
            raise BackendError(
                f"protocol violation: expected {request.n} text strings"
            )
        return texts
    raise BackendError(f"backend unreachable after {retries} attempts ({last})")


def remote_health(url: str, timeout: float = 10.0) -> dict:
    """GET `url`/health; returns the status object or raises BackendError."""
    try:
        resp = requests.get(url.rstrip("/") + "/health", timeout=timeout)
    except requests.RequestException as exc:
        raise BackendError(f"health check failed: {exc}") from exc
    if resp.status_code != 200:
        raise BackendError(f"health check failed: HTTP {resp.status_code}")
    try:
        return resp.json()
    except ValueError as exc:
        raise BackendError(f"health check returned non-JSON: {exc}") from exc


class RemoteBackend(GenerationBackend):
    """Wire-protocol client presented as a local backend."""

    def __init__(self, url: str, timeout: float = 60.0, retries: int = 3):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self._name = f"remote({url})"
        try:
            info = remote_health(url, timeout=min(timeout, 5.0))
            if isinstance(info, dict) and info.get("model"):
                self._name = f"remote({info['model']})"
        except BackendError:
            pass  # name stays URL-based; generation will surface real failures

    def name(self) -> str:
        return self._name

    def generate(self, request: GenerationRequest) -> list[str]:
        return remote_generate(self.url, request,
                               timeout=self.timeout, retries=self.retries)


def make_backend(spec: str) -> GenerationBackend:
    """Build a backend from a CLI spec: ngram:PATH, replay:PATH or remote:URL."""
    kind, sep, arg = spec.partition(":")
    if not sep or not arg:
        raise ArgumentError(
            f"backend spec must look like kind:target, got {spec!r}"
        )
    if kind == "ngram":
        return NgramModel.load(arg)
    if kind == "replay":
        return ReplayBackend(ReviewSet.load(arg))
    if kind == "remote":
        return RemoteBackend(arg)
    raise ArgumentError(f"unknown backend kind {kind!r} (ngram, replay, remote)")

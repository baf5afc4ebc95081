"""Descriptive statistics over polled records.

Everything here is deterministic given its inputs; the one stochastic
routine (`l2_resample_error`) takes an explicit seed and delegates its
draws to the kernels so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .analyze import SentimentLabel, SentimentResult
from .errors import ArgumentError
from .rng import check_seed


@dataclass(frozen=True)
class StarHistogram:
    """Counts of star ratings 1..5."""

    counts: tuple[int, int, int, int, int]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def percentages(self) -> tuple[float, ...]:
        if self.total == 0:
            return (0.0,) * 5
        return tuple(100.0 * c / self.total for c in self.counts)

    def as_list(self) -> list[int]:
        return list(self.counts)


def star_histogram(records: Iterable) -> StarHistogram:
    """Count stars into a 5-bin histogram.

    Accepts (text, stars) pairs, such as the output of usable_pairs, or
    bare integer star values.
    """
    counts = [0] * 5
    for item in records:
        s = item[1] if isinstance(item, (tuple, list)) else item
        if not isinstance(s, int) or isinstance(s, bool) or not 1 <= s <= 5:
            raise ArgumentError(f"star values must be integers in 1..5, got {s!r}")
        counts[s - 1] += 1
    return StarHistogram(counts=tuple(counts))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation coefficient of two equal-length sequences.

    Two-pass mean-centered formula with compensated summation. Constant
    input has no defined correlation and raises ArgumentError.
    """
    if len(x) != len(y):
        raise ArgumentError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise ArgumentError("need at least two points for a correlation")
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = math.fsum((a - mx) ** 2 for a in xs)
    syy = math.fsum((b - my) ** 2 for b in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ArgumentError("correlation is undefined for a constant sequence")
    return sxy / math.sqrt(sxx * syy)


def pct_difference(a: float, b: float) -> float:
    """Percent difference of a from reference b: 100 * |a - b| / |b|."""
    if b == 0:
        raise ArgumentError("percent difference is undefined for reference 0")
    return 100.0 * abs(a - b) / abs(b)


@dataclass(frozen=True)
class SentimentSplit:
    """Positive/negative percentages of a labeled collection."""

    pos_pct: float
    neg_pct: float

    def __post_init__(self):
        if self.pos_pct < 0 or self.neg_pct < 0:
            raise ArgumentError("percentages must be non-negative")

    @classmethod
    def from_labels(cls, labels: Iterable[SentimentLabel]) -> "SentimentSplit":
        pos = neg = 0
        for lab in labels:
            if lab is SentimentLabel.POSITIVE:
                pos += 1
            elif lab is SentimentLabel.NEGATIVE:
                neg += 1
            else:
                raise ArgumentError(f"unknown label {lab!r}")
        total = pos + neg
        if total == 0:
            raise ArgumentError("cannot split an empty label collection")
        return cls(pos_pct=100.0 * pos / total, neg_pct=100.0 * neg / total)


def sentiment_split(
    records: Iterable[str],
    classifier: Callable[[str], SentimentResult],
) -> SentimentSplit:
    """Classify texts and return their positive/negative percentage split."""
    return SentimentSplit.from_labels(classifier(t).label for t in records)


def avg_stars_by_sentiment(
    pairs: Iterable[tuple[str, int]],
    classifier: Callable[[str], SentimentResult],
) -> dict[SentimentLabel, float]:
    """Mean star rating of the texts carrying each sentiment label.

    Labels with no members are absent from the result.
    """
    sums: dict[SentimentLabel, float] = {}
    counts: dict[SentimentLabel, int] = {}
    for text, stars in pairs:
        lab = classifier(text).label
        sums[lab] = sums.get(lab, 0.0) + stars
        counts[lab] = counts.get(lab, 0) + 1
    return {lab: sums[lab] / counts[lab] for lab in sums}


@dataclass(frozen=True)
class BaselineReport:
    """Resampled small-sample polling error against a reference split.

    l2_stderr is the Monte Carlo standard error of l2_error; it is extra
    information on top of the reported mean, kept so tolerance checks can
    be stated in sigmas.
    """

    sample_size: int
    repeats: int
    mean_split: SentimentSplit
    l2_error: float
    seed: int
    without_replacement: bool
    l2_stderr: float


def _labels_to_array(labels: Iterable) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, SentimentLabel):
            out.append(1 if lab is SentimentLabel.POSITIVE else 0)
        elif isinstance(lab, (bool, int)) and lab in (0, 1, True, False):
            out.append(1 if lab else 0)
        else:
            raise ArgumentError(
                f"labels must be SentimentLabel or 0/1, got {lab!r}"
            )
    return np.asarray(out, dtype=np.uint8)


def l2_resample_error(
    population: Iterable,
    reference: SentimentSplit,
    sample_size: int,
    repeats: int,
    without_replacement: bool = True,
    seed: int | None = None,
) -> BaselineReport:
    """Mean l2 distance between resampled splits and a reference split.

    Repeat r draws `sample_size` items from the labeled population (without
    replacement by default, via a partial Fisher-Yates pass on the r-th
    child stream of `seed`), computes its positive/negative percentage
    split, and takes the Euclidean distance to `reference` in percentage
    points. Reported: the mean distance over repeats, the mean split, and
    the Monte Carlo standard error of the mean distance.
    """
    arr = _labels_to_array(population)
    n = arr.shape[0]
    if n == 0:
        raise ArgumentError("population must not be empty")
    if not isinstance(sample_size, int) or sample_size < 1:
        raise ArgumentError(f"sample_size must be >= 1, got {sample_size!r}")
    if without_replacement and sample_size > n:
        raise ArgumentError(
            f"cannot draw {sample_size} without replacement from {n} items"
        )
    if not isinstance(repeats, int) or repeats < 1:
        raise ArgumentError(f"repeats must be >= 1, got {repeats!r}")
    if seed is None:
        raise ArgumentError("l2_resample_error needs an explicit seed")
    check_seed(seed)
    pos_counts = kernels.resample_pos_counts(
        arr, sample_size, repeats, seed, not without_replacement
    )
    pos_pct = pos_counts.astype(np.float64) * (100.0 / sample_size)
    neg_pct = 100.0 - pos_pct
    d = np.sqrt((pos_pct - reference.pos_pct) ** 2
                + (neg_pct - reference.neg_pct) ** 2)
    stderr = float(d.std(ddof=1) / math.sqrt(repeats)) if repeats > 1 else 0.0
    return BaselineReport(
        sample_size=sample_size,
        repeats=repeats,
        mean_split=SentimentSplit(pos_pct=float(pos_pct.mean()),
                                  neg_pct=float(neg_pct.mean())),
        l2_error=float(d.mean()),
        seed=seed,
        without_replacement=without_replacement,
        l2_stderr=stderr,
    )


def split_l2(split: SentimentSplit, reference: SentimentSplit) -> float:
    """Euclidean distance between two splits, in percentage points."""
    return math.sqrt((split.pos_pct - reference.pos_pct) ** 2
                     + (split.neg_pct - reference.neg_pct) ** 2)

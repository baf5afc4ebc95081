"""Corpus construction: wrap reviews into single-line training records.

Two record grammars are supported. Numeric records carry only the metadata
fields; review records carry the text and its star label:

    stars = 4.0, useful_votes = 3, funny_votes = 0, cool_votes = 1 --
    review: Great pastrami on rye, stars: 5.0 --

One record per line, a trailing " --" terminator on every record, and a
final newline at end of file. Corpus builders guarantee every emitted line
conforms; readers re-validate and refuse files that do not.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ArgumentError, DataError
from .ingest import Review, ReviewSet
from .rng import SplitMix64, check_seed

TERMINATOR = " --"
REVIEW_PREFIX = "review: "
STARS_DELIM = ", stars: "


class CorpusFormat(enum.Enum):
    """Record grammar used by a corpus."""

    NUMERIC_RECORDS = "numeric"
    REVIEW_STARS = "review-stars"

    @classmethod
    def from_name(cls, name: str) -> "CorpusFormat":
        for fmt in cls:
            if fmt.value == name or fmt.name == name:
                return fmt
        raise ArgumentError(
            f"unknown corpus format {name!r}; expected one of "
            f"{[f.value for f in cls]}"
        )


def sanitize_text(text: str) -> str:
    """Make a review text safe to embed in a record line.

    The terminator pattern is broken apart (" --" becomes " - -", repeated
    until none remains, since a replacement can abut a following dash) and
    surrounding whitespace is trimmed.
    """
    out = text.strip()
    while TERMINATOR in out:
        out = out.replace(TERMINATOR, " - -")
    return out


def numeric_line(review: Review) -> str:
    return (
        f"stars = {review.stars}.0, useful_votes = {review.useful}, "
        f"funny_votes = {review.funny}, cool_votes = {review.cool}{TERMINATOR}"
    )


def review_line(review: Review) -> str:
    text = sanitize_text(review.text)
    if not text:
        raise DataError(f"review {review.review_id}: text is empty after sanitizing")
    return f"{REVIEW_PREFIX}{text}{STARS_DELIM}{review.stars}.0{TERMINATOR}"


@dataclass
class Corpus:
    """Validated record lines in one grammar (lines stored without newlines)."""

    format: CorpusFormat
    lines: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.lines)

    def write(self, path: str | Path) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for line in self.lines:
                fh.write(line + "\n")

    @classmethod
    def read(cls, path: str | Path, fmt: CorpusFormat) -> "Corpus":
        """Load and validate; any malformed line is a DataError naming it."""
        from .parse import classify_line  # local import to avoid a cycle

        path = Path(path)
        lines: list[str] = []
        with path.open("r", encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh.read().splitlines(), start=1):
                if not raw.strip():
                    continue
                rec = classify_line(raw, fmt)
                if rec.status.name != "OK":
                    raise DataError(f"{path}:{line_no}: {rec.reason} in {raw!r}")
                lines.append(raw)
        return cls(format=fmt, lines=lines)


def _sample_reviews(review_set: ReviewSet, n_lines: int, seed: int) -> list[Review]:
    if n_lines < 0:
        raise ArgumentError(f"n_lines must be >= 0, got {n_lines}")
    if n_lines > len(review_set):
        raise ArgumentError(
            f"cannot sample {n_lines} reviews from a set of {len(review_set)}"
        )
    gen = SplitMix64(check_seed(seed))
    idx = gen.sample_indices(len(review_set), n_lines)
    return [review_set.reviews[i] for i in idx]


def build_numeric_corpus(review_set: ReviewSet, n_lines: int, seed: int) -> Corpus:
    """Sample reviews without replacement and render numeric records."""
    picked = _sample_reviews(review_set, n_lines, seed)
    return Corpus(CorpusFormat.NUMERIC_RECORDS, [numeric_line(r) for r in picked])


def build_review_corpus(review_set: ReviewSet, n_lines: int, seed: int) -> Corpus:
    """Sample reviews without replacement and render review/stars records."""
    picked = _sample_reviews(review_set, n_lines, seed)
    return Corpus(CorpusFormat.REVIEW_STARS, [review_line(r) for r in picked])


def mask(review_set: ReviewSet, phrase: str) -> ReviewSet:
    """Drop every review whose text contains `phrase` (case-insensitive).

    Order of the surviving reviews is preserved. Used to excise a target
    phrase from a population before training, so that any later generation
    of the phrase cannot be memorization.
    """
    if not phrase or not phrase.strip():
        raise ArgumentError("phrase must be non-empty")
    needle = phrase.lower()
    kept = [r for r in review_set.reviews if needle not in r.text.lower()]
    removed = len(review_set) - len(kept)
    prov = review_set.provenance or "review set"
    return ReviewSet(
        reviews=kept,
        provenance=f"{prov}; masked {phrase!r} ({removed} reviews removed)",
    )


def balance_by_stars(review_set: ReviewSet, per_star: int, seed: int) -> ReviewSet:
    """Sample `per_star` reviews of each star 1..5, then shuffle (seeded).

    Raises ArgumentError naming the first star whose bucket is too small.
    """
    if per_star <= 0:
        raise ArgumentError(f"per_star must be positive, got {per_star}")
    gen = SplitMix64(check_seed(seed))
    buckets: dict[int, list[Review]] = {s: [] for s in range(1, 6)}
    for r in review_set.reviews:
        buckets[r.stars].append(r)
    picked: list[Review] = []
    for s in range(1, 6):
        bucket = buckets[s]
        if len(bucket) < per_star:
            raise ArgumentError(f"star {s}: need {per_star} have {len(bucket)}")
        for i in gen.sample_indices(len(bucket), per_star):
            picked.append(bucket[i])
    gen.shuffle(picked)
    prov = review_set.provenance or "review set"
    return ReviewSet(
        reviews=picked,
        provenance=f"{prov}; balanced to {per_star} per star, seed={seed}",
    )


def isolate_star(review_set: ReviewSet, star: int) -> ReviewSet:
    """Keep only reviews with the given star rating."""
    if not isinstance(star, int) or not 1 <= star <= 5:
        raise ArgumentError(f"star must be in 1..5, got {star!r}")
    kept = [r for r in review_set.reviews if r.stars == star]
    prov = review_set.provenance or "review set"
    return ReviewSet(reviews=kept, provenance=f"{prov}; isolated star {star}")


def split(corpus: Corpus, train_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Shuffle (seeded) and split into train/test.

    |train| = round(train_fraction * N) with halves rounding up; the
    fraction must be strictly between 0 and 1.
    """
    fraction = train_fraction
    if not 0.0 < fraction < 1.0:
        raise ArgumentError(f"train_fraction must be in (0, 1), got {fraction}")
    gen = SplitMix64(check_seed(seed))
    shuffled = list(corpus.lines)
    gen.shuffle(shuffled)
    n_train = int(fraction * len(shuffled) + 0.5)
    return (
        Corpus(corpus.format, shuffled[:n_train]),
        Corpus(corpus.format, shuffled[n_train:]),
    )

"""Lexicon-based sentiment and affect scoring.

Classification is deliberately simple and fully inspectable: lowercase the
text, split on non-alphanumeric runs, count tokens hitting the positive and
negative lexicons, and label POSITIVE when positive hits are greater than
or equal to negative hits (ties go to POSITIVE). Lexicon entries are either
plain words or prefix patterns written with a trailing ``*`` ("ador*"
matches "adore", "adorable", ...).

Word lists for licensed affect dictionaries are not bundled; load your own
with `load_lexicon`. The built-in positive/negative/filler lists are small
hand-rolled vocabularies, sufficient for synthetic populations and smoke
analysis.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import ArgumentError, DataError

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; drops empties."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


class SentimentLabel(enum.Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


@dataclass(frozen=True)
class SentimentResult:
    label: SentimentLabel
    pos_hits: int
    neg_hits: int


@dataclass(frozen=True)
class Lexicon:
    """A named word list with optional trailing-* prefix patterns."""

    name: str
    words: tuple[str, ...]

    def __post_init__(self):
        if not self.words:
            raise ArgumentError(f"lexicon {self.name!r} is empty")
        seen = set()
        for w in self.words:
            if not w or w != w.lower() or any(ch.isspace() for ch in w):
                raise DataError(
                    f"lexicon {self.name!r}: entries must be lowercase single "
                    f"words, got {w!r}"
                )
            if "*" in w[:-1] or w == "*":
                raise DataError(
                    f"lexicon {self.name!r}: '*' is only allowed as a trailing "
                    f"wildcard, got {w!r}"
                )
            if w in seen:
                raise DataError(f"lexicon {self.name!r}: duplicate entry {w!r}")
            seen.add(w)

    @property
    def exact(self) -> frozenset:
        return frozenset(w for w in self.words if not w.endswith("*"))

    @property
    def prefixes(self) -> tuple[str, ...]:
        return tuple(w[:-1] for w in self.words if w.endswith("*"))

    def matches(self, token: str) -> bool:
        if token in self.exact:
            return True
        return any(token.startswith(p) for p in self.prefixes)

    def count_hits(self, tokens: Iterable[str]) -> int:
        exact = self.exact
        prefixes = self.prefixes
        hits = 0
        for t in tokens:
            if t in exact or any(t.startswith(p) for p in prefixes):
                hits += 1
        return hits


def load_lexicon(path: str | Path, name: str | None = None) -> Lexicon:
    """One entry per line; blank lines and '#' comments are ignored."""
    path = Path(path)
    words = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        entry = raw.strip()
        if not entry or entry.startswith("#"):
            continue
        words.append(entry.lower())
    return Lexicon(name=name or path.stem, words=tuple(words))


def _builtin(name: str) -> Lexicon:
    text = resources.files("lmpoll.data").joinpath(f"{name}.txt").read_text("utf-8")
    words = tuple(w.strip() for w in text.splitlines() if w.strip())
    return Lexicon(name=name, words=words)


def builtin_positive() -> Lexicon:
    return _builtin("positive")


def builtin_negative() -> Lexicon:
    return _builtin("negative")


def builtin_filler() -> Lexicon:
    """Neutral words used by the synthesizer; not a sentiment lexicon."""
    return _builtin("filler")


@dataclass(frozen=True)
class LexiconClassifier:
    """Callable sentiment classifier over a positive/negative lexicon pair."""

    positive: Lexicon
    negative: Lexicon

    def __call__(self, text: str) -> SentimentResult:
        return classify(text, self.positive, self.negative)

    @classmethod
    def builtin(cls) -> "LexiconClassifier":
        return cls(positive=builtin_positive(), negative=builtin_negative())


def classify(text: str, positive: Lexicon, negative: Lexicon) -> SentimentResult:
    """Label one text; ties (including zero hits on both sides) are POSITIVE."""
    tokens = tokenize(text)
    pos = positive.count_hits(tokens)
    neg = negative.count_hits(tokens)
    label = SentimentLabel.POSITIVE if pos >= neg else SentimentLabel.NEGATIVE
    return SentimentResult(label=label, pos_hits=pos, neg_hits=neg)


def affect_percentages(
    texts: Iterable[str],
    categories: Iterable[Lexicon],
) -> dict[str, float]:
    """Percentage of all tokens matching each category lexicon.

    Percentages are over the pooled token count of every text, mirroring
    word-category analysis tools: 100 * matching_tokens / total_tokens.
    Results are keyed by lexicon name.
    """
    lexicons = list(categories)
    names = [lex.name for lex in lexicons]
    if len(set(names)) != len(names):
        raise ArgumentError(f"duplicate category names: {names}")
    hits = {name: 0 for name in names}
    total = 0
    for text in texts:
        tokens = tokenize(text)
        total += len(tokens)
        for lex in lexicons:
            hits[lex.name] += lex.count_hits(tokens)
    if total == 0:
        raise ArgumentError("affect percentages need at least one token")
    return {name: 100.0 * hits[name] / total for name in names}

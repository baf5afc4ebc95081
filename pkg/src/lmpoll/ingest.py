"""Review ingestion and synthesis.

Reviews come from two places: newline-delimited JSON dumps in the usual
review-platform shape (one review object per line, plus an optional business
file for category joins), or a seeded synthesizer that builds populations
with a known star/sentiment structure so downstream measurements have a
ground truth to compare against.

Review texts are newline-normalized at ingest: internal newlines collapse to
single spaces and surrounding whitespace is trimmed, so a stored text never
contains line breaks and never ends in whitespace.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ArgumentError, DataError
from .rng import SplitMix64, check_seed, child_seed

_WS_RUN = re.compile(r"\s+")

# vote synthesis: P(v) = 0.7 * 0.3**v, capped so records stay small
_VOTE_CONTINUE = 0.3
_VOTE_CAP = 8

# probability that a drawn sentiment token is replaced by a filler word
_FILLER_RATE = 0.5

_SET_HEADER = "lmpoll-reviewset/1"


def normalize_text(text: str) -> str:
    """Collapse all whitespace runs (incl. newlines) to single spaces, trim."""
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True)
class Review:
    """One review with its star rating, vote counts and business categories.

    Categories come from joining against the business table at load time;
    they are not part of the serialized review-set format.
    """

    review_id: str
    business_id: str
    stars: int
    useful: int
    funny: int
    cool: int
    text: str
    categories: frozenset = frozenset()

    def __post_init__(self):
        if not isinstance(self.stars, int) or not 1 <= self.stars <= 5:
            raise DataError(f"stars must be an integer in 1..5, got {self.stars!r}")
        for name in ("useful", "funny", "cool"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise DataError(f"{name} must be a non-negative integer, got {v!r}")
        if not self.text or self.text != normalize_text(self.text):
            raise DataError(
                "text must be non-empty with normalized whitespace "
                f"(got {self.text!r})"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "review_id": self.review_id,
                "business_id": self.business_id,
                "stars": self.stars,
                "useful": self.useful,
                "funny": self.funny,
                "cool": self.cool,
                "text": self.text,
            },
            ensure_ascii=False,
        )


@dataclass
class ReviewSet:
    """An ordered collection of reviews plus a provenance note."""

    reviews: list[Review] = field(default_factory=list)
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self) -> Iterator[Review]:
        return iter(self.reviews)

    def star_counts(self) -> list[int]:
        counts = [0] * 5
        for r in self.reviews:
            counts[r.stars - 1] += 1
        return counts

    def save(self, path: str | Path) -> None:
        """Write header line + one review object per line (stable key order)."""
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps({"format": _SET_HEADER, "provenance": self.provenance},
                                ensure_ascii=False) + "\n")
            for r in self.reviews:
                fh.write(r.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ReviewSet":
        """Read a saved set; plain review JSONL without a header also loads."""
        path = Path(path)
        reviews: list[Review] = []
        provenance = ""
        with path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
                if line_no == 1 and isinstance(obj, dict) and obj.get("format") == _SET_HEADER:
                    provenance = str(obj.get("provenance", ""))
                    continue
                reviews.append(_review_from_obj(obj, f"{path}:{line_no}"))
        return cls(reviews=reviews, provenance=provenance)


def _coerce_stars(value) -> int:
    if isinstance(value, bool):
        raise DataError(f"stars must be numeric, got {value!r}")
    if isinstance(value, int):
        stars = value
    elif isinstance(value, float) and value.is_integer():
        stars = int(value)
    else:
        raise DataError(f"stars must be a whole number, got {value!r}")
    if not 1 <= stars <= 5:
        raise DataError(f"stars out of range 1..5: {value!r}")
    return stars


def _coerce_vote(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise DataError(f"{name} must be >= 0, got {value!r}")
    return value


def _review_from_obj(obj, where: str, categories: frozenset = frozenset()) -> Review:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected a JSON object, got {type(obj).__name__}")
    try:
        text = normalize_text(str(obj["text"]))
        if not text:
            raise DataError(f"{where}: empty review text")
        return Review(
            review_id=str(obj["review_id"]),
            business_id=str(obj["business_id"]),
            stars=_coerce_stars(obj["stars"]),
            useful=_coerce_vote(obj.get("useful", 0), "useful"),
            funny=_coerce_vote(obj.get("funny", 0), "funny"),
            cool=_coerce_vote(obj.get("cool", 0), "cool"),
            text=text,
            categories=categories,
        )
    except KeyError as exc:
        raise DataError(f"{where}: missing field {exc.args[0]!r}") from exc
    except DataError as exc:
        if str(exc).startswith(where):
            raise
        raise DataError(f"{where}: {exc}") from exc


def load_businesses(path: str | Path, skip_bad_lines: bool = False) -> dict[str, set[str]]:
    """Map business_id -> category set from a business JSONL file.

    The categories field is a comma-separated string; null or missing means
    the empty set.
    """
    path = Path(path)
    out: dict[str, set[str]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict) or "business_id" not in obj:
                    raise DataError("not a business object")
                raw = obj.get("categories")
                cats = set()
                if raw:
                    cats = {c.strip() for c in str(raw).split(",") if c.strip()}
                out[str(obj["business_id"])] = cats
            except (json.JSONDecodeError, DataError) as exc:
                if skip_bad_lines:
                    continue
                raise DataError(f"{path}:{line_no}: {exc}") from exc
    return out


def business_ids_with_category(businesses: dict[str, set[str]], category: str) -> set[str]:
    """Businesses whose category set contains `category` exactly.

    Exact string match: related but distinct category names do not merge.
    """
    return {bid for bid, cats in businesses.items() if category in cats}


def load_reviews(
    path: str | Path,
    businesses: dict[str, set[str]] | None = None,
    category: str | None = None,
    skip_bad_lines: bool = False,
) -> ReviewSet:
    """Read reviews from a JSONL dump, optionally joined against businesses.

    With a category, only reviews at a business whose category set contains
    it (exact string match) are kept; reviews referencing a business_id
    missing from the map are excluded and counted in the provenance tally.
    Without a category no business filtering happens, but known businesses
    still contribute their category sets to the loaded reviews.

    Malformed lines raise DataError naming the line, unless skip_bad_lines
    is set, in which case they are dropped and counted in the provenance.
    """
    path = Path(path)
    if category is not None and businesses is None:
        raise ArgumentError("category filtering requires a business map")
    reviews: list[Review] = []
    skipped = 0
    unknown_business = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                if skip_bad_lines:
                    skipped += 1
                    continue
                raise DataError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            cats = frozenset()
            if businesses is not None:
                bid = obj.get("business_id") if isinstance(obj, dict) else None
                known = bid in businesses
                if known:
                    cats = frozenset(businesses[bid])
                if category is not None:
                    if not known:
                        unknown_business += 1
                        continue
                    if category not in cats:
                        continue
            try:
                reviews.append(_review_from_obj(obj, f"{path}:{line_no}", cats))
            except DataError:
                if skip_bad_lines:
                    skipped += 1
                    continue
                raise
    note = f"loaded from {path.name}"
    if category is not None:
        note += f", category={category!r}"
    if unknown_business:
        note += f", skipped {unknown_business} reviews at unknown businesses"
    if skipped:
        note += f", skipped {skipped} bad lines"
    return ReviewSet(reviews=reviews, provenance=note)


def ingest_reviews(
    reviews_path: str | Path,
    business_path: str | Path | None = None,
    category: str | None = None,
    skip_bad_lines: bool = False,
) -> ReviewSet:
    """One-call ingest: optional business-table load, then review load."""
    businesses = None
    if business_path is not None:
        businesses = load_businesses(business_path, skip_bad_lines=skip_bad_lines)
    if category is not None and businesses is None:
        raise ArgumentError("category filtering requires a business file")
    return load_reviews(reviews_path, businesses=businesses, category=category,
                        skip_bad_lines=skip_bad_lines)


def filter_reviews(
    review_set: ReviewSet,
    stars: Iterable[int] | None = None,
    contains: str | None = None,
    not_contains: str | None = None,
) -> ReviewSet:
    """Subset a review set; substring checks are case-insensitive."""
    keep = list(review_set.reviews)
    notes = []
    if stars is not None:
        wanted = set(stars)
        for s in wanted:
            if not isinstance(s, int) or not 1 <= s <= 5:
                raise ArgumentError(f"stars filter values must be in 1..5, got {s!r}")
        keep = [r for r in keep if r.stars in wanted]
        notes.append(f"stars in {sorted(wanted)}")
    if contains is not None:
        needle = contains.lower()
        keep = [r for r in keep if needle in r.text.lower()]
        notes.append(f"contains {contains!r}")
    if not_contains is not None:
        needle = not_contains.lower()
        keep = [r for r in keep if needle not in r.text.lower()]
        notes.append(f"not containing {not_contains!r}")
    prov = review_set.provenance or "review set"
    if notes:
        prov += "; filtered: " + ", ".join(notes)
    return ReviewSet(reviews=keep, provenance=prov)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for a synthetic review population.

    star_weights are relative sampling weights for stars 1..5;
    positivity_by_star gives, per star, the probability that a content token
    is drawn from the positive lexicon rather than the negative one. Each
    drawn token is then replaced by a neutral filler word with probability
    0.5, which keeps texts from being wall-to-wall sentiment words.
    """

    n: int
    star_weights: tuple[float, float, float, float, float]
    positivity_by_star: tuple[float, float, float, float, float]
    tokens_min: int
    tokens_max: int
    seed: int

    def __post_init__(self):
        if self.n < 0:
            raise ArgumentError(f"n must be >= 0, got {self.n}")
        if len(self.star_weights) != 5 or any(w < 0 for w in self.star_weights):
            raise ArgumentError("star_weights must be 5 non-negative numbers")
        if sum(self.star_weights) <= 0:
            raise ArgumentError("star_weights must not all be zero")
        if len(self.positivity_by_star) != 5 or any(
            not 0.0 <= p <= 1.0 for p in self.positivity_by_star
        ):
            raise ArgumentError("positivity_by_star must be 5 probabilities")
        if not 1 <= self.tokens_min <= self.tokens_max:
            raise ArgumentError(
                f"need 1 <= tokens_min <= tokens_max, got "
                f"{self.tokens_min}..{self.tokens_max}"
            )
        check_seed(self.seed)


def _draw_vote(gen: SplitMix64) -> int:
    v = 0
    while v < _VOTE_CAP and gen.next_float() < _VOTE_CONTINUE:
        v += 1
    return v


def synthesize_population(
    spec: SynthSpec,
    positive_words: list[str],
    negative_words: list[str],
    filler_words: list[str],
) -> ReviewSet:
    """Build a seeded synthetic population.

    Review i draws from the i-th child stream of spec.seed, in a fixed
    order (star, token count, useful/funny/cool votes, then per token:
    polarity, word pick, filler replacement), so any single review can be
    reproduced without generating its predecessors.
    """
    for name, words in (("positive", positive_words), ("negative", negative_words),
                        ("filler", filler_words)):
        if not words:
            raise ArgumentError(f"{name} word list must not be empty")
        if any((not w) or w != w.strip() or any(ch.isspace() for ch in w) for w in words):
            raise ArgumentError(f"{name} word list entries must be single words")
    overlap = (set(positive_words) & set(negative_words)) \
        | (set(positive_words) & set(filler_words)) \
        | (set(negative_words) & set(filler_words))
    if overlap:
        raise ArgumentError(f"word lists must be disjoint; shared: {sorted(overlap)[:5]}")

    total_w = float(sum(spec.star_weights))
    cum = []
    acc = 0.0
    for w in spec.star_weights:
        acc += w / total_w
        cum.append(acc)
    cum[-1] = 1.0  # guard against float shortfall at the top bin

    reviews = []
    for i in range(spec.n):
        gen = SplitMix64(child_seed(spec.seed, i))
        u = gen.next_float()
        star = 5
        for s in range(5):
            if u < cum[s]:
                star = s + 1
                break
        length = spec.tokens_min + gen.next_below(spec.tokens_max - spec.tokens_min + 1)
        useful = _draw_vote(gen)
        funny = _draw_vote(gen)
        cool = _draw_vote(gen)
        p_pos = spec.positivity_by_star[star - 1]
        tokens = []
        for _ in range(length):
            pool = positive_words if gen.next_float() < p_pos else negative_words
            word = pool[gen.next_below(len(pool))]
            if gen.next_float() < _FILLER_RATE:
                word = filler_words[gen.next_below(len(filler_words))]
            tokens.append(word)
        reviews.append(Review(
            review_id=f"synth-{i:07d}",
            business_id="synthetic",
            stars=star,
            useful=useful,
            funny=funny,
            cool=cool,
            text=" ".join(tokens),
        ))
    return ReviewSet(
        reviews=reviews,
        provenance=(
            f"synthesized n={spec.n} seed={spec.seed} "
            f"weights={list(spec.star_weights)} "
            f"positivity={list(spec.positivity_by_star)} "
            f"tokens={spec.tokens_min}..{spec.tokens_max}"
        ),
    )

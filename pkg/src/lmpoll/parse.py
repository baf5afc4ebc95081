"""Parse generated record streams back into structured rows.

A malformed record is data, not an error: generation at nonzero temperature
can and does break the grammar, and the malformation *rate* is one of the
measurements this package exists to take. Parsing therefore never raises on
record content; it classifies. Blank lines are skipped entirely (they are
stream framing, not records).

The review grammar is recovered with a last-delimiter rule: the text may
itself contain ", stars: ", so the *final* occurrence splits text from the
label.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import REVIEW_PREFIX, STARS_DELIM, TERMINATOR, CorpusFormat
from .errors import ArgumentError

_NUMERIC_RE = re.compile(
    r"^stars = ([1-5])\.0, "
    r"useful_votes = (0|[1-9][0-9]*), "
    r"funny_votes = (0|[1-9][0-9]*), "
    r"cool_votes = (0|[1-9][0-9]*) --$"
)
_STARS_VALUE_RE = re.compile(r"^([0-9]+)\.0$")


class ParseStatus(enum.Enum):
    OK = "OK"
    MALFORMED = "MALFORMED"


@dataclass(frozen=True)
class ParsedRecord:
    """One classified record line."""

    raw: str
    status: ParseStatus
    reason: str | None = None
    text: str | None = None
    stars: int | None = None
    useful: int | None = None
    funny: int | None = None
    cool: int | None = None

    @property
    def ok(self) -> bool:
        return self.status is ParseStatus.OK


def _malformed(raw: str, reason: str) -> ParsedRecord:
    return ParsedRecord(raw=raw, status=ParseStatus.MALFORMED, reason=reason)


def classify_line(raw: str, fmt: CorpusFormat) -> ParsedRecord:
    """Classify a single record line against the grammar for `fmt`."""
    if not raw.strip():
        return _malformed(raw, "blank record")
    if fmt is CorpusFormat.NUMERIC_RECORDS:
        return _classify_numeric(raw)
    if fmt is CorpusFormat.REVIEW_STARS:
        return _classify_review(raw)
    raise ArgumentError(f"unknown corpus format {fmt!r}")


def _classify_numeric(raw: str) -> ParsedRecord:
    if not raw.endswith(TERMINATOR):
        return _malformed(raw, "no terminator")
    m = _NUMERIC_RE.match(raw)
    if not m:
        return _malformed(raw, "bad numeric record")
    return ParsedRecord(
        raw=raw,
        status=ParseStatus.OK,
        stars=int(m.group(1)),
        useful=int(m.group(2)),
        funny=int(m.group(3)),
        cool=int(m.group(4)),
    )


def _classify_review(raw: str) -> ParsedRecord:
    if not raw.endswith(TERMINATOR):
        return _malformed(raw, "no terminator")
    if not raw.startswith(REVIEW_PREFIX):
        return _malformed(raw, "no review prefix")
    body = raw[len(REVIEW_PREFIX):-len(TERMINATOR)]
    cut = body.rfind(STARS_DELIM)
    if cut < 0:
        return _malformed(raw, "no stars delimiter")
    text = body[:cut]
    stars_part = body[cut + len(STARS_DELIM):]
    m = _STARS_VALUE_RE.match(stars_part)
    if not m:
        return _malformed(raw, "bad stars value")
    stars = int(m.group(1))
    if not 1 <= stars <= 5:
        return _malformed(raw, "stars out of range")
    if not text:
        return _malformed(raw, "empty text")
    if text != text.rstrip():
        return _malformed(raw, "text ends in whitespace")
    return ParsedRecord(raw=raw, status=ParseStatus.OK, text=text, stars=stars)


@dataclass
class ParseReport:
    """Classification results for one record stream."""

    format: CorpusFormat
    records: list[ParsedRecord] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def malformed(self) -> int:
        return sum(1 for r in self.records if not r.ok)

    @property
    def error_rate(self) -> float:
        """Malformed fraction in [0, 1]; 0.0 for an empty stream."""
        if not self.records:
            return 0.0
        return self.malformed / self.total

    def ok_records(self) -> list[ParsedRecord]:
        return [r for r in self.records if r.ok]


def parse_stream(stream: str | Iterable[str], fmt: CorpusFormat) -> ParseReport:
    """Classify every non-blank line of a record stream.

    `stream` is either one string (split on line boundaries) or an iterable
    of lines. Concatenating two streams and parsing gives the same counts as
    parsing each part: classification is per-line with no cross-line state.
    """
    if isinstance(stream, str):
        lines: Iterable[str] = stream.splitlines()
    else:
        lines = (ln.rstrip("\n").rstrip("\r") for ln in stream)
    report = ParseReport(format=fmt)
    for raw in lines:
        if not raw.strip():
            continue
        report.records.append(classify_line(raw, fmt))
    return report


def usable_pairs(report: ParseReport) -> list[tuple[str, int]]:
    """(text, stars) for every OK record of a review-format report."""
    if report.format is not CorpusFormat.REVIEW_STARS:
        raise ArgumentError("usable_pairs requires a review-stars report")
    return [(r.text, r.stars) for r in report.records if r.ok]

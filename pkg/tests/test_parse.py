"""Record stream parsing: grammar recovery and malformation accounting."""

import pytest

from lmpoll.corpus import CorpusFormat, numeric_line, review_line
from lmpoll.errors import ArgumentError
from lmpoll.ingest import Review
from lmpoll.parse import (
    ParsedRecord,
    ParseStatus,
    classify_line,
    parse_stream,
    usable_pairs,
)
from lmpoll.rng import SplitMix64

NUM = CorpusFormat.NUMERIC_RECORDS
REV = CorpusFormat.REVIEW_STARS


def test_numeric_ok():
    rec = classify_line(
        "stars = 4.0, useful_votes = 12, funny_votes = 0, cool_votes = 3 --", NUM)
    assert rec.ok
    assert (rec.stars, rec.useful, rec.funny, rec.cool) == (4, 12, 0, 3)
    assert rec.reason is None


@pytest.mark.parametrize("raw,reason", [
    ("stars = 4.0, useful_votes = 12, funny_votes = 0, cool_votes = 3", "no terminator"),
    ("stars = 0.0, useful_votes = 1, funny_votes = 0, cool_votes = 0 --", "bad numeric record"),
    ("stars = 6.0, useful_votes = 1, funny_votes = 0, cool_votes = 0 --", "bad numeric record"),
    ("stars = 4.0, useful_votes = 01, funny_votes = 0, cool_votes = 0 --", "bad numeric record"),
    ("stars = 4.5, useful_votes = 1, funny_votes = 0, cool_votes = 0 --", "bad numeric record"),
    ("stars = 4.0, useful_votes = 1, cool_votes = 0 --", "bad numeric record"),
    ("   ", "blank record"),
])
def test_numeric_malformed(raw, reason):
    rec = classify_line(raw, NUM)
    assert not rec.ok
    assert rec.reason == reason


def test_verbatim_degenerate_line_is_malformed():
    raw = ("stars_votes = 0stars_stars_stars_min = 2.0, useful_votes = 0,")
    rec = classify_line(raw, NUM)
    assert rec.status is ParseStatus.MALFORMED
    assert rec.reason == "no terminator"


def test_review_ok():
    rec = classify_line("review: Great pastrami on rye, stars: 5.0 --", REV)
    assert rec.ok
    assert rec.text == "Great pastrami on rye"
    assert rec.stars == 5


def test_review_last_delimiter_wins():
    raw = "review: odd text, stars: 3.0 embedded, stars: 4.0 --"
    rec = classify_line(raw, REV)
    assert rec.ok
    assert rec.text == "odd text, stars: 3.0 embedded"
    assert rec.stars == 4


@pytest.mark.parametrize("raw,reason", [
    ("review: fine, stars: 3.0", "no terminator"),
    ("rating: fine, stars: 3.0 --", "no review prefix"),
    ("review: fine with no label --", "no stars delimiter"),
    ("review: fine, stars: three --", "bad stars value"),
    ("review: fine, stars: 3.5 --", "bad stars value"),
    ("review: fine, stars: 0.0 --", "stars out of range"),
    ("review: fine, stars: 6.0 --", "stars out of range"),
    ("review: , stars: 3.0 --", "empty text"),
])
def test_review_malformed(raw, reason):
    rec = classify_line(raw, REV)
    assert not rec.ok
    assert rec.reason == reason


def test_classification_is_total_over_noise():
    gen = SplitMix64(12345)
    alphabet = "ars=0123456789.,- :veiwu\n"
    for _ in range(500):
        n = 1 + gen.next_below(60)
        s = "".join(alphabet[gen.next_below(len(alphabet))] for _ in range(n))
        for fmt in (NUM, REV):
            for line in s.splitlines():
                if not line.strip():
                    continue
                rec = classify_line(line, fmt)
                assert isinstance(rec, ParsedRecord)
                assert rec.status in (ParseStatus.OK, ParseStatus.MALFORMED)


def test_round_trip_all_reviews():
    gen = SplitMix64(777)
    words = ["stars:", "votes,", "--", "ok", "so-so", "5.0", ",", "review:"]
    for i in range(300):
        n = 3 + gen.next_below(8)
        text = " ".join(words[gen.next_below(len(words))] for _ in range(n))
        r = Review(review_id=f"t{i}", business_id="b", stars=1 + gen.next_below(5),
                   useful=gen.next_below(5), funny=0, cool=0,
                   text=" ".join(text.split()))
        line = review_line(r)
        rec = classify_line(line, REV)
        assert rec.ok, (line, rec.reason)
        assert rec.stars == r.stars
        # numeric records always round trip exactly
        nrec = classify_line(numeric_line(r), NUM)
        assert nrec.ok
        assert (nrec.stars, nrec.useful) == (r.stars, r.useful)


def test_parse_stream_counts():
    text = ("stars = 4.0, useful_votes = 1, funny_votes = 0, cool_votes = 0 --\n"
            "\n"
            "garbage\n"
            "stars = 2.0, useful_votes = 0, funny_votes = 0, cool_votes = 9 --\n")
    rep = parse_stream(text, NUM)
    assert rep.total == 3  # blank line skipped
    assert rep.malformed == 1
    assert rep.error_rate == pytest.approx(1 / 3)
    assert len(rep.ok_records()) == 2


def test_parse_stream_accepts_iterables():
    lines = ["review: ok then, stars: 1.0 --\n", "broken\n"]
    rep = parse_stream(lines, REV)
    assert rep.total == 2
    assert rep.malformed == 1


def test_error_rate_is_permutation_invariant_and_pools():
    good = "stars = 1.0, useful_votes = 0, funny_votes = 0, cool_votes = 0 --"
    bad = "nope"
    a = parse_stream([good, good, bad], NUM)
    b = parse_stream([bad, good, good], NUM)
    assert a.error_rate == b.error_rate
    both = parse_stream([good, good, bad, bad, good, good], NUM)
    assert both.malformed == a.malformed * 2
    assert both.total == a.total * 2
    assert both.error_rate == pytest.approx(a.error_rate)


def test_empty_stream_error_rate():
    rep = parse_stream("", NUM)
    assert rep.total == 0
    assert rep.error_rate == 0.0


def test_usable_pairs():
    rep = parse_stream(["review: nice spot, stars: 4.0 --", "junk"], REV)
    assert usable_pairs(rep) == [("nice spot", 4)]
    with pytest.raises(ArgumentError):
        usable_pairs(parse_stream("", NUM))

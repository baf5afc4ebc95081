"""Lexicon matching, sentiment labels and affect percentages."""

import pytest

from lmpoll.analyze import (
    Lexicon,
    LexiconClassifier,
    SentimentLabel,
    affect_percentages,
    builtin_filler,
    builtin_negative,
    builtin_positive,
    classify,
    load_lexicon,
    tokenize,
)
from lmpoll.errors import ArgumentError, DataError


def test_tokenize():
    assert tokenize("Great, food!  10/10") == ["great", "food", "10", "10"]
    assert tokenize("...") == []
    assert tokenize("Don't") == ["don", "t"]


def test_lexicon_validation():
    Lexicon(name="x", words=("good", "ador*"))
    with pytest.raises(ArgumentError):
        Lexicon(name="x", words=())
    with pytest.raises(DataError):
        Lexicon(name="x", words=("Good",))
    with pytest.raises(DataError):
        Lexicon(name="x", words=("two words",))
    with pytest.raises(DataError):
        Lexicon(name="x", words=("a*b",))
    with pytest.raises(DataError):
        Lexicon(name="x", words=("*",))
    with pytest.raises(DataError):
        Lexicon(name="x", words=("good", "good"))


def test_lexicon_prefix_matching():
    lex = Lexicon(name="x", words=("ador*", "fine"))
    assert lex.matches("adorable")
    assert lex.matches("adored")
    assert lex.matches("ador")
    assert lex.matches("fine")
    assert not lex.matches("finest")  # exact entries do not extend
    assert lex.count_hits(["adorable", "meh", "fine", "fines"]) == 2


def test_load_lexicon(tmp_path):
    path = tmp_path / "mood.txt"
    path.write_text("# comment\nGood\n\nbad*\n", encoding="utf-8")
    lex = load_lexicon(path)
    assert lex.name == "mood"
    assert lex.words == ("good", "bad*")
    assert load_lexicon(path, name="other").name == "other"

    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(ArgumentError):
        load_lexicon(empty)


def test_builtin_lexicons_are_disjoint():
    p = set(builtin_positive().words)
    n = set(builtin_negative().words)
    f = set(builtin_filler().words)
    assert not (p & n) and not (p & f) and not (n & f)
    assert len(p) >= 40 and len(n) >= 40


def test_classify_examples():
    clf = LexiconClassifier.builtin()
    res = clf("worthless enemy")
    assert res.label is SentimentLabel.NEGATIVE
    assert (res.pos_hits, res.neg_hits) == (0, 2)

    res = clf("amazing wonderful place, terrible wait")
    assert res.label is SentimentLabel.POSITIVE
    assert res.pos_hits > res.neg_hits

    # zero hits on both sides ties toward POSITIVE
    res = clf("the table by the window")
    assert (res.pos_hits, res.neg_hits) == (0, 0)
    assert res.label is SentimentLabel.POSITIVE

    # equal nonzero hits also tie toward POSITIVE
    res = clf("amazing but terrible")
    assert res.pos_hits == res.neg_hits == 1
    assert res.label is SentimentLabel.POSITIVE


def test_classify_case_insensitive():
    clf = LexiconClassifier.builtin()
    assert clf("AMAZING").label is SentimentLabel.POSITIVE
    assert clf("TeRrIbLe").label is SentimentLabel.NEGATIVE


def test_classify_swapping_lexicons_flips_label():
    pos, neg = builtin_positive(), builtin_negative()
    text = "amazing amazing terrible"
    assert classify(text, pos, neg).label is SentimentLabel.POSITIVE
    assert classify(text, neg, pos).label is SentimentLabel.NEGATIVE


def test_affect_percentages_examples():
    mood = Lexicon(name="mood", words=("happy", "sad"))
    size = Lexicon(name="size", words=("big",))
    out = affect_percentages(["happy big day", "sad happy sad"], [mood, size])
    # 4 of 6 tokens are mood words, 1 of 6 is a size word
    assert out["mood"] == pytest.approx(66.66666666666667)
    assert out["size"] == pytest.approx(16.666666666666668)


def test_affect_percentages_pool_by_tokens_not_texts():
    lex = Lexicon(name="l", words=("hit",))
    # one text with 1/1 and one with 0/3: pooled 1/4, not mean of 100% and 0%
    out = affect_percentages(["hit", "a b c"], [lex])
    assert out["l"] == pytest.approx(25.0)


def test_affect_percentages_errors():
    lex = Lexicon(name="l", words=("hit",))
    with pytest.raises(ArgumentError):
        affect_percentages(["", "   "], [lex])
    with pytest.raises(ArgumentError):
        affect_percentages(["a"], [lex, Lexicon(name="l", words=("x",))])

"""End-to-end acceptance checks, one test per headline capability.

Run with -v to get one pass/fail verdict line per capability. The tests
are numbered a1..a8 so the verdicts print in a stable order:

  a1  numeric-record models reproduce the record grammar and the training
      star marginals as the corpus grows (memorization)
  a2  resampled small-poll error matches frozen reference values and the
      exact hypergeometric expectation on the 97-review pool
  a3  Monte Carlo l2 error agrees with exhaustive enumeration on every
      small population
  a4  record wrapping round-trips hostile review text
  a5  Pearson correlation agrees with a direct-formula reference
  a6  generated reviews preserve the sentiment-stars direction
      (interpolation)
  a7  the phrase-masking pipeline runs end to end and stays parseable
      (extrapolation)
  a8  CLI runs are byte-reproducible under fixed seeds
"""

import http.server
import math
import subprocess
import sys
import threading
import time
from dataclasses import replace
from pathlib import Path

import pytest

from lmpoll.analyze import LexiconClassifier, SentimentLabel
from lmpoll.corpus import (
    CorpusFormat,
    build_numeric_corpus,
    build_review_corpus,
    mask,
    review_line,
    sanitize_text,
)
from lmpoll.experiment import ExperimentStore, report
from lmpoll.ingest import Review, ReviewSet
from lmpoll.lm import GenerationRequest, NgramModel
from lmpoll.parse import classify_line, parse_stream, usable_pairs
from lmpoll.rng import SplitMix64
from lmpoll.stats import (
    SentimentSplit,
    StarHistogram,
    avg_stars_by_sentiment,
    l2_resample_error,
    pearson,
    star_histogram,
)

from populations import synth_population
from oracles import (
    exhaustive_l2,
    hypergeometric_expected_l2,
    hypergeometric_l2_variance,
    pearson_direct,
)


# ---------------------------------------------------------------- a1

def test_a1_numeric_models_memorize_grammar_and_marginals(pop200k):
    """Order-5 models trained on growing numeric corpora emit records whose
    malformed rate is non-increasing and reaches 0.00% at 50k lines, and
    whose star histogram correlates >= 0.95 with the training marginals."""
    t0 = time.monotonic()
    sizes = (6_000, 12_000, 25_000, 50_000)
    errors = []
    correlations = []
    for i, n_lines in enumerate(sizes):
        corpus = build_numeric_corpus(pop200k, n_lines, seed=1000 + i)
        model = NgramModel.train(corpus.lines, order=5, alpha=0.001)
        out = model.generate(GenerationRequest(
            prompt="stars =", n=10_000, seed=40 + i, temperature=0.5))
        generated = parse_stream(("stars =" + c for c in out),
                                 CorpusFormat.NUMERIC_RECORDS)
        assert generated.total == 10_000
        errors.append(generated.error_rate)
        trained = parse_stream(corpus.lines, CorpusFormat.NUMERIC_RECORDS)
        assert trained.error_rate == 0.0
        train_hist = star_histogram(r.stars for r in trained.ok_records())
        gen_hist = star_histogram(r.stars for r in generated.ok_records())
        correlations.append(pearson(gen_hist.as_list(), train_hist.as_list()))
    for smaller, larger in zip(errors, errors[1:]):
        assert larger <= smaller, errors
    assert errors[-1] == 0.0
    assert correlations[-1] >= 0.95, correlations
    assert time.monotonic() - t0 < 180.0


# ---------------------------------------------------------------- a2

# frozen reference values for 8/18/26-review polls of the 97-review pool
REFERENCE_L2 = {8: 20.01, 18: 11.78, 26: 9.16}


def test_a2_small_poll_error_matches_reference_and_hypergeometric():
    """Mean l2 error of 1000 seeded draws sits within 2.0 percentage points
    of the frozen reference values and within 3 Monte Carlo sigma of the
    exact hypergeometric expectation, for both 97-review pool variants."""
    for n_pos in (39, 40):
        labels = [1] * n_pos + [0] * (97 - n_pos)
        ref = SentimentSplit(pos_pct=100.0 * n_pos / 97,
                             neg_pct=100.0 * (97 - n_pos) / 97)
        for size in (8, 18, 26):
            exact = hypergeometric_expected_l2(
                n_pos, 97, size, ref.pos_pct, ref.neg_pct)
            variance = hypergeometric_l2_variance(
                n_pos, 97, size, ref.pos_pct, ref.neg_pct)
            sigma = math.sqrt(variance / 1000)
            rep = l2_resample_error(labels, ref, size, repeats=1000, seed=97)
            assert abs(rep.l2_error - REFERENCE_L2[size]) <= 2.0, (n_pos, size)
            assert abs(rep.l2_error - exact) <= 3 * sigma, (n_pos, size)


# ---------------------------------------------------------------- a3

def test_a3_resampled_l2_agrees_with_exhaustive_enumeration():
    """On every population of size 4..12 and every positive count, 100k
    Monte Carlo repeats of the half-population poll agree with exhaustive
    subset enumeration within 0.5 percentage points."""
    assert exhaustive_l2([1, 1, 0, 0], 2, 50.0, 50.0) == \
        pytest.approx(23.570226039551585, abs=1e-12)
    for n in range(4, 13):
        size = n // 2
        for n_pos in range(n + 1):
            labels = [1] * n_pos + [0] * (n - n_pos)
            ref = SentimentSplit(pos_pct=100.0 * n_pos / n,
                                 neg_pct=100.0 * (n - n_pos) / n)
            exact = exhaustive_l2(labels, size, ref.pos_pct, ref.neg_pct)
            rep = l2_resample_error(labels, ref, size, repeats=100_000,
                                    seed=1234 + n * 100 + n_pos)
            assert abs(rep.l2_error - exact) <= 0.5, (n, n_pos)


# ---------------------------------------------------------------- a4

_DEGENERATE_LINE = ("stars_votes = 0stars_stars_stars_min = 2.0, "
                    "useful_votes = 0,")


def test_a4_review_wrapping_round_trips_hostile_text():
    """Wrapping then parsing 10,000 random reviews whose text contains the
    grammar's own markers recovers (text, stars) with zero errors; a
    degenerate numeric line classifies as MALFORMED."""
    gen = SplitMix64(20260819)
    pool = ["ok", "fine", "stars:", "review:", "votes,", "so-so", "5.0",
            ",", "--", "loud,", "quiet", "4.0,"]
    reviews = []
    for i in range(10_000):
        k = 1 + int(gen.next_float() * 12)
        text = " ".join(pool[int(gen.next_float() * len(pool))]
                        for _ in range(k))
        stars = 1 + int(gen.next_float() * 5)
        reviews.append(Review(review_id=f"r{i}", business_id="b",
                              stars=stars, useful=0, funny=0, cool=0,
                              text=text))
    lines = [review_line(r) for r in reviews]
    parsed = parse_stream(lines, CorpusFormat.REVIEW_STARS)
    assert parsed.total == 10_000
    assert parsed.error_rate == 0.0
    for review, record in zip(reviews, parsed.records):
        assert record.stars == review.stars
        assert record.text == sanitize_text(review.text)
    degenerate = classify_line(_DEGENERATE_LINE, CorpusFormat.NUMERIC_RECORDS)
    assert not degenerate.ok
    assert degenerate.status.value == "MALFORMED"


# ---------------------------------------------------------------- a5

def test_a5_pearson_agrees_with_direct_formula():
    """1,000 random vector pairs of length 5..100 agree with the direct
    covariance formula within 1e-12; the hand examples are exact."""
    gen = SplitMix64(5551212)
    for _ in range(1000):
        n = 5 + int(gen.next_float() * 96)
        x = [gen.next_float() * 200.0 - 100.0 for _ in range(n)]
        y = [gen.next_float() * 200.0 - 100.0 for _ in range(n)]
        assert abs(pearson(x, y) - pearson_direct(x, y)) <= 1e-12
    assert pearson((1, 2, 3), (2, 4, 6)) == pytest.approx(1.0, abs=1e-15)
    assert pearson((1, 2, 3), (3, 2, 1)) == pytest.approx(-1.0, abs=1e-15)
    assert pearson((1, 2, 3), (1, 3, 2)) == pytest.approx(0.5, abs=1e-15)


# ---------------------------------------------------------------- a6

def test_a6_generated_reviews_preserve_sentiment_direction(pop50k, classifier):
    """Positive-labeled reviews average at least one star above
    negative-labeled ones, both in the source population and across
    10,000 records generated by a model trained on it."""
    truth = avg_stars_by_sentiment(
        [(r.text, r.stars) for r in pop50k.reviews], classifier)
    truth_gap = (truth[SentimentLabel.POSITIVE]
                 - truth[SentimentLabel.NEGATIVE])
    assert truth_gap >= 1.0, truth
    corpus = build_review_corpus(pop50k, 25_000, seed=61)
    model = NgramModel.train(corpus.lines, order=5, alpha=0.001)
    out = model.generate(GenerationRequest(
        prompt="review:", n=10_000, seed=71, temperature=0.5))
    parsed = parse_stream(("review:" + c for c in out),
                          CorpusFormat.REVIEW_STARS)
    pairs = usable_pairs(parsed)
    assert len(pairs) >= 9_900
    generated = avg_stars_by_sentiment(pairs, classifier)
    generated_gap = (generated[SentimentLabel.POSITIVE]
                     - generated[SentimentLabel.NEGATIVE])
    assert generated_gap >= 1.0, generated


# ---------------------------------------------------------------- a7

_PROBES = [
    "no vegetarian options",
    "some vegetarian options",
    "several vegetarian options",
    "many vegetarian options",
]


def test_a7_masked_phrase_pipeline_runs_end_to_end(classifier, tmp_path):
    """Masking removes every trace of a phrase from the training corpus;
    the probe suite over the masked model still parses at >= 99% and all
    four report tables render."""
    base = synth_population(60_000, 424242)
    gen = SplitMix64(7)
    reviews = list(base.reviews)
    planted = 0
    for i in range(len(reviews)):
        if gen.next_float() < 0.01:
            r = reviews[i]
            reviews[i] = replace(
                r, text=r.text + " vegetarian options welcome")
            planted += 1
    assert planted > 400
    population = ReviewSet(reviews=reviews, provenance=base.provenance)
    masked = mask(population, "vegetarian options")
    # the filler vocabulary can produce the phrase on its own, so masking
    # removes at least the planted copies
    assert len(population) - len(masked) >= planted
    assert not any("vegetarian options" in r.text for r in masked)

    corpus = build_review_corpus(masked, 50_000, seed=31)
    assert all("vegetarian options" not in line for line in corpus.lines)
    model = NgramModel.train(corpus.lines, order=5, alpha=0.001)

    store = ExperimentStore(tmp_path / "store")
    exp = store.create(description="masked-phrase probes",
                       model_name=model.name(), probes=_PROBES, seed=2026,
                       hyperparams={"temperature": "0.5",
                                    "max_tokens": "256"})
    result = store.run_probe_suite(exp, model, per_probe_n=2500,
                                   classifier=classifier)
    assert result.total_rows == 10_000
    parse_rate = 1.0 - result.error_rate
    assert parse_rate >= 0.99, parse_rate

    truth_hist = StarHistogram(counts=tuple(masked.star_counts()))
    labels = [classifier(r.text).label for r in masked.reviews]
    reference = SentimentSplit.from_labels(labels)
    tables = {
        "T1": report(store, [exp.id], "T1", truth=truth_hist),
        "T2": report(store, exp.id, "T2",
                     truth_pairs=[(r.text, r.stars) for r in masked.reviews],
                     classifier=classifier),
        "T7": report(store, exp.id, "T7", population_labels=labels,
                     reference=reference, seed=11, classifier=classifier),
        "HIST": report(store, exp.id, "HIST", truth=truth_hist),
    }
    for name, table in tables.items():
        text = table.render("text")
        assert name in table.title
        assert text.count("\n") >= 2, name


# ---------------------------------------------------------------- a8

_RAW_REVIEWS = (
    '{"review_id": "r1", "business_id": "b1", "stars": 4, "useful": 1,'
    ' "funny": 0, "cool": 2, "text": "fine food"}\n'
    '{"review_id": "r2", "business_id": "b2", "stars": 2, "text": "slow service"}\n'
    '{"review_id": "r3", "business_id": "b1", "stars": 5, "text": "great value"}\n'
)
_RAW_BUSINESSES = (
    '{"business_id": "b1", "categories": "Restaurants, Vegan"}\n'
    '{"business_id": "b2", "categories": "Bars"}\n'
)


def _a8_commands(health_url: str) -> list[list[str]]:
    return [
        ["synth", "--n", "3000",
         "--star-weights", "0.12,0.10,0.14,0.24,0.40",
         "--positivity", "0.1,0.3,0.5,0.7,0.9", "--tokens", "6:14",
         "--seed", "414", "--out", "pop.rs"],
        ["ingest", "--reviews", "raw_reviews.jsonl",
         "--business", "businesses.jsonl", "--category", "Restaurants",
         "--out", "ingested.rs"],
        ["filter", "--in", "pop.rs", "--stars", "4,5", "--out", "high.rs"],
        ["corpus", "build", "--in", "pop.rs", "--format", "review-stars",
         "--lines", "2000", "--seed", "9", "--out", "corpus.rsc"],
        ["corpus", "build", "--in", "pop.rs", "--format", "numeric",
         "--lines", "2000", "--seed", "9", "--out", "ncorpus.rsc"],
        ["corpus", "mask", "--in", "pop.rs", "--phrase", "vegetarian options",
         "--out", "masked.rs"],
        ["corpus", "balance", "--in", "pop.rs", "--per-star", "40",
         "--seed", "3", "--out", "balanced.rs"],
        ["corpus", "isolate", "--in", "pop.rs", "--star", "5",
         "--out", "fives.rs"],
        ["corpus", "split", "--in", "corpus.rsc", "--format", "review-stars",
         "--fraction", "0.8", "--seed", "4", "--train-out", "train.rsc",
         "--test-out", "test.rsc"],
        ["train-ngram", "--corpus", "corpus.rsc", "--format", "review-stars",
         "--order", "4", "--alpha", "0.001", "--out", "model.ng"],
        ["generate", "--backend", "ngram:model.ng", "--prompt", "review:",
         "--n", "300", "--seed", "12", "--temperature", "0.5",
         "--out", "gen.txt"],
        ["generate", "--backend", "replay:pop.rs", "--n", "50",
         "--seed", "13", "--out", "replay.txt"],
        ["parse", "--format", "review-stars", "--in", "gen.txt",
         "--out", "parsed.csv", "--out-format", "csv"],
        ["parse", "--format", "review-stars", "--in", "gen.txt",
         "--out", "parsed.lines", "--out-format", "lines"],
        ["classify", "--in", "pop.rs", "--out", "labels.csv"],
        ["stats", "pearson", "--x", "1,2,3,4", "--y", "2,4,7,8"],
        ["stats", "hist", "--in", "pop.rs", "--format", "csv",
         "--out", "hist.csv"],
        ["stats", "l2", "--in", "balanced.rs", "--sample-size", "8",
         "--repeats", "200", "--seed", "5"],
        ["stats", "avg-stars", "--in", "pop.rs", "--format", "csv",
         "--out", "avg.csv"],
        ["experiment", "create", "--store", "store", "--description", "d",
         "--model-name", "m", "--probe", "", "--probe", "good",
         "--seed", "21", "--hyper", "temperature=0.5"],
        ["experiment", "run", "--store", "store", "--id", "000001",
         "--backend", "ngram:model.ng", "--n", "40"],
        ["experiment", "report", "--store", "store", "--table", "T1",
         "--ids", "000001", "--truth", "pop.rs", "--out", "t1.txt"],
        ["experiment", "report", "--store", "store", "--table", "HIST",
         "--ids", "000001", "--format", "csv", "--out", "hist_report.csv"],
        ["backend-health", "--url", health_url],
    ]


class _HealthStub(http.server.BaseHTTPRequestHandler):
    def do_GET(self):
        body = b'{"status": "ok", "model": "stub"}'
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def _run_cli_pipeline(root: Path, commands: list[list[str]],
                      env: dict) -> list[tuple]:
    root.mkdir()
    (root / "raw_reviews.jsonl").write_text(_RAW_REVIEWS, encoding="utf-8")
    (root / "businesses.jsonl").write_text(_RAW_BUSINESSES, encoding="utf-8")
    transcript = []
    for args in commands:
        proc = subprocess.run([sys.executable, "-m", "lmpoll", *args],
                              cwd=root, env=env, capture_output=True)
        assert proc.returncode == 0, (args, proc.stderr.decode())
        transcript.append((tuple(args), proc.stdout))
    return transcript


def _dir_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_a8_cli_runs_are_byte_reproducible(tmp_path):
    """Re-running every CLI command with identical flags and seeds yields
    byte-identical files and stdout. The experiment timestamp honors
    SOURCE_DATE_EPOCH so even the store ledger is reproducible."""
    import os

    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _HealthStub)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        url = f"http://127.0.0.1:{server.server_address[1]}"
        commands = _a8_commands(url)
        env = dict(os.environ, SOURCE_DATE_EPOCH="1755561600")
        first = _run_cli_pipeline(tmp_path / "a", commands, env)
        second = _run_cli_pipeline(tmp_path / "b", commands, env)
        assert first == second
        files_a = _dir_bytes(tmp_path / "a")
        files_b = _dir_bytes(tmp_path / "b")
        assert sorted(files_a) == sorted(files_b)
        for name in files_a:
            assert files_a[name] == files_b[name], name
    finally:
        server.shutdown()
        server.server_close()

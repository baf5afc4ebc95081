"""Command-line interface.

Every stochastic subcommand requires an explicit --seed; there is no hidden
randomness anywhere in the pipeline, so rerunning a command with the same
inputs and seed reproduces its output files byte for byte.

Exit codes: 0 success, 1 argument errors (including usage errors), 2 data
errors, 3 backend errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analyze, corpus as corpus_mod, experiment as exp_mod, ingest, lm, parse as parse_mod, stats
from .errors import ArgumentError, BackendError, DataError, LmpollError


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats_csv(text: str, n: int, what: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ArgumentError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ArgumentError(f"{what}: {exc}") from exc


def _ints_csv(text: str, what: str) -> list[int]:
    try:
        return [int(p.strip()) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ArgumentError(f"{what}: {exc}") from exc


def _token_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ArgumentError(f"token range must look like LO:HI, got {text!r}")
    try:
        return int(lo), int(hi)
    except ValueError as exc:
        raise ArgumentError(f"token range: {exc}") from exc


def _classifier(args) -> analyze.LexiconClassifier:
    pos = analyze.load_lexicon(args.pos_lexicon) if args.pos_lexicon \
        else analyze.builtin_positive()
    neg = analyze.load_lexicon(args.neg_lexicon) if args.neg_lexicon \
        else analyze.builtin_negative()
    return analyze.LexiconClassifier(positive=pos, negative=neg)


def _add_lexicon_flags(p) -> None:
    p.add_argument("--pos-lexicon", help="positive lexicon file (default: built-in)")
    p.add_argument("--neg-lexicon", help="negative lexicon file (default: built-in)")


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _note(args, message: str) -> None:
    """Progress chatter, shown only under --verbose, kept off stdout."""
    if getattr(args, "verbose", 0):
        print(message, file=sys.stderr)


def _hyper(args) -> dict[str, str]:
    hyper = {}
    for item in args.hyper or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ArgumentError(f"--hyper needs key=value, got {item!r}")
        hyper[key] = value
    return hyper


# -- subcommand bodies ------------------------------------------------------


def _cmd_synth(args) -> int:
    spec = ingest.SynthSpec(
        n=args.n,
        star_weights=_floats_csv(args.star_weights, 5, "--star-weights"),
        positivity_by_star=_floats_csv(args.positivity, 5, "--positivity"),
        tokens_min=_token_range(args.tokens)[0],
        tokens_max=_token_range(args.tokens)[1],
        seed=args.seed,
    )
    def words(flag, builtin):
        return list(analyze.load_lexicon(flag).words) if flag else list(builtin().words)
    rs = ingest.synthesize_population(
        spec,
        words(args.pos_lexicon, analyze.builtin_positive),
        words(args.neg_lexicon, analyze.builtin_negative),
        words(args.filler_lexicon, analyze.builtin_filler),
    )
    rs.save(args.out)
    print(f"synthesized {len(rs)} reviews -> {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    rs = ingest.ingest_reviews(
        reviews_path=args.reviews,
        business_path=args.business,
        category=args.category,
        skip_bad_lines=args.skip_bad_lines,
    )
    rs.save(args.out)
    print(f"ingested {len(rs)} reviews -> {args.out}")
    if "skipped" in rs.provenance:
        print(rs.provenance)
    return 0


def _cmd_filter(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    _note(args, f"loaded {len(rs)} reviews ({rs.provenance})")
    out = ingest.filter_reviews(
        rs,
        stars=_ints_csv(args.stars, "--stars") if args.stars else None,
        contains=args.contains,
        not_contains=args.not_contains,
    )
    out.save(args.out)
    print(f"kept {len(out)} of {len(rs)} reviews -> {args.out}")
    return 0


def _cmd_corpus_build(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    fmt = corpus_mod.CorpusFormat.from_name(args.format)
    if fmt is corpus_mod.CorpusFormat.NUMERIC_RECORDS:
        c = corpus_mod.build_numeric_corpus(rs, args.lines, args.seed)
    else:
        c = corpus_mod.build_review_corpus(rs, args.lines, args.seed)
    c.write(args.out)
    print(f"wrote {len(c)} {fmt.value} records -> {args.out}")
    return 0


def _cmd_corpus_mask(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    out = corpus_mod.mask(rs, args.phrase)
    out.save(args.out)
    print(f"masked {args.phrase!r}: kept {len(out)} of {len(rs)} -> {args.out}")
    return 0


def _cmd_corpus_balance(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    out = corpus_mod.balance_by_stars(rs, args.per_star, args.seed)
    out.save(args.out)
    print(f"balanced to {args.per_star} per star ({len(out)} total) -> {args.out}")
    return 0


def _cmd_corpus_isolate(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    out = corpus_mod.isolate_star(rs, args.star)
    out.save(args.out)
    print(f"isolated star {args.star}: {len(out)} reviews -> {args.out}")
    return 0


def _cmd_corpus_split(args) -> int:
    fmt = corpus_mod.CorpusFormat.from_name(args.format)
    c = corpus_mod.Corpus.read(args.infile, fmt)
    train, test = corpus_mod.split(c, args.fraction, args.seed)
    train.write(args.train_out)
    test.write(args.test_out)
    print(f"split {len(c)} records into {len(train)} train / {len(test)} test")
    return 0


def _cmd_train_ngram(args) -> int:
    fmt = corpus_mod.CorpusFormat.from_name(args.format)
    c = corpus_mod.Corpus.read(args.corpus, fmt)
    model = lm.train_ngram(c, order=args.order, smoothing_alpha=args.alpha)
    model.save(args.out)
    print(f"trained {model.name()} on {len(c)} records "
          f"(vocab {len(model.vocab)}) -> {args.out}")
    return 0


def _cmd_generate(args) -> int:
    backend = lm.make_backend(args.backend)
    request = lm.GenerationRequest(
        prompt=args.prompt,
        n=args.n,
        seed=args.seed,
        max_tokens=args.max_tokens,
        temperature=args.temperature,
    )
    completions = backend.generate(request)
    if args.completions_only or getattr(backend, "emits_full_records", False):
        lines = completions
    else:
        lines = [request.prompt + c for c in completions]
    with Path(args.out).open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    print(f"generated {len(lines)} completions from {backend.name()} -> {args.out}")
    return 0


def _cmd_parse(args) -> int:
    fmt = corpus_mod.CorpusFormat.from_name(args.format)
    if args.infile == "-":
        text = sys.stdin.read()
    else:
        text = Path(args.infile).read_text(encoding="utf-8")
    report = parse_mod.parse_stream(text, fmt)
    print(f"records {report.total}  malformed {report.malformed}  "
          f"error {100.0 * report.error_rate:.2f}%")
    if args.out:
        if args.out_format == "csv":
            table = exp_mod.Table(
                title="records",
                headers=["status", "reason", "stars", "useful", "funny", "cool",
                         "text", "raw"],
                rows=[[r.status.value, r.reason or "", _opt(r.stars), _opt(r.useful),
                       _opt(r.funny), _opt(r.cool), r.text or "", r.raw]
                      for r in report.records],
            )
            Path(args.out).write_text(table.render("csv"), encoding="utf-8")
        else:
            with Path(args.out).open("w", encoding="utf-8", newline="\n") as fh:
                for r in report.records:
                    fh.write(json.dumps({
                        "status": r.status.value, "reason": r.reason,
                        "stars": r.stars, "useful": r.useful, "funny": r.funny,
                        "cool": r.cool, "text": r.text, "raw": r.raw,
                    }, ensure_ascii=False, sort_keys=True) + "\n")
    return 0


def _opt(v) -> str:
    return "" if v is None else str(v)


def _cmd_classify(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    if not len(rs):
        raise DataError(f"{args.infile}: no reviews to classify")
    clf = _classifier(args)
    results = [(r.review_id, clf(r.text)) for r in rs]
    split = stats.SentimentSplit.from_labels(res.label for _, res in results)
    print(f"POSITIVE {split.pos_pct:.2f}%  NEGATIVE {split.neg_pct:.2f}%  "
          f"(n={len(results)})")
    if args.out:
        if args.out_format == "csv":
            table = exp_mod.Table(
                title="classified",
                headers=["review_id", "label", "pos_hits", "neg_hits"],
                rows=[[rid, res.label.value, str(res.pos_hits), str(res.neg_hits)]
                      for rid, res in results],
            )
            Path(args.out).write_text(table.render("csv"), encoding="utf-8")
        else:
            with Path(args.out).open("w", encoding="utf-8", newline="\n") as fh:
                for rid, res in results:
                    fh.write(json.dumps({
                        "review_id": rid, "label": res.label.value,
                        "pos_hits": res.pos_hits, "neg_hits": res.neg_hits,
                    }, sort_keys=True) + "\n")
    return 0


def _cmd_stats_pearson(args) -> int:
    x = [float(p) for p in args.x.split(",")]
    y = [float(p) for p in args.y.split(",")]
    print(f"{stats.pearson(x, y):.12g}")
    return 0


def _cmd_stats_hist(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    hist = stats.star_histogram(r.stars for r in rs)
    pct = hist.percentages()
    table = exp_mod.Table(
        title="star histogram",
        headers=["stars", "count", "%"],
        rows=[[str(s + 1), str(hist.counts[s]), f"{pct[s]:.2f}"] for s in range(5)],
    )
    _write_or_print(table.render(args.format), args.out)
    return 0


def _cmd_stats_l2(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    clf = _classifier(args)
    labels = [clf(r.text).label for r in rs]
    if args.reference:
        ref_pos, ref_neg = _floats_csv(args.reference, 2, "--reference")
        reference = stats.SentimentSplit(pos_pct=ref_pos, neg_pct=ref_neg)
    else:
        reference = stats.SentimentSplit.from_labels(labels)
    rep = stats.l2_resample_error(
        labels, reference, args.sample_size, args.repeats,
        without_replacement=not args.with_replacement, seed=args.seed,
    )
    print(f"sample_size {rep.sample_size}  repeats {rep.repeats}  "
          f"l2_error {rep.l2_error:.2f}  stderr {rep.l2_stderr:.4f}  "
          f"mean_split {rep.mean_split.pos_pct:.2f}/{rep.mean_split.neg_pct:.2f}")
    return 0


def _cmd_stats_avg_stars(args) -> int:
    rs = ingest.ReviewSet.load(args.infile)
    if not len(rs):
        raise DataError(f"{args.infile}: empty review set")
    clf = _classifier(args)
    avg = stats.avg_stars_by_sentiment(((r.text, r.stars) for r in rs), clf)
    table = exp_mod.Table(
        title="average stars by sentiment",
        headers=["sentiment", "avg stars"],
        rows=[[lab.value, f"{avg[lab]:.2f}"]
              for lab in (analyze.SentimentLabel.NEGATIVE,
                          analyze.SentimentLabel.POSITIVE) if lab in avg],
    )
    _write_or_print(table.render(args.format), args.out)
    return 0


def _cmd_exp_create(args) -> int:
    store = exp_mod.ExperimentStore(args.store)
    rec = store.create(
        description=args.description,
        model_name=args.model_name,
        probes=args.probe or [],
        seed=args.seed,
        hyperparams=_hyper(args),
    )
    print(rec.id)
    return 0


def _cmd_exp_run(args) -> int:
    store = exp_mod.ExperimentStore(args.store)
    backend = lm.make_backend(args.backend)
    clf = _classifier(args)
    if args.id and args.probe:
        raise ArgumentError("give --id or --probe, not both")
    if args.id:
        exp_id = args.id
    else:
        if not args.probe:
            raise ArgumentError("either --id or at least one --probe is required")
        if args.seed is None:
            raise ArgumentError("an ad-hoc run needs --seed")
        rec = store.create(
            description=args.description,
            model_name=args.model_name or backend.name(),
            probes=args.probe,
            seed=args.seed,
            hyperparams=_hyper(args),
        )
        exp_id = rec.id
        print(f"experiment {exp_id}")
    result = store.run_probe_suite(exp_id, backend, args.n, classifier=clf)
    for p in result.per_probe:
        split = f"{p.split.pos_pct:.2f}/{p.split.neg_pct:.2f}" if p.split else "-"
        mean = f"{p.mean_stars:.2f}" if p.mean_stars is not None else "-"
        print(f"probe {p.probe!r}: rows {p.rows}  malformed {p.malformed}  "
              f"split {split}  mean_stars {mean}")
    print(f"total rows {result.total_rows}  error "
          f"{100.0 * result.error_rate:.2f}%")
    return 0


def _cmd_exp_report(args) -> int:
    store = exp_mod.ExperimentStore(args.store)
    kwargs: dict = {"include_partial": args.include_partial}
    if args.table == "T1":
        if not args.truth:
            raise ArgumentError("table T1 needs --truth POPULATION.rs")
        truth_rs = ingest.ReviewSet.load(args.truth)
        kwargs["truth"] = stats.star_histogram(r.stars for r in truth_rs)
    elif args.table == "T2":
        if not args.truth:
            raise ArgumentError("table T2 needs --truth POPULATION.rs")
        truth_rs = ingest.ReviewSet.load(args.truth)
        kwargs["truth_pairs"] = [(r.text, r.stars) for r in truth_rs]
        kwargs["classifier"] = _classifier(args)
    elif args.table == "T7":
        if not args.population:
            raise ArgumentError("table T7 needs --population POPULATION.rs")
        if args.baseline_seed is None:
            raise ArgumentError("table T7 needs --baseline-seed")
        pop = ingest.ReviewSet.load(args.population)
        clf = _classifier(args)
        labels = [clf(r.text).label for r in pop]
        if args.reference:
            rp, rn = _floats_csv(args.reference, 2, "--reference")
            reference = stats.SentimentSplit(pos_pct=rp, neg_pct=rn)
        else:
            reference = stats.SentimentSplit.from_labels(labels)
        kwargs.update(
            population_labels=labels,
            reference=reference,
            sizes=_ints_csv(args.baseline_sizes, "--baseline-sizes"),
            repeats=args.baseline_repeats,
            seed=args.baseline_seed,
            classifier=clf,
        )
    else:  # HIST
        if args.truth:
            truth_rs = ingest.ReviewSet.load(args.truth)
            kwargs["truth"] = stats.star_histogram(r.stars for r in truth_rs)
    table = exp_mod.report(store, _ids(args), args.table, **kwargs)
    _write_or_print(table.render(args.format), args.out)
    return 0


def _ids(args) -> list[str]:
    if not args.ids:
        raise ArgumentError("--ids is required for this report")
    return [p.strip() for p in args.ids.split(",") if p.strip()]


def _cmd_backend_health(args) -> int:
    info = lm.remote_health(args.url)
    print(json.dumps(info, sort_keys=True))
    return 0


# -- parser wiring ----------------------------------------------------------


def build_parser() -> _Parser:
    root = _Parser(prog="lmpoll", description=__doc__)
    root.add_argument("--threads", type=int, default=1, metavar="N",
                      help="cap internal parallelism (current pipelines are "
                           "single-threaded; the flag is accepted for "
                           "forward compatibility)")
    root.add_argument("-v", "--verbose", action="count", default=0,
                      help="progress chatter on stderr")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a seeded review population")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--star-weights", required=True,
                   help="relative weights for stars 1..5, e.g. 0.12,0.10,0.14,0.24,0.40")
    p.add_argument("--positivity", required=True,
                   help="per-star positive-token probability, e.g. 0.1,0.3,0.5,0.7,0.9")
    p.add_argument("--tokens", required=True, help="token count range LO:HI")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_lexicon_flags(p)
    p.add_argument("--filler-lexicon", help="filler word file (default: built-in)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="load reviews from JSONL dumps")
    p.add_argument("--reviews", required=True)
    p.add_argument("--business")
    p.add_argument("--category")
    p.add_argument("--skip-bad-lines", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("filter", help="subset a review set")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--stars", help="comma-separated star values to keep")
    p.add_argument("--contains")
    p.add_argument("--not-contains")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filter)

    pc = sub.add_parser("corpus", help="corpus construction operations")
    csub = pc.add_subparsers(dest="corpus_command", required=True)

    p = csub.add_parser("build", help="sample reviews and render records")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", required=True, choices=["numeric", "review-stars"])
    p.add_argument("--lines", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corpus_build)

    p = csub.add_parser("mask", help="drop reviews containing a phrase")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--phrase", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corpus_mask)

    p = csub.add_parser("balance", help="equal review counts per star")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--per-star", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corpus_balance)

    p = csub.add_parser("isolate", help="keep one star rating")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--star", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corpus_isolate)

    p = csub.add_parser("split", help="shuffle and split a corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", required=True, choices=["numeric", "review-stars"])
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(func=_cmd_corpus_split)

    p = sub.add_parser("train-ngram", help="train the n-gram surrogate model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", required=True, choices=["numeric", "review-stars"])
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_ngram)

    p = sub.add_parser("generate", help="poll a backend for completions")
    p.add_argument("--backend", required=True,
                   help="ngram:MODEL.ng, replay:SET.rs or remote:URL")
    p.add_argument("--prompt", default="")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-tokens", type=int, default=256)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--completions-only", action="store_true",
                   help="write bare completions instead of prompt+completion records")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("parse", help="classify a record stream")
    p.add_argument("--format", required=True, choices=["numeric", "review-stars"],
                   help="record grammar of the stream")
    p.add_argument("--in", dest="infile", required=True, help="file path or - for stdin")
    p.add_argument("--out", help="write per-record results here")
    p.add_argument("--out-format", choices=["csv", "lines"], default="csv",
                   help="shape of the per-record output file")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("classify", help="sentiment-label a review set")
    p.add_argument("--in", dest="infile", required=True)
    _add_lexicon_flags(p)
    p.add_argument("--out")
    p.add_argument("--format", dest="out_format", choices=["csv", "lines"],
                   default="csv", help="shape of the per-review output file")
    p.set_defaults(func=_cmd_classify)

    ps = sub.add_parser("stats", help="descriptive statistics")
    ssub = ps.add_subparsers(dest="stats_command", required=True)

    p = ssub.add_parser("pearson", help="correlation of two comma-separated vectors")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.set_defaults(func=_cmd_stats_pearson)

    p = ssub.add_parser("hist", help="star histogram of a review set")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats_hist)

    p = ssub.add_parser("l2", help="resampled polling error vs a reference split")
    p.add_argument("--in", dest="infile", required=True)
    _add_lexicon_flags(p)
    p.add_argument("--sample-size", type=int, required=True)
    p.add_argument("--repeats", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reference", help="POS,NEG percentages (default: population split)")
    p.add_argument("--with-replacement", action="store_true")
    p.set_defaults(func=_cmd_stats_l2)

    p = ssub.add_parser("avg-stars", help="average stars by sentiment label")
    p.add_argument("--in", dest="infile", required=True)
    _add_lexicon_flags(p)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats_avg_stars)

    pe = sub.add_parser("experiment", help="experiment store operations")
    esub = pe.add_subparsers(dest="experiment_command", required=True)

    p = esub.add_parser("create", help="register an experiment")
    p.add_argument("--store", default="experiments",
                   help="store directory (default: experiments)")
    p.add_argument("--description", required=True)
    p.add_argument("--model-name", required=True)
    p.add_argument("--probe", action="append",
                   help="repeatable; an empty string polls unprompted")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--hyper", action="append", metavar="KEY=VALUE",
                   help="repeatable; recognized keys: temperature, max_tokens, format")
    p.set_defaults(func=_cmd_exp_create)

    p = esub.add_parser("run", help="run an experiment's probe suite")
    p.add_argument("--store", default="experiments",
                   help="store directory (default: experiments)")
    p.add_argument("--id", help="existing experiment id; omit to create one "
                                "ad hoc from --probe and --seed")
    p.add_argument("--backend", required=True)
    p.add_argument("--n", type=int, required=True, help="completions per probe")
    p.add_argument("--probe", action="append",
                   help="repeatable; registers an ad-hoc experiment")
    p.add_argument("--seed", type=int, help="seed for an ad-hoc experiment")
    p.add_argument("--description", default="")
    p.add_argument("--model-name", default="",
                   help="ad-hoc model name (default: the backend's)")
    p.add_argument("--hyper", action="append", metavar="KEY=VALUE")
    _add_lexicon_flags(p)
    p.set_defaults(func=_cmd_exp_run)

    p = esub.add_parser("report", help="render a stored experiment as a table")
    p.add_argument("--store", default="experiments",
                   help="store directory (default: experiments)")
    p.add_argument("--table", required=True, choices=list(exp_mod.REPORT_TABLES))
    p.add_argument("--ids", help="experiment id(s), comma-separated")
    p.add_argument("--truth", help="ground-truth population .rs file")
    p.add_argument("--population", help="population .rs for T7 baselines")
    p.add_argument("--reference", help="POS,NEG reference split percentages")
    p.add_argument("--baseline-sizes", default="8,18,26")
    p.add_argument("--baseline-repeats", type=int, default=1000)
    p.add_argument("--baseline-seed", type=int)
    p.add_argument("--include-partial", action="store_true",
                   help="report experiments whose suite aborted mid-way")
    _add_lexicon_flags(p)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_exp_report)

    p = sub.add_parser("backend-health", help="query a remote backend's health")
    p.add_argument("--url", required=True)
    p.set_defaults(func=_cmd_backend_health)

    return root


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LmpollError as exc:
        print(f"lmpoll: error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 2)
    except FileNotFoundError as exc:
        print(f"lmpoll: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Experiment tracking: an append-only store, a probe-suite runner, and
report builders.

Store layout under a root directory:

    experiments.jsonl   one JSON object per experiment event; re-appending
                        an experiment id amends it (last record wins)
    rows/<id>.jsonl     one JSON object per generated completion
    store.lock          cross-process mutex; a held lock makes writers fail
                        fast with StoreBusyError instead of blocking

Row files carry no timestamps, so a rerun with the same seeds reproduces
them byte for byte; the experiment records carry the (non-reproducible)
creation time instead.

Reports are pure functions of the stored rows: rendering the same table
over an unchanged store is byte-identical. Experiments flagged partial
(their suite aborted mid-way) are excluded from reports unless explicitly
included.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

from filelock import FileLock, Timeout

from .analyze import SentimentLabel, SentimentResult
from .corpus import REVIEW_PREFIX, CorpusFormat
from .errors import ArgumentError, BackendError, DataError, StoreBusyError
from .lm import GenerationBackend, GenerationRequest
from .parse import classify_line
from .rng import check_seed, child_seed
from .stats import (
    BaselineReport,
    SentimentSplit,
    StarHistogram,
    avg_stars_by_sentiment,
    l2_resample_error,
    pearson,
    pct_difference,
    split_l2,
    star_histogram,
)

_ID_WIDTH = 6


def _utc_now() -> str:
    """Creation timestamp; honors SOURCE_DATE_EPOCH for reproducible runs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.fromtimestamp(int(epoch), timezone.utc)
    else:
        moment = datetime.now(timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")

REPORT_TABLES = ("T1", "T2", "T7", "HIST")


@dataclass
class ExperimentRecord:
    """One experiment's registration (amendments re-append the full record)."""

    id: str
    description: str
    model_name: str
    probes: list[str]
    seed: int
    hyperparams: dict[str, str]
    created_at: str
    partial: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_obj(cls, obj: dict) -> "ExperimentRecord":
        return cls(
            id=str(obj["id"]),
            description=str(obj.get("description", "")),
            model_name=str(obj.get("model_name", "")),
            probes=[str(p) for p in obj.get("probes", [])],
            seed=int(obj.get("seed", 0)),
            hyperparams={str(k): str(v) for k, v in obj.get("hyperparams", {}).items()},
            created_at=str(obj.get("created_at", "")),
            partial=bool(obj.get("partial", False)),
        )


@dataclass(frozen=True)
class GenerationRow:
    """One completion and what the pipeline made of it."""

    experiment_id: str
    probe_ordinal: int
    raw: str
    parse_status: str
    stars: int | None = None
    sentiment_label: str | None = None
    pos_hits: int | None = None
    neg_hits: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_obj(cls, obj: dict) -> "GenerationRow":
        return cls(
            experiment_id=str(obj["experiment_id"]),
            probe_ordinal=int(obj["probe_ordinal"]),
            raw=str(obj["raw"]),
            parse_status=str(obj["parse_status"]),
            stars=None if obj.get("stars") is None else int(obj["stars"]),
            sentiment_label=obj.get("sentiment_label"),
            pos_hits=None if obj.get("pos_hits") is None else int(obj["pos_hits"]),
            neg_hits=None if obj.get("neg_hits") is None else int(obj["neg_hits"]),
        )


@dataclass
class ProbeSummary:
    probe: str
    rows: int
    malformed: int
    error_rate: float
    split: SentimentSplit | None
    mean_stars: float | None


@dataclass
class SuiteResult:
    experiment_id: str
    per_probe: list[ProbeSummary]

    @property
    def total_rows(self) -> int:
        return sum(p.rows for p in self.per_probe)

    @property
    def error_rate(self) -> float:
        total = self.total_rows
        if not total:
            return 0.0
        return sum(p.malformed for p in self.per_probe) / total


class ExperimentStore:
    """Append-only experiment ledger rooted at a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "rows").mkdir(exist_ok=True)
        self._lock = FileLock(str(self.root / "store.lock"))

    def _acquire(self):
        try:
            return self._lock.acquire(timeout=0)
        except Timeout as exc:
            raise StoreBusyError(
                f"experiment store at {self.root} is locked by another process"
            ) from exc

    # -- experiments ------------------------------------------------------

    def _experiments_path(self) -> Path:
        return self.root / "experiments.jsonl"

    def _read_all(self) -> dict[str, ExperimentRecord]:
        path = self._experiments_path()
        out: dict[str, ExperimentRecord] = {}
        if not path.exists():
            return out
        for line_no, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = ExperimentRecord.from_obj(json.loads(line))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: bad experiment record ({exc})") from exc
            out[rec.id] = rec  # last record for an id wins
        return out

    def list_experiments(self) -> list[ExperimentRecord]:
        return sorted(self._read_all().values(), key=lambda r: r.id)

    def get(self, experiment_id: str) -> ExperimentRecord:
        recs = self._read_all()
        if experiment_id not in recs:
            raise ArgumentError(f"no experiment {experiment_id!r} in {self.root}")
        return recs[experiment_id]

    def _append_record(self, rec: ExperimentRecord) -> None:
        with self._experiments_path().open("a", encoding="utf-8", newline="\n") as fh:
            fh.write(rec.to_json() + "\n")

    def create(
        self,
        description: str,
        model_name: str,
        probes: Sequence[str],
        seed: int,
        hyperparams: dict[str, str] | None = None,
    ) -> ExperimentRecord:
        check_seed(seed)
        hyper = {str(k): str(v) for k, v in (hyperparams or {}).items()}
        with self._acquire():
            existing = self._read_all()
            next_num = 1 + max((int(i) for i in existing), default=0)
            rec = ExperimentRecord(
                id=f"{next_num:0{_ID_WIDTH}d}",
                description=description,
                model_name=model_name,
                probes=list(probes),
                seed=seed,
                hyperparams=hyper,
                created_at=_utc_now(),
            )
            self._append_record(rec)
        return rec

    def mark_partial(self, experiment_id: str) -> None:
        """Amend an experiment as partially run (suite aborted mid-way)."""
        with self._acquire():
            rec = self.get(experiment_id)
            rec.partial = True
            self._append_record(rec)

    # -- rows -------------------------------------------------------------

    def rows_path(self, experiment_id: str) -> Path:
        return self.root / "rows" / f"{experiment_id}.jsonl"

    def append_rows(self, experiment_id: str, rows: Sequence[GenerationRow]) -> None:
        """Persist rows for an existing experiment.

        Referential integrity is enforced here: rows for an id that is not
        in experiments.jsonl are refused, and every row must carry the id
        it is filed under.
        """
        for row in rows:
            if row.experiment_id != experiment_id:
                raise ArgumentError(
                    f"row carries experiment_id {row.experiment_id!r}, "
                    f"expected {experiment_id!r}"
                )
        with self._acquire():
            if experiment_id not in self._read_all():
                raise ArgumentError(
                    f"cannot write rows: no experiment {experiment_id!r} in {self.root}"
                )
            with self.rows_path(experiment_id).open("a", encoding="utf-8",
                                                    newline="\n") as fh:
                for row in rows:
                    fh.write(row.to_json() + "\n")

    def read_rows(self, experiment_id: str) -> list[GenerationRow]:
        path = self.rows_path(experiment_id)
        if not path.exists():
            return []
        out = []
        for line_no, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                out.append(GenerationRow.from_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise DataError(f"{path}:{line_no}: bad row record ({exc})") from exc
        return out

    # -- suite runner -----------------------------------------------------

    def run_probe_suite(
        self,
        exp: "ExperimentRecord | str",
        backend: GenerationBackend,
        per_probe_n: int,
        classifier: Callable[[str], SentimentResult] | None = None,
    ) -> SuiteResult:
        """Generate per_probe_n completions per probe and persist the rows.

        Probe i of the experiment uses the i-th child stream of the
        experiment seed; hyperparams supply `temperature`, `max_tokens` and
        `format`. Continuation backends get review probes wrapped with the
        record prefix; full-record backends get the probe verbatim as a
        content filter. If the backend fails mid-suite, rows written so far
        survive and the experiment is amended with partial=True before the
        error is re-raised.
        """
        if per_probe_n < 1:
            raise ArgumentError(f"per_probe_n must be >= 1, got {per_probe_n}")
        experiment_id = exp.id if isinstance(exp, ExperimentRecord) else str(exp)
        exp = self.get(experiment_id)
        if not exp.probes:
            raise ArgumentError(f"experiment {experiment_id} has no probes to run")
        temperature = float(exp.hyperparams.get("temperature", "1.0"))
        max_tokens = int(exp.hyperparams.get("max_tokens", "256"))
        fmt = CorpusFormat.from_name(exp.hyperparams.get("format", "review-stars"))
        summaries = []
        for ordinal, probe in enumerate(exp.probes):
            if getattr(backend, "emits_full_records", False):
                prompt = probe
            elif fmt is CorpusFormat.REVIEW_STARS:
                prompt = REVIEW_PREFIX + probe if probe else REVIEW_PREFIX.rstrip()
            else:
                prompt = probe
            request = GenerationRequest(
                prompt=prompt,
                n=per_probe_n,
                seed=child_seed(exp.seed, ordinal),
                max_tokens=max_tokens,
                temperature=temperature,
            )
            try:
                completions = backend.generate(request)
            except BackendError:
                self.mark_partial(experiment_id)
                raise
            if getattr(backend, "emits_full_records", False):
                lines = completions
            else:
                lines = [prompt + c for c in completions]
            rows = []
            for raw in lines:
                rec = classify_line(raw, fmt)
                label = hits_pos = hits_neg = None
                if rec.ok and rec.text is not None and classifier is not None:
                    res = classifier(rec.text)
                    label = res.label.value
                    hits_pos = res.pos_hits
                    hits_neg = res.neg_hits
                rows.append(GenerationRow(
                    experiment_id=experiment_id,
                    probe_ordinal=ordinal,
                    raw=raw,
                    parse_status=rec.status.value,
                    stars=rec.stars,
                    sentiment_label=label,
                    pos_hits=hits_pos,
                    neg_hits=hits_neg,
                ))
            self.append_rows(experiment_id, rows)
            summaries.append(_summarize_probe(probe, rows))
        return SuiteResult(experiment_id=experiment_id, per_probe=summaries)


def _summarize_probe(probe: str, rows: Sequence[GenerationRow]) -> ProbeSummary:
    malformed = sum(1 for r in rows if r.parse_status != "OK")
    labels = [r.sentiment_label for r in rows if r.sentiment_label]
    split = None
    if labels:
        split = SentimentSplit.from_labels(
            SentimentLabel(lab) for lab in labels
        )
    starred = [r.stars for r in rows if r.parse_status == "OK" and r.stars]
    mean_stars = sum(starred) / len(starred) if starred else None
    return ProbeSummary(
        probe=probe,
        rows=len(rows),
        malformed=malformed,
        error_rate=malformed / len(rows) if rows else 0.0,
        split=split,
        mean_stars=mean_stars,
    )


def create_experiment(
    store: ExperimentStore,
    description: str,
    model_name: str,
    probes: Sequence[str],
    seed: int,
    hyperparams: dict[str, str] | None = None,
) -> ExperimentRecord:
    """Register an experiment in a store. See ExperimentStore.create."""
    return store.create(description, model_name, probes, seed, hyperparams)


def run_probe_suite(
    store: ExperimentStore,
    exp: ExperimentRecord | str,
    backend: GenerationBackend,
    per_probe_n: int,
    classifier: Callable[[str], SentimentResult] | None = None,
) -> SuiteResult:
    """Run an experiment's probes. See ExperimentStore.run_probe_suite."""
    return store.run_probe_suite(exp, backend, per_probe_n, classifier)


# -- report building -------------------------------------------------------


@dataclass
class Table:
    """A rendered-ready table: headers plus stringly rows."""

    title: str
    headers: list[str]
    rows: list[list[str]]

    def render(self, fmt: str = "text") -> str:
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(self.headers)
            writer.writerows(self.rows)
            return buf.getvalue()
        if fmt == "text":
            widths = [len(h) for h in self.headers]
            for row in self.rows:
                for i, cell in enumerate(row):
                    widths[i] = max(widths[i], len(cell))
            def line(cells):
                return "  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)).rstrip()
            out = [self.title, line(self.headers),
                   line(["-" * w for w in widths])]
            out.extend(line(r) for r in self.rows)
            return "\n".join(out) + "\n"
        raise ArgumentError(f"unknown table format {fmt!r} (text, csv)")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _reportable(store: ExperimentStore, experiment_id: str,
                include_partial: bool) -> ExperimentRecord:
    rec = store.get(experiment_id)
    if rec.partial and not include_partial:
        raise ArgumentError(
            f"experiment {experiment_id} is partial (its suite aborted); "
            "pass include_partial to report it anyway"
        )
    return rec


def experiment_stars(store: ExperimentStore, experiment_id: str) -> list[int]:
    return [r.stars for r in store.read_rows(experiment_id)
            if r.parse_status == "OK" and r.stars is not None]


def report_model_quality(
    store: ExperimentStore,
    experiment_ids: Sequence[str],
    truth: StarHistogram,
    include_partial: bool = False,
) -> Table:
    """Per-model parse error % and star-histogram correlation vs truth.

    The "model lines" column is each experiment's `lines` hyperparameter
    (the training-corpus size), falling back to the model name.
    """
    rows = []
    for exp_id in experiment_ids:
        exp = _reportable(store, exp_id, include_partial)
        recs = store.read_rows(exp_id)
        if not recs:
            raise ArgumentError(f"experiment {exp_id} has no rows")
        malformed = sum(1 for r in recs if r.parse_status != "OK")
        err_pct = 100.0 * malformed / len(recs)
        hist = star_histogram(experiment_stars(store, exp_id))
        corr = pearson(hist.as_list(), truth.as_list())
        label = exp.hyperparams.get("lines", exp.model_name or exp_id)
        rows.append([label, _fmt(err_pct), _fmt(100.0 * corr)])
    return Table(
        title="T1 model quality",
        headers=["model lines", "error %", "correlation %"],
        rows=rows,
    )


def report_sentiment_stars(
    store: ExperimentStore,
    experiment_id: str,
    truth_pairs: Sequence[tuple[str, int]],
    classifier: Callable[[str], SentimentResult],
    include_partial: bool = False,
) -> Table:
    """Average stars by sentiment, polled vs ground truth, with % diff."""
    _reportable(store, experiment_id, include_partial)
    gen_pairs = [(r.raw, r.stars) for r in store.read_rows(experiment_id)
                 if r.parse_status == "OK" and r.stars is not None]
    gen_text_pairs = []
    for raw, stars in gen_pairs:
        rec = classify_line(raw, CorpusFormat.REVIEW_STARS)
        if rec.ok:
            gen_text_pairs.append((rec.text, stars))
    if not gen_text_pairs:
        raise ArgumentError(f"experiment {experiment_id} has no usable review rows")
    gen_avg = avg_stars_by_sentiment(gen_text_pairs, classifier)
    truth_avg = avg_stars_by_sentiment(truth_pairs, classifier)
    rows = []
    for lab in (SentimentLabel.NEGATIVE, SentimentLabel.POSITIVE):
        if lab not in gen_avg or lab not in truth_avg:
            continue
        rows.append([
            lab.value,
            _fmt(gen_avg[lab]),
            _fmt(truth_avg[lab]),
            _fmt(pct_difference(gen_avg[lab], truth_avg[lab])),
        ])
    return Table(
        title="T2 average stars by sentiment",
        headers=["sentiment", "polled avg", "truth avg", "% difference"],
        rows=rows,
    )


def report_extrapolation(
    store: ExperimentStore,
    experiment_id: str,
    population_labels: Sequence,
    reference: SentimentSplit,
    sizes: Sequence[int],
    repeats: int,
    seed: int,
    classifier: Callable[[str], SentimentResult],
    include_partial: bool = False,
) -> tuple[Table, list[BaselineReport]]:
    """Polled sentiment split vs small-sample resampling baselines.

    Baseline row k: mean l2 error of `repeats` seeded draws of k labeled
    items from the population. Poll row: the l2 error of the sentiment
    split over the experiment's parseable completions.
    """
    exp = _reportable(store, experiment_id, include_partial)
    rows = [["ground truth", _fmt(reference.pos_pct), _fmt(reference.neg_pct), ""]]
    texts = []
    for r in store.read_rows(experiment_id):
        if r.parse_status != "OK":
            continue
        rec = classify_line(r.raw, CorpusFormat.REVIEW_STARS)
        if rec.ok:
            texts.append(rec.text)
    if not texts:
        raise ArgumentError(f"experiment {experiment_id} has no usable review rows")
    split = SentimentSplit.from_labels(classifier(t).label for t in texts)
    rows.append([exp.model_name or f"poll({len(texts)})",
                 _fmt(split.pos_pct), _fmt(split.neg_pct),
                 _fmt(split_l2(split, reference))])
    reports = []
    for i, size in enumerate(sizes):
        rep = l2_resample_error(population_labels, reference, size, repeats,
                                seed=child_seed(seed, i))
        reports.append(rep)
        rows.append([f"baseline({size})",
                     _fmt(rep.mean_split.pos_pct), _fmt(rep.mean_split.neg_pct),
                     _fmt(rep.l2_error)])
    table = Table(
        title="T7 extrapolation vs baselines",
        headers=["name", "Pos %", "Neg %", "Error l2"],
        rows=rows,
    )
    return table, reports


def report_star_histogram(
    store: ExperimentStore,
    experiment_id: str,
    truth: StarHistogram | None = None,
    include_partial: bool = False,
) -> Table:
    """Star histogram of an experiment's parseable records, optionally
    aligned with a ground-truth histogram."""
    _reportable(store, experiment_id, include_partial)
    hist = star_histogram(experiment_stars(store, experiment_id))
    headers = ["stars", "count", "%"]
    if truth is not None:
        headers += ["truth count", "truth %"]
    rows = []
    pct = hist.percentages()
    tpct = truth.percentages() if truth is not None else None
    for s in range(5):
        row = [str(s + 1), str(hist.counts[s]), _fmt(pct[s])]
        if truth is not None:
            row += [str(truth.counts[s]), _fmt(tpct[s])]
        rows.append(row)
    return Table(title="HIST star histogram", headers=headers, rows=rows)


def report(
    store: ExperimentStore,
    experiment_ids: str | Sequence[str],
    table: str,
    *,
    truth: StarHistogram | None = None,
    truth_pairs: Sequence[tuple[str, int]] | None = None,
    population_labels: Sequence | None = None,
    reference: SentimentSplit | None = None,
    sizes: Sequence[int] = (8, 18, 26),
    repeats: int = 1000,
    seed: int | None = None,
    classifier: Callable[[str], SentimentResult] | None = None,
    include_partial: bool = False,
) -> Table:
    """Build one of the named report tables over stored experiments.

    T1 compares several experiments' parse error and histogram correlation
    against a ground-truth histogram; T2 compares average stars by
    sentiment against ground-truth (text, stars) pairs; T7 compares the
    polled sentiment split against small-sample baselines resampled from a
    labeled population; HIST renders an experiment's star histogram.
    """
    if table not in REPORT_TABLES:
        raise ArgumentError(
            f"unknown table {table!r} (one of {', '.join(REPORT_TABLES)})"
        )
    ids = [experiment_ids] if isinstance(experiment_ids, str) else list(experiment_ids)
    if not ids:
        raise ArgumentError("report needs at least one experiment id")
    if table == "T1":
        if truth is None:
            raise ArgumentError("T1 needs a ground-truth star histogram")
        return report_model_quality(store, ids, truth, include_partial)
    if len(ids) != 1:
        raise ArgumentError(f"{table} reports over exactly one experiment")
    if table == "T2":
        if truth_pairs is None:
            raise ArgumentError("T2 needs ground-truth (text, stars) pairs")
        if classifier is None:
            raise ArgumentError("T2 needs a sentiment classifier")
        return report_sentiment_stars(store, ids[0], truth_pairs, classifier,
                                      include_partial)
    if table == "T7":
        if population_labels is None or reference is None:
            raise ArgumentError(
                "T7 needs a labeled population and a reference split"
            )
        if classifier is None:
            raise ArgumentError("T7 needs a sentiment classifier")
        if seed is None:
            raise ArgumentError("T7 baselines need an explicit seed")
        tbl, _ = report_extrapolation(store, ids[0], population_labels,
                                      reference, sizes, repeats, seed,
                                      classifier, include_partial)
        return tbl
    return report_star_histogram(store, ids[0], truth, include_partial)

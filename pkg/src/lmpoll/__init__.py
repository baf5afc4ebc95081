"""lmpoll: train small surrogate language models on wrapped review corpora,
poll them with prompts, and measure how well the polled answers track the
underlying population."""

__version__ = "0.1.0"

from .analyze import (
    Lexicon,
    LexiconClassifier,
    SentimentLabel,
    SentimentResult,
    affect_percentages,
    builtin_filler,
    builtin_negative,
    builtin_positive,
    classify,
    load_lexicon,
)
from .corpus import (
    Corpus,
    CorpusFormat,
    balance_by_stars,
    build_numeric_corpus,
    build_review_corpus,
    isolate_star,
    mask,
    sanitize_text,
    split,
)
from .errors import ArgumentError, BackendError, DataError, LmpollError, StoreBusyError
from .experiment import (
    ExperimentRecord,
    ExperimentStore,
    GenerationRow,
    SuiteResult,
    Table,
    create_experiment,
    report,
    report_extrapolation,
    report_model_quality,
    report_sentiment_stars,
    report_star_histogram,
    run_probe_suite,
)
from .ingest import (
    Review,
    ReviewSet,
    SynthSpec,
    filter_reviews,
    ingest_reviews,
    load_businesses,
    load_reviews,
    synthesize_population,
)
from .lm import (
    GenerationBackend,
    GenerationRequest,
    NgramModel,
    RemoteBackend,
    ReplayBackend,
    make_backend,
    remote_generate,
    remote_health,
    replay_generate,
    sample,
    train_ngram,
)
from .parse import ParsedRecord, ParseReport, ParseStatus, classify_line, parse_stream, usable_pairs
from .rng import SplitMix64, child_seed, mix64
from .stats import (
    BaselineReport,
    SentimentSplit,
    StarHistogram,
    avg_stars_by_sentiment,
    l2_resample_error,
    pct_difference,
    pearson,
    sentiment_split,
    split_l2,
    star_histogram,
)

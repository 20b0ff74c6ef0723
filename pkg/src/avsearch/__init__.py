"""avsearch: classifier-routed text-to-video retrieval for audiovisual archives."""

from .classifier import (
    QueryClass,
    QueryLabel,
    QuoteRulePolicy,
    QuoteSpeechClassifier,
    build_training_set,
    default_quote_rules,
    evaluate_classifier,
    rule_label,
)
from .corpus import (
    Annotation,
    AnnotationKind,
    AnnotationOrigin,
    Clip,
    Corpus,
    DatasetSplit,
    GroundTruthPair,
    ShotInterval,
    build_customised_test,
    build_customised_train,
    group_shots,
    make_split,
    synth_corpus,
)
from .embedding import HashingTextFeaturizer, TwoTowerRetriever, ranking_loss, similarity
from .evaluation import (
    ComparisonTable,
    MetricReport,
    compare,
    median_rank,
    rank_of_truth,
    recall_at_n,
    run_eval,
)
from .results import Backend, RankedResult
from .router import MethodKind, RetrievalMethod, RoutedQuery, route, query
from .textsearch import Bm25Index, TranscriptDoc
from .tokenization import tokenize
from .validation import UnencodableQueryError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationKind",
    "AnnotationOrigin",
    "Backend",
    "Bm25Index",
    "Clip",
    "ComparisonTable",
    "Corpus",
    "DatasetSplit",
    "GroundTruthPair",
    "HashingTextFeaturizer",
    "MethodKind",
    "MetricReport",
    "QueryClass",
    "QueryLabel",
    "QuoteRulePolicy",
    "QuoteSpeechClassifier",
    "RankedResult",
    "RetrievalMethod",
    "RoutedQuery",
    "ShotInterval",
    "TranscriptDoc",
    "TwoTowerRetriever",
    "UnencodableQueryError",
    "ValidationError",
    "build_customised_test",
    "build_customised_train",
    "build_training_set",
    "compare",
    "default_quote_rules",
    "evaluate_classifier",
    "group_shots",
    "make_split",
    "median_rank",
    "query",
    "rank_of_truth",
    "ranking_loss",
    "recall_at_n",
    "route",
    "rule_label",
    "run_eval",
    "similarity",
    "synth_corpus",
    "tokenize",
]

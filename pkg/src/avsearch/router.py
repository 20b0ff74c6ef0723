"""Routing layer: one query interface over the three retrieval methods.

Baseline and Customised always hit the embedding backend (they differ only in
which trained model is bound).  ClassifierEnhanced classifies each query and
dispatches quote/speech queries to full-text search over transcripts,
everything else to the embedding model.  Scores from the two backends live on
incomparable scales, so result lists are never mixed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .classifier import QueryClass, QueryLabel
from .results import Backend, RankedResult
from .validation import ValidationError, check_positive_int


class MethodKind(str, enum.Enum):
    BASELINE = "baseline"
    CUSTOMISED = "customised"
    CLASSIFIER_ENHANCED = "classifier_enhanced"


@dataclass(frozen=True)
class RoutedQuery:
    query_text: str
    backend_used: Backend
    decided_class: QueryClass | None = None


@dataclass
class RetrievalMethod:
    """A fully bound retrieval method: models plus the searchable clip set."""

    name: str
    kind: MethodKind
    retriever: object  # TwoTowerRetriever
    clip_ids: tuple
    clip_features: np.ndarray
    index: object | None = None  # Bm25Index
    classifier: object | None = None  # QuoteSpeechClassifier or QuoteRulePolicy
    fulltext_fallback: bool = False  # off by default: empty full-text stays empty

    def __post_init__(self):
        if self.retriever is None:
            raise ValidationError(f"method {self.name}: embedding model is not bound")
        if self.kind is MethodKind.CLASSIFIER_ENHANCED:
            if self.index is None or self.classifier is None:
                raise ValidationError(
                    f"method {self.name}: classifier-enhanced routing needs "
                    "both a classifier and a full-text index"
                )

    @property
    def corpus_size(self) -> int:
        return len(self.clip_ids)


def route(method: RetrievalMethod, query_text: str) -> RoutedQuery:
    """Decide the backend for one query; exhaustive and exclusive."""
    if method.kind is not MethodKind.CLASSIFIER_ENHANCED:
        return RoutedQuery(query_text=query_text, backend_used=Backend.EMBEDDING)
    decided = method.classifier.classify(query_text)
    backend = (
        Backend.FULLTEXT if decided.label is QueryLabel.QUOTE_SPEECH else Backend.EMBEDDING
    )
    return RoutedQuery(query_text=query_text, backend_used=backend, decided_class=decided)


def query(method: RetrievalMethod, query_text: str, k: int) -> list[RankedResult]:
    """Dispatch a query per its route and return a single-backend result list."""
    check_positive_int(k, "k")
    routed = route(method, query_text)
    if routed.backend_used is Backend.EMBEDDING:
        return method.retriever.retrieve(
            query_text, method.clip_ids, method.clip_features, k
        )
    results = method.index.search(query_text, k)
    if not results and method.fulltext_fallback:
        return method.retriever.retrieve(
            query_text, method.clip_ids, method.clip_features, k
        )
    return results

"""Inverted index with BM25 scoring over clip transcripts.

This is the quote/speech side of the engine: queries that reference what was
said in a clip are answered by lexical match against the transcript store.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from sklearn.base import BaseEstimator

from .results import Backend, RankedResult
from .tokenization import tokenize
from .validation import ValidationError, check_positive_int


@dataclass(frozen=True)
class TranscriptDoc:
    """One transcript per clip; empty text is allowed and simply never matches."""

    clip_id: str
    text: str


class Bm25Index(BaseEstimator):
    """Immutable-after-fit inverted index with BM25 document scoring.

    Parameters
    ----------
    k1, b : floats
        Standard BM25 term-frequency saturation and length-normalization
        constants.  Defaults 1.2 / 0.75.
    """

    def __init__(self, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b

    def fit(self, docs, y=None):
        """Build postings from TranscriptDocs (or (clip_id, text) pairs)."""
        postings: dict[str, list[tuple[str, int]]] = {}
        doc_len: dict[str, int] = {}
        for doc in docs:
            cid, text = (doc.clip_id, doc.text) if isinstance(doc, TranscriptDoc) else doc
            if cid in doc_len:
                raise ValidationError(f"duplicate clip_id in index build: {cid}")
            tokens = tokenize(text)
            doc_len[cid] = len(tokens)
            counts: dict[str, int] = {}
            for tok in tokens:
                counts[tok] = counts.get(tok, 0) + 1
            for term, tf in counts.items():
                postings.setdefault(term, []).append((cid, tf))
        for term in postings:
            postings[term].sort(key=lambda entry: entry[0])
        self.postings_ = postings
        self.doc_len_ = doc_len
        self.n_docs_ = len(doc_len)
        self.avgdl_ = sum(doc_len.values()) / self.n_docs_ if self.n_docs_ else 0.0
        return self

    def _idf(self, term: str) -> float:
        df = len(self.postings_.get(term, ()))
        if df == 0:
            return 0.0
        return math.log(1.0 + (self.n_docs_ - df + 0.5) / (df + 0.5))

    def score(self, query_terms, clip_id: str) -> float:
        """BM25 score of one document for a tokenized query; additive over terms."""
        if clip_id not in self.doc_len_:
            raise ValidationError(f"unknown clip_id: {clip_id}")
        dl = self.doc_len_[clip_id]
        total = 0.0
        for term in query_terms:
            tf = 0
            for cid, freq in self.postings_.get(term, ()):
                if cid == clip_id:
                    tf = freq
                    break
            if tf == 0:
                continue
            denom = tf + self.k1 * (1.0 - self.b + self.b * dl / self.avgdl_)
            total += self._idf(term) * tf * (self.k1 + 1.0) / denom
        return total

    def search(self, query_text: str, k: int) -> list[RankedResult]:
        """Top-k documents by BM25; zero-score documents are excluded."""
        check_positive_int(k, "k")
        terms = tokenize(query_text)
        scores: dict[str, float] = {}
        for term in terms:
            postings = self.postings_.get(term)
            if not postings:
                continue
            idf = self._idf(term)
            for cid, tf in postings:
                dl = self.doc_len_[cid]
                denom = tf + self.k1 * (1.0 - self.b + self.b * dl / self.avgdl_)
                scores[cid] = scores.get(cid, 0.0) + idf * tf * (self.k1 + 1.0) / denom
        ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[:k]
        return [
            RankedResult(clip_id=cid, score=s, rank=i + 1, backend=Backend.FULLTEXT)
            for i, (cid, s) in enumerate(ranked)
        ]

    def save(self, path: str) -> None:
        payload = {
            "k1": self.k1,
            "b": self.b,
            "postings": {t: [[cid, tf] for cid, tf in plist]
                         for t, plist in self.postings_.items()},
            "doc_len": self.doc_len_,
        }
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "Bm25Index":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        index = cls(k1=payload["k1"], b=payload["b"])
        index.postings_ = {
            t: [(cid, tf) for cid, tf in plist]
            for t, plist in payload["postings"].items()
        }
        index.doc_len_ = dict(payload["doc_len"])
        index.n_docs_ = len(index.doc_len_)
        index.avgdl_ = (
            sum(index.doc_len_.values()) / index.n_docs_ if index.n_docs_ else 0.0
        )
        return index

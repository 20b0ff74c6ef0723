"""Inverted index and BM25 scoring."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avsearch.results import Backend, check_result_list
from avsearch.textsearch import Bm25Index, TranscriptDoc
from avsearch.tokenization import tokenize
from avsearch.validation import ValidationError


class TestTokenize:
    def test_punctuation_and_case(self):
        assert tokenize('He said, "Hello!"') == ["he", "said", "hello"]

    def test_empty(self):
        assert tokenize("") == []

    def test_case_folding(self):
        assert tokenize("A a A") == ["a", "a", "a"]


@pytest.fixture
def tiny_index():
    return Bm25Index().fit([TranscriptDoc("d1", "a b"), TranscriptDoc("d2", "a")])


class TestBuildIndex:
    def test_empty(self):
        index = Bm25Index().fit([])
        assert index.n_docs_ == 0
        assert index.postings_ == {}
        assert index.search("anything", 5) == []

    def test_hand_counts(self, tiny_index):
        assert tiny_index.postings_["a"] == [("d1", 1), ("d2", 1)]
        assert tiny_index.postings_["b"] == [("d1", 1)]
        assert tiny_index.avgdl_ == 1.5
        assert tiny_index.doc_len_ == {"d1": 2, "d2": 1}

    def test_duplicate_rejected(self):
        with pytest.raises(ValidationError, match="duplicate"):
            Bm25Index().fit([TranscriptDoc("d", "x"), TranscriptDoc("d", "y")])

    def test_rebuild_identical(self):
        docs = [TranscriptDoc("d1", "a b c a"), TranscriptDoc("d2", "b")]
        a, b = Bm25Index().fit(docs), Bm25Index().fit(docs)
        assert a.postings_ == b.postings_ and a.avgdl_ == b.avgdl_

    def test_tf_sums_to_doc_len(self):
        docs = [
            TranscriptDoc("x", "one two two three, three? THREE"),
            TranscriptDoc("y", ""),
        ]
        index = Bm25Index().fit(docs)
        for doc in docs:
            total = sum(
                tf for postings in index.postings_.values()
                for cid, tf in postings if cid == doc.clip_id
            )
            assert total == index.doc_len_[doc.clip_id] == len(tokenize(doc.text))


class TestBm25Score:
    def test_hand_value(self, tiny_index):
        # df=1, idf=ln 2; tf=1, dl=2, avgdl=1.5 -> 0.6931 * 2.2 / 2.5
        assert tiny_index.score(["b"], "d1") == pytest.approx(0.6100, abs=1e-4)

    def test_absent_term_scores_zero(self, tiny_index):
        assert tiny_index.score(["b"], "d2") == 0.0
        assert tiny_index.score(["zebra"], "d1") == 0.0

    def test_unknown_doc_rejected(self, tiny_index):
        with pytest.raises(ValidationError, match="unknown clip_id"):
            tiny_index.score(["a"], "nope")

    def test_additive_over_terms(self, tiny_index):
        lhs = tiny_index.score(["a", "b"], "d1")
        rhs = tiny_index.score(["a"], "d1") + tiny_index.score(["b"], "d1")
        assert lhs == pytest.approx(rhs)

    def test_monotone_in_tf(self):
        # equal doc lengths, different tf of the query term
        index = Bm25Index().fit(
            [TranscriptDoc("lo", "q x x"), TranscriptDoc("hi", "q q x")]
        )
        assert index.score(["q"], "hi") > index.score(["q"], "lo")


class TestSearch:
    def test_unindexed_terms_give_empty(self, tiny_index):
        assert tiny_index.search("zebra yak", 10) == []

    def test_backend_tag_and_invariants(self, tiny_index):
        results = tiny_index.search("a b", 10)
        check_result_list(results)
        assert all(r.backend is Backend.FULLTEXT for r in results)
        assert results[0].clip_id == "d1"

    def test_zero_score_docs_excluded(self, tiny_index):
        results = tiny_index.search("b", 10)
        assert [r.clip_id for r in results] == ["d1"]

    def test_prefix_property(self):
        docs = [TranscriptDoc(f"d{i}", f"w{i} shared") for i in range(20)]
        index = Bm25Index().fit(docs)
        for k in range(1, 10):
            small = index.search("shared w3 w7", k)
            big = index.search("shared w3 w7", k + 1)
            assert [r.clip_id for r in small] == [r.clip_id for r in big][:k]

    def test_tie_break_ascending_ids(self):
        docs = [TranscriptDoc(cid, "same text") for cid in ("b", "a", "c")]
        index = Bm25Index().fit(docs)
        results = index.search("same", 3)
        assert [r.clip_id for r in results] == ["a", "b", "c"]

    def test_matches_exhaustive_oracle(self):
        import numpy as np

        rng = np.random.default_rng(41)
        vocab = [f"w{i}" for i in range(30)]
        docs = [
            TranscriptDoc(
                f"doc{i:02d}",
                " ".join(vocab[j] for j in rng.integers(0, 30, size=rng.integers(0, 12))),
            )
            for i in range(50)
        ]
        index = Bm25Index().fit(docs)
        query = "w1 w2 w3 w1"
        expected = []
        for doc in docs:
            score = index.score(tokenize(query), doc.clip_id)
            if score > 0:
                expected.append((doc.clip_id, score))
        expected.sort(key=lambda t: (-t[1], t[0]))
        got = index.search(query, 50)
        assert [(r.clip_id, pytest.approx(r.score)) for r in got] == [
            (cid, pytest.approx(s)) for cid, s in expected
        ]


@given(st.integers(1, 6), st.integers(0, 5))
@settings(max_examples=50, deadline=None)
def test_single_term_ranking_by_tf_on_equal_lengths(tf_a, pad):
    # two docs of identical length; the one with higher tf of 'q' ranks first
    total = tf_a + pad + 2
    doc_a = " ".join(["q"] * (tf_a + 1) + ["x"] * (pad + 1))
    doc_b = " ".join(["q"] * tf_a + ["x"] * (pad + 2))
    index = Bm25Index().fit([TranscriptDoc("a", doc_a), TranscriptDoc("b", doc_b)])
    assert index.doc_len_["a"] == index.doc_len_["b"] == total
    results = index.search("q", 2)
    assert results[0].clip_id == "a"


def test_idf_formula_directly():
    index = Bm25Index().fit(
        [TranscriptDoc("1", "rare common"), TranscriptDoc("2", "common"), TranscriptDoc("3", "common")]
    )
    assert index._idf("rare") == pytest.approx(math.log(1 + (3 - 1 + 0.5) / 1.5))
    assert index._idf("common") == pytest.approx(math.log(1 + (3 - 3 + 0.5) / 3.5))
    assert index._idf("missing") == 0.0

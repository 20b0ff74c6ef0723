"""Metric kernel and comparison-table machinery."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avsearch.corpus import GroundTruthPair
from avsearch.evaluation import (
    ComparisonTable,
    MetricReport,
    OrderingAssertion,
    QueryRanking,
    check_orderings,
    compare,
    median_rank,
    rank_of_truth,
    recall_at_n,
    run_eval,
    summarize,
)
from avsearch.results import Backend, RankedResult
from avsearch.router import MethodKind, RetrievalMethod
from avsearch.validation import ValidationError


def results_for(ids):
    return [
        RankedResult(clip_id=cid, score=1.0 - 0.01 * i, rank=i + 1, backend=Backend.EMBEDDING)
        for i, cid in enumerate(ids)
    ]


def rankings_from(ranks, corpus_size=1000):
    pair = GroundTruthPair("q", "c")
    return [
        QueryRanking(pair=pair, rank=r, list_size=corpus_size, found=r <= corpus_size)
        for r in ranks
    ]


class TestRankOfTruth:
    def test_head(self):
        assert rank_of_truth(results_for(["t", "a", "b"]), "t", 200) == 1

    def test_absent_uses_corpus_size_plus_one(self):
        assert rank_of_truth(results_for(["a", "b"]), "t", 200) == 201

    def test_position_seven_of_ten(self):
        ids = [f"c{i}" for i in range(10)]
        ids[6] = "t"
        assert rank_of_truth(results_for(ids), "t", 10) == 7

    def test_permutation_equivariance(self):
        # shuffling non-truth items while preserving rank order leaves it unchanged
        ids = ["a", "b", "t", "c", "d"]
        swapped = ["b", "a", "t", "d", "c"]
        assert rank_of_truth(results_for(ids), "t", 5) == rank_of_truth(
            results_for(swapped), "t", 5
        )


class TestRecall:
    def test_hand_value(self):
        assert recall_at_n(rankings_from([1, 4, 20]), 5) == pytest.approx(2 / 3)

    def test_all_rank_one(self):
        for n in (1, 5, 10):
            assert recall_at_n(rankings_from([1, 1, 1]), n) == 1.0

    def test_not_found_counts_as_miss(self):
        rankings = rankings_from([1, 201], corpus_size=200)
        assert recall_at_n(rankings, 200) == 0.5

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            recall_at_n([], 5)

    @given(st.lists(st.integers(min_value=1, max_value=300), min_size=1, max_size=50))
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_n(self, ranks):
        rankings = rankings_from(ranks)
        values = [recall_at_n(rankings, n) for n in (1, 5, 10, 50, 300)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestMedianRank:
    def test_odd(self):
        assert median_rank(rankings_from([1, 4, 20])) == 4

    def test_even_takes_mean(self):
        assert median_rank(rankings_from([2, 4])) == 3.0

    def test_all_not_found(self):
        assert median_rank(rankings_from([201, 201, 201])) == 201


class _OracleMethod:
    """Perfect, adversarial, or fixed-rank retriever for bracketing tests."""

    def __init__(self, clip_ids, mode):
        self.clip_ids = tuple(clip_ids)
        self.mode = mode
        self.kind = MethodKind.BASELINE
        self.corpus_size = len(self.clip_ids)

    def _results(self, truth):
        ids = list(self.clip_ids)
        if self.mode == "perfect":
            ids.remove(truth)
            ids = [truth] + ids
        elif self.mode == "adversarial":
            ids.remove(truth)
        return results_for(ids)


def _query_via(method, pair, k):
    return method._results(pair.clip_id)[:k]


class TestRunEval:
    def _run(self, method, pairs, k=None):
        corpus_size = method.corpus_size
        rankings = []
        for pair in pairs:
            results = _query_via(method, pair, k or corpus_size)
            rank = rank_of_truth(results, pair.clip_id, corpus_size)
            rankings.append(
                QueryRanking(pair, rank, len(results), rank <= len(results))
            )
        return summarize(rankings)

    def test_perfect_retriever(self):
        ids = [f"c{i}" for i in range(20)]
        pairs = [GroundTruthPair(f"q{i}", cid) for i, cid in enumerate(ids[:5])]
        report = self._run(_OracleMethod(ids, "perfect"), pairs)
        assert report.r_at[1] == 1.0
        assert report.mdr == 1.0

    def test_adversarial_retriever(self):
        ids = [f"c{i}" for i in range(20)]
        pairs = [GroundTruthPair(f"q{i}", cid) for i, cid in enumerate(ids[:5])]
        report = self._run(_OracleMethod(ids, "adversarial"), pairs)
        assert all(v == 0.0 for v in report.r_at.values())
        assert report.mdr == 21
        assert report.n_not_found == 5

    def test_bracketing(self):
        ids = [f"c{i}" for i in range(30)]
        pairs = [GroundTruthPair(f"q{i}", cid) for i, cid in enumerate(ids[:10])]
        perfect = self._run(_OracleMethod(ids, "perfect"), pairs)
        adversarial = self._run(_OracleMethod(ids, "adversarial"), pairs)
        for n in (1, 5, 10):
            assert adversarial.r_at[n] <= perfect.r_at[n]
        assert perfect.mdr <= adversarial.mdr


class TestRunEvalIntegration:
    def test_report_matches_recomputation_from_ranked_lists(self, small_corpus):
        from avsearch.corpus import make_split
        from avsearch.embedding import TwoTowerRetriever
        import numpy as np

        split = make_split(small_corpus, 0.7, seed=3)
        texts, feats = [], []
        for cid in sorted(split.train_clip_ids):
            f = small_corpus.clips[cid].video_feature
            for a in small_corpus.annotations[cid]:
                texts.append(a.text)
                feats.append(f)
        model = TwoTowerRetriever(epochs=10, seed=3).fit(texts, np.stack(feats))
        ids, featmat = small_corpus.feature_matrix()
        method = RetrievalMethod(
            "baseline", MethodKind.BASELINE, model, tuple(ids), featmat
        )
        report = run_eval(method, split.test_pairs)
        # independent recomputation from stored per-query ranked lists
        ranks = []
        for pair in split.test_pairs:
            results = model.retrieve(pair.query_text, ids, featmat, len(ids))
            ranks.append(rank_of_truth(results, pair.clip_id, len(ids)))
        n = len(ranks)
        assert report.n_queries == n
        for top in (1, 5, 10):
            assert report.r_at[top] == pytest.approx(
                sum(r <= top for r in ranks) / n
            )
        sorted_ranks = sorted(ranks)
        expected_mdr = (
            float(sorted_ranks[n // 2])
            if n % 2
            else (sorted_ranks[n // 2 - 1] + sorted_ranks[n // 2]) / 2
        )
        assert report.mdr == expected_mdr


class TestComparisonTable:
    def _table(self):
        def report(r5):
            return MetricReport(
                r_at={1: r5 / 2, 5: r5, 10: min(1.0, r5 + 0.1)},
                mdr=3.0,
                n_queries=40,
                n_not_found=0,
            )

        return ComparisonTable(cells={
            "baseline": {"original": report(0.6), "mixed": report(0.25)},
            "customised": {"original": report(0.55), "mixed": report(0.4)},
            "classifier": {"original": report(0.6), "mixed": report(0.75)},
        })

    def test_shape(self):
        table = self._table()
        assert len(table.cells) == 3
        assert all(len(columns) == 2 for columns in table.cells.values())

    def test_json_round_trip(self):
        table = self._table()
        again = ComparisonTable.from_dict(table.to_dict())
        assert again.to_json() == table.to_json()

    def test_render_has_r5_first(self):
        text = self._table().render_text()
        header = text.splitlines()[0]
        assert header.index("R@5") < header.index("R@1")

    def test_orderings_pass(self):
        assert check_orderings(self._table()) == []

    def test_orderings_fail_with_message(self):
        table = self._table()
        weak = OrderingAssertion("baseline", "mixed", "classifier", "mixed", 0.0)
        failures = check_orderings(table, [weak])
        assert failures and "ordering violated" in failures[0]

    def test_compare_validates_inputs(self):
        with pytest.raises(ValidationError):
            compare({}, {"original": []})


def test_metric_report_invariant_r1_le_r5_le_r10():
    report = summarize(rankings_from([1, 2, 6, 11, 30]))
    assert report.r_at[1] <= report.r_at[5] <= report.r_at[10]

"""Featurizer, loss, gradients, training and brute-force retrieval."""

import numpy as np
import pytest

from avsearch.corpus import make_split, synth_corpus
from avsearch.embedding import (
    HashingTextFeaturizer,
    TwoTowerRetriever,
    encode,
    normalize_rows,
    ranking_loss,
    ranking_loss_gradients,
    similarity,
)
from avsearch.results import Backend, check_result_list
from avsearch.validation import UnencodableQueryError, ValidationError


class TestFeaturizer:
    def test_empty_text_is_zero_vector(self):
        f = HashingTextFeaturizer(hash_dim=64).fit([])
        assert not np.any(f.transform([""]))

    def test_scale_invariance(self):
        f = HashingTextFeaturizer(hash_dim=64).fit([])
        one, two = f.transform(["dog", "dog dog"])
        np.testing.assert_allclose(one, two)

    def test_order_invariance(self):
        f = HashingTextFeaturizer(hash_dim=256).fit([])
        a, b = f.transform(["a man sings", "sings man a"])
        np.testing.assert_array_equal(a, b)

    def test_unit_norm(self):
        f = HashingTextFeaturizer(hash_dim=128).fit([])
        vecs = f.transform(["some words here", "x", "many many tokens in a row"])
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=1), 1.0, atol=1e-12)

    def test_deterministic_across_instances(self):
        a = HashingTextFeaturizer(hash_dim=512).fit([]).transform(["hello world"])
        b = HashingTextFeaturizer(hash_dim=512).fit([]).transform(["hello world"])
        np.testing.assert_array_equal(a, b)


class TestEncode:
    def test_identity_projection(self):
        w = np.eye(3)
        out = encode(w, np.array([[1.0, 0.0, 0.0]]))
        np.testing.assert_allclose(out[0], [1.0, 0.0, 0.0])

    def test_output_unit_norm(self):
        rng = np.random.default_rng(0)
        w = rng.standard_normal((4, 7))
        feats = rng.standard_normal((10, 7))
        out = encode(w, feats)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-9)

    def test_scaling_input_changes_nothing(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((4, 6))
        x = rng.standard_normal((1, 6))
        np.testing.assert_allclose(encode(w, x), encode(w, 10.0 * x), atol=1e-12)

    def test_zero_input_stays_zero(self):
        w = np.ones((3, 5))
        out = encode(w, np.zeros((1, 5)))
        assert not np.any(out)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="dimension"):
            encode(np.ones((3, 5)), np.ones((1, 4)))


class TestSimilarity:
    def test_self_similarity(self):
        v = normalize_rows(np.array([[1.0, 2.0, 3.0]]))[0]
        assert similarity(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_antipodal(self):
        v = normalize_rows(np.array([[0.3, -0.4]]))[0]
        assert similarity(v, -v) == pytest.approx(-1.0)


def _tiny_problem(seed, b=None):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 9))
    dt = int(rng.integers(2, 9))
    dv = int(rng.integers(2, 9))
    b = b or int(rng.integers(2, 5))
    return (
        rng.standard_normal((k, dt)),
        rng.standard_normal((k, dv)),
        rng.standard_normal((b, dt)),
        rng.standard_normal((b, dv)),
        float(rng.uniform(0.05, 0.5)),
    )


class TestRankingLoss:
    def test_zero_when_hinges_inactive(self):
        # identical towers, orthogonal inputs: s_ii = 1, s_ij = 0 < 1 - m
        w = np.eye(3)
        feats = np.eye(3)
        assert ranking_loss(w, w, feats, feats, margin=0.2) == 0.0

    def test_degenerate_equal_similarities(self):
        # both items identical: every s equals 1, each hinge contributes m
        w = np.eye(2)
        x = np.array([[1.0, 0.0], [1.0, 0.0]])
        assert ranking_loss(w, w, x, x, margin=0.2) == pytest.approx(0.4)

    def test_non_negative(self):
        for seed in range(20):
            args = _tiny_problem(seed)
            assert ranking_loss(*args) >= 0.0

    def test_batch_permutation_invariance(self):
        wt, wv, x, y, m = _tiny_problem(5, b=4)
        base = ranking_loss(wt, wv, x, y, m)
        perm = np.random.default_rng(0).permutation(4)
        assert ranking_loss(wt, wv, x[perm], y[perm], m) == pytest.approx(base)

    def test_batch_of_one_rejected(self):
        wt, wv, x, y, m = _tiny_problem(3)
        with pytest.raises(ValidationError):
            ranking_loss(wt, wv, x[:1], y[:1], m)


def finite_difference_check(wt, wv, x, y, m, h=1e-5):
    """Independent oracle: central differences on every weight entry."""
    analytic = ranking_loss_gradients(wt, wv, x, y, m)
    worst = 0.0
    for w, grad in zip((wt, wv), analytic):
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                orig = w[i, j]
                w[i, j] = orig + h
                up = ranking_loss(wt, wv, x, y, m)
                w[i, j] = orig - h
                down = ranking_loss(wt, wv, x, y, m)
                w[i, j] = orig
                numeric = (up - down) / (2 * h)
                denom = max(abs(numeric), abs(grad[i, j]), 1e-6)
                worst = max(worst, abs(numeric - grad[i, j]) / denom)
    return worst


def _away_from_kinks(wt, wv, x, y, m, tol=1e-3):
    s = encode(wt, x) @ encode(wv, y).T
    d = np.diag(s)
    gap1 = np.abs(m + s - d[:, None])
    gap2 = np.abs(m + s.T - d[:, None])
    np.fill_diagonal(gap1, 1.0)
    np.fill_diagonal(gap2, 1.0)
    return min(gap1.min(), gap2.min()) > tol


class TestLossGradient:
    def test_all_hinges_inactive_gives_zero_gradient(self):
        w = np.eye(3)
        feats = np.eye(3)
        gt, gv = ranking_loss_gradients(w, w, feats, feats, margin=0.2)
        assert not np.any(gt) and not np.any(gv)

    def test_matches_finite_differences(self):
        checked = 0
        seed = 0
        while checked < 25:
            wt, wv, x, y, m = _tiny_problem(seed)
            seed += 1
            if not _away_from_kinks(wt, wv, x, y, m):
                continue
            assert finite_difference_check(wt, wv, x, y, m) < 1e-4
            checked += 1

    def test_duplicated_batch_against_oracle(self):
        wt, wv, x, y, m = _tiny_problem(11, b=2)
        x2, y2 = np.vstack([x, x]), np.vstack([y, y])
        if _away_from_kinks(wt, wv, x2, y2, m):
            assert finite_difference_check(wt, wv, x2, y2, m) < 1e-4


@pytest.fixture(scope="module")
def trained_zero_noise():
    corpus = synth_corpus(80, 120, 120, transcript_coverage=0.0, noise_sigma=0.0, seed=21)
    split = make_split(corpus, 0.8, seed=21)
    texts, feats = [], []
    for cid in sorted(split.train_clip_ids):
        f = corpus.clips[cid].video_feature
        for a in corpus.annotations[cid]:
            texts.append(a.text)
            feats.append(f)
    model = TwoTowerRetriever(epochs=50, seed=3).fit(texts, np.stack(feats))
    return corpus, split, model, texts, np.stack(feats)


class TestTraining:
    def test_loss_drops_by_10x_on_separable_data(self, trained_zero_noise):
        _, _, model, _, _ = trained_zero_noise
        assert model.loss_curve_[-1] < 0.1 * model.loss_curve_[0]

    def test_final_loss_not_above_initial(self, trained_zero_noise):
        _, _, model, _, _ = trained_zero_noise
        assert model.loss_curve_[-1] <= model.loss_curve_[0]

    def test_aggregate_monotonicity_over_windows(self, trained_zero_noise):
        # epoch-mean loss does not increase across any 10-epoch window;
        # per-epoch jitter near the plateau is allowed a small fraction of
        # the initial loss
        _, _, model, _, _ = trained_zero_noise
        curve = model.loss_curve_
        jitter = 0.05 * curve[0]
        for i in range(len(curve) - 10):
            assert curve[i + 10] <= curve[i] + jitter

    def test_bit_identical_reruns(self, trained_zero_noise):
        _, _, model, texts, feats = trained_zero_noise
        again = TwoTowerRetriever(epochs=50, seed=3).fit(texts, feats)
        np.testing.assert_array_equal(model.w_text_, again.w_text_)
        np.testing.assert_array_equal(model.w_video_, again.w_video_)

    def test_epoch_zero_rejected(self):
        with pytest.raises(ValidationError):
            TwoTowerRetriever(epochs=0).fit(["a", "b"], np.eye(2))

    def test_batch_size_one_rejected(self):
        with pytest.raises(ValidationError):
            TwoTowerRetriever(batch_size=1).fit(["a", "b"], np.eye(2))

    def test_non_finite_loss_aborts_with_diagnostic(self, monkeypatch):
        # normalization makes the towers scale-invariant, so the loss cannot
        # actually diverge from a large step size; exercise the guard directly
        import avsearch.embedding as emb

        monkeypatch.setattr(emb, "ranking_loss", lambda *a, **k: float("nan"))
        corpus = synth_corpus(10, 40, 40, 0.0, 0.0, seed=2)
        texts = [a.text for c in corpus.clip_ids() for a in corpus.annotations[c]]
        feats = np.vstack(
            [[corpus.clips[c].video_feature] * 20 for c in corpus.clip_ids()]
        )
        with pytest.raises(ValidationError, match="learning rate"):
            TwoTowerRetriever(epochs=2, seed=0).fit(texts, feats)


class TestRetrieve:
    def test_planted_caption_ranks_first(self, trained_zero_noise):
        corpus, split, model, _, _ = trained_zero_noise
        ids, feats = corpus.feature_matrix()
        hits = 0
        train_ids = sorted(split.train_clip_ids)
        for cid in train_ids:
            res = model.retrieve(corpus.annotations[cid][0].text, ids, feats, 1)
            hits += res[0].clip_id == cid
        assert hits / len(train_ids) >= 0.9

    def test_k_covers_corpus(self, trained_zero_noise):
        corpus, _, model, _, _ = trained_zero_noise
        ids, feats = corpus.feature_matrix()
        res = model.retrieve("vis0001 vis0002", ids, feats, 10_000)
        assert len(res) == len(ids)
        check_result_list(res)
        assert all(r.backend is Backend.EMBEDDING for r in res)

    def test_matches_exhaustive_oracle(self, trained_zero_noise):
        corpus, _, model, _, _ = trained_zero_noise
        ids, feats = corpus.feature_matrix()
        query = corpus.annotations[ids[0]][3].text
        res = model.retrieve(query, ids, feats, 7)
        # independent path: full sort of every similarity score
        q = model.encode_query(query)
        encoded = model.encode_video(feats)
        scored = sorted(
            ((float(encoded[i] @ q), ids[i]) for i in range(len(ids))),
            key=lambda t: (-t[0], t[1]),
        )
        assert [r.clip_id for r in res] == [cid for _, cid in scored[:7]]

    def test_empty_corpus(self, trained_zero_noise):
        _, _, model, _, _ = trained_zero_noise
        assert model.retrieve("anything", [], np.zeros((0, 60)), 5) == []

    def test_unencodable_query_raises(self, trained_zero_noise):
        corpus, _, model, _, _ = trained_zero_noise
        ids, feats = corpus.feature_matrix()
        with pytest.raises(UnencodableQueryError):
            model.retrieve("...!!!...", ids, feats, 5)


class TestPersistence:
    def test_save_load_reproduces_retrieval_bit_exactly(self, trained_zero_noise, tmp_path):
        corpus, _, model, _, _ = trained_zero_noise
        ids, feats = corpus.feature_matrix()
        path = str(tmp_path / "model.json")
        model.save(path)
        loaded = TwoTowerRetriever.load(path)
        np.testing.assert_array_equal(model.w_text_, loaded.w_text_)
        query = corpus.annotations[ids[0]][0].text
        a = model.retrieve(query, ids, feats, 10)
        b = loaded.retrieve(query, ids, feats, 10)
        assert [(r.clip_id, r.score) for r in a] == [(r.clip_id, r.score) for r in b]

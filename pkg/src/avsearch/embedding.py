"""Two-stream joint-embedding retriever.

Text and video features are projected by separate linear towers onto the unit
sphere of a shared space; the towers are trained with a bidirectional
max-margin ranking loss over in-batch negatives, and retrieval is brute-force
cosine against every clip.
"""

from __future__ import annotations

import json
import os
import re

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .results import Backend, RankedResult
from .tokenization import tokenize
from .validation import (
    UnencodableQueryError,
    ValidationError,
    check_matrix,
    check_positive,
    check_positive_int,
)

_MASK64 = (1 << 64) - 1
_CASED_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")
DEFAULT_HASH_SEED = 0x811C9DC5


def hash_token(token: str, seed: int = DEFAULT_HASH_SEED) -> int:
    """Multiplicative string hash, stable across processes and platforms."""
    h = seed & _MASK64
    for ch in token:
        h = (h * 1000003 + ord(ch)) & _MASK64
    return h


class HashingTextFeaturizer(BaseEstimator, TransformerMixin):
    """Hashed bag-of-words text features, L2-normalized per row.

    Stateless: fit is a no-op and the same text always maps to the same vector.
    """

    def __init__(self, hash_dim: int = 1024, hash_seed: int = DEFAULT_HASH_SEED,
                 lowercase: bool = True):
        self.hash_dim = hash_dim
        self.hash_seed = hash_seed
        self.lowercase = lowercase

    def fit(self, X, y=None):
        check_positive_int(self.hash_dim, "hash_dim")
        return self

    def _tokens(self, text: str) -> list[str]:
        if self.lowercase:
            return tokenize(text)
        return _CASED_TOKEN_RE.findall(text)

    def transform(self, texts) -> np.ndarray:
        if isinstance(texts, str):
            raise ValidationError("transform expects a sequence of texts, not one string")
        out = np.zeros((len(texts), self.hash_dim))
        bucket_cache: dict[str, int] = {}
        for row, text in enumerate(texts):
            for token in self._tokens(text):
                b = bucket_cache.get(token)
                if b is None:
                    b = hash_token(token, self.hash_seed) % self.hash_dim
                    bucket_cache[token] = b
                out[row, b] += 1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out

    def transform_one(self, text: str) -> np.ndarray:
        return self.transform([text])[0]


def normalize_rows(mat: np.ndarray) -> np.ndarray:
    """Project rows onto the unit sphere; all-zero rows stay zero (flagged vectors)."""
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    out = np.zeros_like(mat)
    np.divide(mat, norms, out=out, where=norms > 0)
    return out


def encode(weights: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Project features through one tower and L2-normalize each row."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    if features.shape[1] != weights.shape[1]:
        raise ValidationError(
            f"feature dimension {features.shape[1]} does not match "
            f"projection input dimension {weights.shape[1]}"
        )
    return normalize_rows(features @ weights.T)


def similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of two unit vectors (plain dot product)."""
    return float(np.dot(u, v))


def _hinge_activity(sims: np.ndarray, margin: float):
    """0/1 masks of strictly-active hinges for both loss directions."""
    diag = np.diag(sims)
    a1 = (margin + sims - diag[:, None]) > 0  # text_i vs video_j
    a2 = (margin + sims.T - diag[:, None]) > 0  # text_j vs video_i
    np.fill_diagonal(a1, False)
    np.fill_diagonal(a2, False)
    return a1, a2


def ranking_loss(w_text, w_video, text_feats, video_feats, margin: float = 0.2) -> float:
    """Bidirectional max-margin ranking loss with in-batch negatives.

    loss = (1 / (B(B-1))) * sum_{i != j} [ relu(m + s_ij - s_ii)
                                         + relu(m + s_ji - s_ii) ]
    """
    b = len(text_feats)
    if b < 2:
        raise ValidationError(f"ranking loss needs a batch of >= 2 pairs, got {b}")
    t_hat = encode(w_text, text_feats)
    v_hat = encode(w_video, video_feats)
    sims = t_hat @ v_hat.T
    diag = np.diag(sims)
    h1 = np.maximum(0.0, margin + sims - diag[:, None])
    h2 = np.maximum(0.0, margin + sims.T - diag[:, None])
    np.fill_diagonal(h1, 0.0)
    np.fill_diagonal(h2, 0.0)
    return float((h1.sum() + h2.sum()) / (b * (b - 1)))


def _normalization_backward(grad_unit, projected, unit):
    """Backprop through row-wise L2 normalization; zero rows get zero gradient."""
    norms = np.linalg.norm(projected, axis=1, keepdims=True)
    inner = np.sum(grad_unit * unit, axis=1, keepdims=True)
    grad = np.zeros_like(projected)
    np.divide(grad_unit - inner * unit, norms, out=grad, where=norms > 0)
    return grad


def ranking_loss_gradients(w_text, w_video, text_feats, video_feats, margin: float = 0.2):
    """Exact subgradients of ranking_loss wrt both projection matrices.

    Hinge subgradient at the kink is 0 (strict inequality defines activity).
    """
    b = len(text_feats)
    if b < 2:
        raise ValidationError(f"ranking loss needs a batch of >= 2 pairs, got {b}")
    text_feats = np.atleast_2d(np.asarray(text_feats, dtype=float))
    video_feats = np.atleast_2d(np.asarray(video_feats, dtype=float))
    t_proj = text_feats @ w_text.T
    v_proj = video_feats @ w_video.T
    t_hat = normalize_rows(t_proj)
    v_hat = normalize_rows(v_proj)
    sims = t_hat @ v_hat.T

    a1, a2 = _hinge_activity(sims, margin)
    coef = 1.0 / (b * (b - 1))
    grad_s = coef * (a1.astype(float) + a2.astype(float).T)
    np.fill_diagonal(grad_s, -coef * (a1.sum(axis=1) + a2.sum(axis=1)))

    grad_t_hat = grad_s @ v_hat
    grad_v_hat = grad_s.T @ t_hat
    grad_t_proj = _normalization_backward(grad_t_hat, t_proj, t_hat)
    grad_v_proj = _normalization_backward(grad_v_hat, v_proj, v_hat)
    return grad_t_proj.T @ text_feats, grad_v_proj.T @ video_feats


class TwoTowerRetriever(BaseEstimator):
    """Joint text/video embedding model trained by plain mini-batch gradient descent.

    Parameters
    ----------
    joint_dim : dimension of the shared space.
    margin : ranking-loss margin, > 0.
    learning_rate, epochs, batch_size, seed : optimizer settings; batch_size
        must be >= 2 because the loss needs in-batch negatives.
    hash_dim, hash_seed : hashed bag-of-words featurizer settings.
    """

    def __init__(self, joint_dim: int = 64, margin: float = 0.2,
                 learning_rate: float = 0.05, epochs: int = 40,
                 batch_size: int = 32, seed: int = 0,
                 hash_dim: int = 1024, hash_seed: int = DEFAULT_HASH_SEED):
        self.joint_dim = joint_dim
        self.margin = margin
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.hash_dim = hash_dim
        self.hash_seed = hash_seed

    def _validate_params(self):
        check_positive_int(self.joint_dim, "joint_dim")
        check_positive(self.margin, "margin")
        check_positive(self.learning_rate, "learning_rate")
        check_positive_int(self.epochs, "epochs")
        if check_positive_int(self.batch_size, "batch_size") < 2:
            raise ValidationError("batch_size must be >= 2 (in-batch negatives)")

    def fit(self, texts, video_features):
        """Train on aligned (annotation text, clip feature) pairs."""
        self._validate_params()
        video_features = check_matrix(video_features, name="video_features")
        if len(texts) != len(video_features):
            raise ValidationError(
                f"{len(texts)} texts vs {len(video_features)} video features"
            )
        if len(texts) < 2:
            raise ValidationError("training needs at least 2 pairs")
        self.featurizer_ = HashingTextFeaturizer(self.hash_dim, self.hash_seed).fit(texts)
        text_feats = self.featurizer_.transform(texts)
        self.video_dim_ = video_features.shape[1]

        rng = np.random.default_rng(self.seed)
        bound_t = 1.0 / np.sqrt(self.hash_dim)
        bound_v = 1.0 / np.sqrt(self.video_dim_)
        w_text = rng.uniform(-bound_t, bound_t, size=(self.joint_dim, self.hash_dim))
        w_video = rng.uniform(-bound_v, bound_v, size=(self.joint_dim, self.video_dim_))

        n = len(texts)
        curve = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            losses = []
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                if len(batch) < 2:
                    continue
                bt, bv = text_feats[batch], video_features[batch]
                loss = ranking_loss(w_text, w_video, bt, bv, self.margin)
                if not np.isfinite(loss):
                    raise ValidationError(
                        f"non-finite loss at epoch {epoch}; "
                        f"learning rate {self.learning_rate} is likely too high"
                    )
                g_text, g_video = ranking_loss_gradients(w_text, w_video, bt, bv, self.margin)
                w_text -= self.learning_rate * g_text
                w_video -= self.learning_rate * g_video
                losses.append(loss)
            curve.append(float(np.mean(losses)))
        self.w_text_ = w_text
        self.w_video_ = w_video
        self.loss_curve_ = curve
        return self

    def encode_text(self, texts) -> np.ndarray:
        return encode(self.w_text_, self.featurizer_.transform(list(texts)))

    def encode_video(self, features) -> np.ndarray:
        return encode(self.w_video_, features)

    def encode_query(self, query_text: str) -> np.ndarray:
        """Unit vector for one query; raises if no token survives featurization."""
        feats = self.featurizer_.transform([query_text])
        if not np.any(feats):
            raise UnencodableQueryError(
                f"query has no encodable tokens: {query_text!r}"
            )
        return encode(self.w_text_, feats)[0]

    def retrieve(self, query_text: str, clip_ids, clip_features, k: int) -> list[RankedResult]:
        """Brute-force cosine top-k; ties broken by ascending clip_id."""
        check_positive_int(k, "k")
        clip_ids = list(clip_ids)
        if not clip_ids:
            return []
        query = self.encode_query(query_text)
        encoded = self.encode_video(clip_features)
        scores = encoded @ query
        encodable = np.any(encoded, axis=1)  # zero-feature clips are excluded
        candidates = [i for i in range(len(clip_ids)) if encodable[i]]
        candidates.sort(key=lambda i: (-scores[i], clip_ids[i]))
        return [
            RankedResult(clip_id=clip_ids[i], score=float(scores[i]), rank=r + 1,
                         backend=Backend.EMBEDDING)
            for r, i in enumerate(candidates[:k])
        ]

    def save(self, path: str) -> None:
        payload = {
            "joint_dim": self.joint_dim,
            "margin": self.margin,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "hash_dim": self.hash_dim,
            "hash_seed": self.hash_seed,
            "video_dim": self.video_dim_,
            "w_text": self.w_text_.tolist(),
            "w_video": self.w_video_.tolist(),
            "loss_curve": self.loss_curve_,
        }
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "TwoTowerRetriever":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        model = cls(
            joint_dim=payload["joint_dim"],
            margin=payload["margin"],
            learning_rate=payload["learning_rate"],
            epochs=payload["epochs"],
            batch_size=payload["batch_size"],
            seed=payload["seed"],
            hash_dim=payload["hash_dim"],
            hash_seed=payload["hash_seed"],
        )
        model.featurizer_ = HashingTextFeaturizer(model.hash_dim, model.hash_seed).fit([])
        model.video_dim_ = payload["video_dim"]
        model.w_text_ = np.array(payload["w_text"], dtype=float)
        model.w_video_ = np.array(payload["w_video"], dtype=float)
        model.loss_curve_ = list(payload["loss_curve"])
        return model

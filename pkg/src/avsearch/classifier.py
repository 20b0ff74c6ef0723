"""Quote-vs-visual query classifier.

Two cooperating policies live here: a regular-expression rule set distilled
from how quotations are introduced in writing (the labeling oracle and a
dependency-free fallback router), and a small gated-recurrent sequence model
(16-dim embeddings, 16 hidden units, 2-way softmax) trained on labeled
sentences with manual backpropagation.
"""

from __future__ import annotations

import enum
import json
import os
import re
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .tokenization import tokenize
from .validation import ValidationError, check_positive, check_positive_int

PAD_INDEX = 0
OOV_INDEX = 1


class QueryLabel(str, enum.Enum):
    VISUAL = "visual"
    QUOTE_SPEECH = "quote_speech"


# classifier output order: column 0 = visual, column 1 = quote/speech
CLASS_ORDER = (QueryLabel.VISUAL, QueryLabel.QUOTE_SPEECH)


@dataclass(frozen=True)
class QueryClass:
    label: QueryLabel
    confidence: float


@dataclass(frozen=True)
class QuoteRule:
    name: str
    pattern: str

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern, re.IGNORECASE)


class QuoteRuleSet:
    """Ordered regex patterns; a text is quote/speech if any pattern matches."""

    def __init__(self, rules):
        self.rules = tuple(rules)
        if not self.rules:
            raise ValidationError("rule set must contain at least one rule")
        self._compiled = [(r.name, r.compiled()) for r in self.rules]

    def first_match(self, text: str):
        for name, pattern in self._compiled:
            if pattern.search(text):
                return name
        return None


_REPORTING_VERBS = (
    "said|says|asked|replied|answered|shouted|whispered|added|explained"
    "|declared|wrote|remarked|exclaimed|noted|stated"
)
_OPEN_QUOTE = "[\"“‘']"
_DOUBLE_OPEN = "[\"“]"
_DOUBLE_CLOSE = "[\"”]"
_INSIDE = "[^\\w\"“”]"


def default_quote_rules() -> QuoteRuleSet:
    """Rules for the canonical ways a quotation enters a sentence."""
    return QuoteRuleSet([
        QuoteRule("reported-speech-verb", rf"\b(?:{_REPORTING_VERBS})\s*,\s*{_OPEN_QUOTE}"),
        QuoteRule("according-to", r"\baccording to\b"),
        QuoteRule("colon-quote", rf":\s*{_OPEN_QUOTE}"),
        QuoteRule(
            "quoted-span",
            rf"{_DOUBLE_OPEN}{_INSIDE}*\w+(?:{_INSIDE}+\w+){{2,}}{_INSIDE}*{_DOUBLE_CLOSE}",
        ),
    ])


def rule_label(rules: QuoteRuleSet, text: str) -> QueryLabel:
    """Deterministic label: quote/speech if any rule fires, visual otherwise."""
    return QueryLabel.QUOTE_SPEECH if rules.first_match(text) else QueryLabel.VISUAL


class QuoteRulePolicy:
    """Rule-only routing policy with the same classify() surface as the model."""

    def __init__(self, rules: QuoteRuleSet | None = None):
        self.rules = rules or default_quote_rules()

    def classify(self, text: str) -> QueryClass:
        return QueryClass(label=rule_label(self.rules, text), confidence=1.0)

    def predict(self, texts) -> list[QueryLabel]:
        return [rule_label(self.rules, t) for t in texts]


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: QueryLabel
    provenance: str


@dataclass
class LabeledDataset:
    train: list[LabeledExample]
    test: list[LabeledExample]
    warnings: list[str] = field(default_factory=list)


def build_training_set(quote_sources, transcripts, captions, seed: int = 0,
                       train_fraction: float = 0.8,
                       rules: QuoteRuleSet | None = None) -> LabeledDataset:
    """Assemble the labeled set and a stratified train/test split.

    Quote class: rule-matching quote sources plus all transcripts (labels come
    from provenance, so a caption that happens to contain a quote stays
    visual).  Visual class: captions.
    """
    rules = rules or default_quote_rules()
    quote_class = [
        LabeledExample(s, QueryLabel.QUOTE_SPEECH, "quote_source")
        for s in quote_sources
        if rules.first_match(s)
    ]
    quote_class += [
        LabeledExample(t, QueryLabel.QUOTE_SPEECH, "transcript") for t in transcripts
    ]
    visual_class = [LabeledExample(c, QueryLabel.VISUAL, "caption") for c in captions]
    if len(quote_class) < 10 or len(visual_class) < 10:
        raise ValidationError(
            f"each class needs >= 10 items, got {len(quote_class)} quote "
            f"and {len(visual_class)} visual"
        )
    warnings = []
    big, small = max(len(quote_class), len(visual_class)), min(len(quote_class), len(visual_class))
    if big > 10 * small:
        warnings.append(f"class imbalance {big}:{small} exceeds 10:1")

    rng = np.random.default_rng(seed)
    train: list[LabeledExample] = []
    test: list[LabeledExample] = []
    for group in (quote_class, visual_class):
        order = rng.permutation(len(group))
        n_train = int(train_fraction * len(group))
        train += [group[i] for i in order[:n_train]]
        test += [group[i] for i in order[n_train:]]
    train = [train[i] for i in rng.permutation(len(train))]
    test = [test[i] for i in rng.permutation(len(test))]
    return LabeledDataset(train=train, test=test, warnings=warnings)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def init_params(vocab_size: int, embed_dim: int, hidden_dim: int, seed: int) -> dict:
    """Seeded parameter set for the gated-recurrent classifier."""
    rng = np.random.default_rng(seed)
    be = 1.0 / np.sqrt(embed_dim)
    bh = 1.0 / np.sqrt(hidden_dim)
    params = {"emb": rng.uniform(-0.1, 0.1, size=(vocab_size, embed_dim))}
    for gate in ("z", "r", "c"):
        params[f"w_{gate}"] = rng.uniform(-be, be, size=(embed_dim, hidden_dim))
        params[f"u_{gate}"] = rng.uniform(-bh, bh, size=(hidden_dim, hidden_dim))
        params[f"b_{gate}"] = np.zeros(hidden_dim)
    params["w_p"] = rng.uniform(-bh, bh, size=(hidden_dim, hidden_dim))
    params["b_p"] = np.zeros(hidden_dim)
    params["w_o"] = rng.uniform(-bh, bh, size=(hidden_dim, 2))
    params["b_o"] = np.zeros(2)
    return params


def sequence_forward(params: dict, token_ids: np.ndarray, mask: np.ndarray):
    """Forward pass over right-padded batches.

    Masked (padding) steps leave the hidden state untouched, so trailing pad
    tokens can never change the output.  Returns (probs, cache).
    """
    batch, steps = token_ids.shape
    hidden = np.zeros((batch, params["b_z"].shape[0]))
    cache = {"steps": [], "ids": token_ids, "mask": mask}
    for t in range(steps):
        x = params["emb"][token_ids[:, t]]
        h_prev = hidden
        z = _sigmoid(x @ params["w_z"] + h_prev @ params["u_z"] + params["b_z"])
        r = _sigmoid(x @ params["w_r"] + h_prev @ params["u_r"] + params["b_r"])
        c = np.tanh(x @ params["w_c"] + (r * h_prev) @ params["u_c"] + params["b_c"])
        h_new = (1.0 - z) * h_prev + z * c
        m = mask[:, t:t + 1]
        hidden = m * h_new + (1.0 - m) * h_prev
        cache["steps"].append((x, h_prev, z, r, c))
    g_pre = hidden @ params["w_p"] + params["b_p"]
    g = np.maximum(0.0, g_pre)
    logits = g @ params["w_o"] + params["b_o"]
    probs = _softmax(logits)
    cache.update(h_final=hidden, g_pre=g_pre, g=g)
    return probs, cache


def cross_entropy_loss(params: dict, token_ids, mask, labels) -> float:
    probs, _ = sequence_forward(params, token_ids, mask)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def cross_entropy_gradients(params: dict, token_ids, mask, labels) -> dict:
    """Exact gradients of the mean cross-entropy wrt every parameter array."""
    probs, cache = sequence_forward(params, token_ids, mask)
    batch = len(labels)
    grads = {k: np.zeros_like(v) for k, v in params.items()}

    d_logits = probs.copy()
    d_logits[np.arange(batch), labels] -= 1.0
    d_logits /= batch
    grads["w_o"] = cache["g"].T @ d_logits
    grads["b_o"] = d_logits.sum(axis=0)
    d_g = d_logits @ params["w_o"].T
    d_g_pre = d_g * (cache["g_pre"] > 0)
    grads["w_p"] = cache["h_final"].T @ d_g_pre
    grads["b_p"] = d_g_pre.sum(axis=0)
    d_h = d_g_pre @ params["w_p"].T

    for t in range(len(cache["steps"]) - 1, -1, -1):
        x, h_prev, z, r, c = cache["steps"][t]
        m = cache["mask"][:, t:t + 1]
        d_h_new = m * d_h
        d_h_prev = (1.0 - m) * d_h
        d_z = d_h_new * (c - h_prev)
        d_c = d_h_new * z
        d_h_prev = d_h_prev + d_h_new * (1.0 - z)
        d_c_pre = d_c * (1.0 - c * c)
        grads["w_c"] += x.T @ d_c_pre
        grads["u_c"] += (r * h_prev).T @ d_c_pre
        grads["b_c"] += d_c_pre.sum(axis=0)
        d_rh = d_c_pre @ params["u_c"].T
        d_r = d_rh * h_prev
        d_h_prev = d_h_prev + d_rh * r
        d_z_pre = d_z * z * (1.0 - z)
        d_r_pre = d_r * r * (1.0 - r)
        grads["w_z"] += x.T @ d_z_pre
        grads["u_z"] += h_prev.T @ d_z_pre
        grads["b_z"] += d_z_pre.sum(axis=0)
        grads["w_r"] += x.T @ d_r_pre
        grads["u_r"] += h_prev.T @ d_r_pre
        grads["b_r"] += d_r_pre.sum(axis=0)
        d_h_prev = d_h_prev + d_z_pre @ params["u_z"].T + d_r_pre @ params["u_r"].T
        d_x = d_z_pre @ params["w_z"].T + d_r_pre @ params["w_r"].T + d_c_pre @ params["w_c"].T
        np.add.at(grads["emb"], cache["ids"][:, t], d_x)
        d_h = d_h_prev
    return grads


class QuoteSpeechClassifier(BaseEstimator):
    """Gated-recurrent binary sequence classifier over tokenized queries.

    Vocabulary is built from the training split only; unknown tokens share one
    OOV embedding row.  Inputs longer than max_sequence_length are truncated
    from the right.
    """

    def __init__(self, embed_dim: int = 16, hidden_dim: int = 16, epochs: int = 7,
                 batch_size: int = 32, learning_rate: float = 0.5, seed: int = 0,
                 max_sequence_length: int = 32, clip_norm: float = 5.0):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.max_sequence_length = max_sequence_length
        self.clip_norm = clip_norm

    def _encode_batch(self, texts):
        """Token-id matrix plus mask, right-padded to the batch maximum."""
        seqs = []
        for text in texts:
            tokens = tokenize(text)[: self.max_sequence_length]
            seqs.append([self.vocab_.get(tok, OOV_INDEX) for tok in tokens])
        width = max(1, max((len(s) for s in seqs), default=1))
        ids = np.full((len(seqs), width), PAD_INDEX, dtype=np.int64)
        mask = np.zeros((len(seqs), width))
        for i, seq in enumerate(seqs):
            ids[i, : len(seq)] = seq
            mask[i, : len(seq)] = 1.0
        return ids, mask

    def fit(self, texts, labels):
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.batch_size, "batch_size")
        check_positive(self.learning_rate, "learning_rate")
        texts = list(texts)
        label_idx = np.array([CLASS_ORDER.index(QueryLabel(l)) for l in labels])
        if len(texts) != len(label_idx):
            raise ValidationError(f"{len(texts)} texts vs {len(label_idx)} labels")

        tokens = sorted({tok for text in texts for tok in tokenize(text)})
        self.vocab_ = {tok: i + 2 for i, tok in enumerate(tokens)}  # 0=pad, 1=oov
        params = init_params(len(self.vocab_) + 2, self.embed_dim, self.hidden_dim, self.seed)

        rng = np.random.default_rng(self.seed)
        n = len(texts)
        curve = []
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            losses = []
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                ids, mask = self._encode_batch([texts[i] for i in batch])
                y = label_idx[batch]
                loss = cross_entropy_loss(params, ids, mask, y)
                if not np.isfinite(loss):
                    raise ValidationError(
                        f"non-finite loss at epoch {epoch}; "
                        f"learning rate {self.learning_rate} is likely too high"
                    )
                grads = cross_entropy_gradients(params, ids, mask, y)
                total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                scale = self.clip_norm / total if total > self.clip_norm else 1.0
                for key in params:
                    params[key] -= self.learning_rate * scale * grads[key]
                losses.append(loss)
            curve.append(float(np.mean(losses)))
        self.params_ = params
        self.loss_curve_ = curve
        return self

    def predict_proba(self, texts) -> np.ndarray:
        ids, mask = self._encode_batch(list(texts))
        probs, _ = sequence_forward(self.params_, ids, mask)
        return probs

    def predict(self, texts) -> list[QueryLabel]:
        probs = self.predict_proba(texts)
        return [CLASS_ORDER[i] for i in probs.argmax(axis=1)]

    def classify(self, text: str) -> QueryClass:
        """Label one query; empty queries carry no quote evidence and stay visual."""
        probs = self.predict_proba([text])[0]
        if not tokenize(text):
            return QueryClass(QueryLabel.VISUAL, float(probs[0]))
        best = int(probs.argmax())
        return QueryClass(CLASS_ORDER[best], float(probs[best]))

    def save(self, path: str) -> None:
        payload = {
            "config": {
                "embed_dim": self.embed_dim,
                "hidden_dim": self.hidden_dim,
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "learning_rate": self.learning_rate,
                "seed": self.seed,
                "max_sequence_length": self.max_sequence_length,
                "clip_norm": self.clip_norm,
            },
            "vocab": self.vocab_,
            "params": {k: v.tolist() for k, v in self.params_.items()},
            "loss_curve": self.loss_curve_,
        }
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "QuoteSpeechClassifier":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        model = cls(**payload["config"])
        model.vocab_ = dict(payload["vocab"])
        model.params_ = {k: np.array(v, dtype=float) for k, v in payload["params"].items()}
        model.loss_curve_ = list(payload["loss_curve"])
        return model


@dataclass(frozen=True)
class ClassifierReport:
    accuracy: float
    recall: dict[str, float]
    support: dict[str, int]
    confusion: dict[str, dict[str, int]]
    n_examples: int


def evaluate_classifier(classifier, examples) -> ClassifierReport:
    """Accuracy and per-class recall with raw counts on a labeled test split."""
    examples = list(examples)
    if not examples:
        raise ValidationError("evaluation needs a non-empty test split")
    predictions = classifier.predict([e.text for e in examples])
    confusion = {
        t.value: {p.value: 0 for p in CLASS_ORDER} for t in CLASS_ORDER
    }
    correct = 0
    for example, predicted in zip(examples, predictions):
        confusion[example.label.value][predicted.value] += 1
        correct += example.label is predicted
    support = {
        label.value: sum(confusion[label.value].values()) for label in CLASS_ORDER
    }
    recall = {
        label.value: (
            confusion[label.value][label.value] / support[label.value]
            if support[label.value]
            else 0.0
        )
        for label in CLASS_ORDER
    }
    return ClassifierReport(
        accuracy=correct / len(examples),
        recall=recall,
        support=support,
        confusion=confusion,
        n_examples=len(examples),
    )

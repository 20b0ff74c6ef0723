"""Reference workflow: synthetic corpus to trained methods to comparison table.

The constructor defaults of the estimators are conservative; the reference
pipeline pins stronger, measured training settings so the directional results
(classifier routing helps most on mixed queries, customised training helps on
mixed and costs a little on original) reproduce robustly at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import (
    ClassifierReport,
    QuoteSpeechClassifier,
    build_training_set,
    evaluate_classifier,
)
from .corpus import (
    Corpus,
    CustomisedTestSet,
    DatasetSplit,
    build_customised_test,
    build_customised_train,
    make_split,
    synth_corpus,
    synth_quote_sentences,
)
from .embedding import TwoTowerRetriever
from .evaluation import ComparisonTable, compare
from .router import MethodKind, RetrievalMethod
from .textsearch import Bm25Index, TranscriptDoc
from .validation import ValidationError

# training settings measured to give a strong desk-scale baseline; see README
EMBEDDING_TRAIN_SETTINGS = dict(joint_dim=256, margin=0.5, learning_rate=0.2, epochs=40)
CLASSIFIER_TRAIN_SETTINGS = dict(learning_rate=0.5, epochs=7, batch_size=32)
N_SYNTH_QUOTE_SOURCES = 2000
N_CLASSIFIER_CAPTIONS = 2000


def training_pairs(corpus: Corpus, annotations_by_clip):
    """Flatten an annotation map into aligned (texts, feature matrix) arrays."""
    texts, features = [], []
    for clip_id in sorted(annotations_by_clip):
        feature = corpus.clips[clip_id].video_feature
        if feature is None:
            raise ValidationError(f"training clip {clip_id} has no video feature")
        for annotation in annotations_by_clip[clip_id]:
            texts.append(annotation.text)
            features.append(feature)
    return texts, np.stack(features)


def train_embedding_model(corpus: Corpus, annotations_by_clip, seed: int,
                          **overrides) -> TwoTowerRetriever:
    settings = {**EMBEDDING_TRAIN_SETTINGS, **overrides}
    texts, features = training_pairs(corpus, annotations_by_clip)
    return TwoTowerRetriever(seed=seed, **settings).fit(texts, features)


def build_transcript_index(corpus: Corpus, k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    docs = [
        TranscriptDoc(cid, corpus.transcripts.get(cid, "")) for cid in corpus.clip_ids()
    ]
    return Bm25Index(k1=k1, b=b).fit(docs)


def train_query_classifier(corpus: Corpus, split: DatasetSplit, seed: int,
                           speech_vocab: int = 300, **overrides):
    """Train the quote-vs-visual classifier on synthetic quote scaffolds,
    the training clips' transcripts, and the training clips' captions."""
    settings = {**CLASSIFIER_TRAIN_SETTINGS, **overrides}
    quotes = synth_quote_sentences(N_SYNTH_QUOTE_SOURCES, speech_vocab, seed=seed)
    transcripts = [
        corpus.transcripts[cid]
        for cid in sorted(split.train_clip_ids)
        if cid in corpus.transcripts
    ]
    captions = [
        a.text
        for cid in sorted(split.train_clip_ids)
        for a in corpus.captions(cid)
    ][:N_CLASSIFIER_CAPTIONS]
    dataset = build_training_set(quotes, transcripts, captions, seed=seed)
    classifier = QuoteSpeechClassifier(seed=seed, **settings).fit(
        [e.text for e in dataset.train], [e.label for e in dataset.train]
    )
    report = evaluate_classifier(classifier, dataset.test)
    return classifier, dataset, report


@dataclass
class PipelineResult:
    corpus: Corpus
    split: DatasetSplit
    methods: dict[str, RetrievalMethod]
    classifier_report: ClassifierReport
    mixed: CustomisedTestSet
    table: ComparisonTable
    seed: int
    settings: dict = field(default_factory=dict)


def run_reference_pipeline(
    n_clips: int = 200,
    visual_vocab: int = 300,
    speech_vocab: int = 300,
    transcript_coverage: float = 0.6,
    noise_sigma: float = 0.1,
    seed: int = 7,
    train_fraction: float = 0.8,
    replace_max: int = 3,
    mixed_fraction: float = 0.5,
    embedding_overrides: dict | None = None,
    classifier_overrides: dict | None = None,
) -> PipelineResult:
    """Build everything and evaluate all three methods on both test sets."""
    corpus = synth_corpus(
        n_clips, visual_vocab, speech_vocab, transcript_coverage, noise_sigma, seed
    )
    split = make_split(corpus, train_fraction, seed=seed)
    clip_ids, features = corpus.feature_matrix()

    baseline_annotations = {cid: corpus.annotations[cid] for cid in split.train_clip_ids}
    customised_annotations = build_customised_train(corpus, split, replace_max, seed)
    baseline = train_embedding_model(
        corpus, baseline_annotations, seed, **(embedding_overrides or {})
    )
    customised = train_embedding_model(
        corpus, customised_annotations, seed, **(embedding_overrides or {})
    )
    index = build_transcript_index(corpus)
    classifier, _, report = train_query_classifier(
        corpus, split, seed, speech_vocab=speech_vocab, **(classifier_overrides or {})
    )

    clip_ids = tuple(clip_ids)
    methods = {
        "baseline": RetrievalMethod(
            "baseline", MethodKind.BASELINE, baseline, clip_ids, features
        ),
        "customised": RetrievalMethod(
            "customised", MethodKind.CUSTOMISED, customised, clip_ids, features
        ),
        "classifier": RetrievalMethod(
            "classifier", MethodKind.CLASSIFIER_ENHANCED, baseline, clip_ids, features,
            index=index, classifier=classifier,
        ),
    }
    mixed = build_customised_test(corpus, split.test_pairs, mixed_fraction, seed)
    table = compare(
        methods, {"original": list(split.test_pairs), "mixed": list(mixed.pairs)}
    )
    return PipelineResult(
        corpus=corpus,
        split=split,
        methods=methods,
        classifier_report=report,
        mixed=mixed,
        table=table,
        seed=seed,
        settings={
            "n_clips": n_clips,
            "visual_vocab": visual_vocab,
            "speech_vocab": speech_vocab,
            "transcript_coverage": transcript_coverage,
            "noise_sigma": noise_sigma,
            "train_fraction": train_fraction,
            "replace_max": replace_max,
            "mixed_fraction": mixed_fraction,
        },
    )

"""Archival data model: clips, annotations, shot grouping, splits and synthetic corpora.

The synthetic generator builds desk-scale corpora with two deliberately disjoint
vocabularies: captions use only "visual" tokens while transcripts use only
"speech" tokens wrapped in quote scaffolding.  Speech token ``spk0012`` mirrors
visual token ``vis0012``, so a clip's transcript is statistically tied to its
video feature and a model trained on transcript annotations can generalise to
unseen clips.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .validation import ValidationError, check_finite_vector, check_fraction, check_positive_int


class AnnotationKind(str, enum.Enum):
    CAPTION = "caption"
    TRANSCRIPT = "transcript"


class AnnotationOrigin(str, enum.Enum):
    ORIGINAL = "original"
    REPLACEMENT = "replacement"


@dataclass(frozen=True)
class ShotInterval:
    """One detected shot, in seconds from the start of its video."""

    start_s: float
    end_s: float

    def __post_init__(self):
        if self.start_s < 0:
            raise ValidationError(f"shot start must be non-negative, got {self.start_s}")
        if self.end_s <= self.start_s:
            raise ValidationError(
                f"shot end must exceed start, got [{self.start_s}, {self.end_s}]"
            )

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Clip:
    """An archival unit: a time span of one video, optionally with a feature vector."""

    clip_id: str
    video_id: str
    start_s: float
    end_s: float
    video_feature: np.ndarray | None = None

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValidationError(
                f"clip {self.clip_id}: end must exceed start "
                f"({self.start_s}, {self.end_s})"
            )
        if self.video_feature is not None:
            object.__setattr__(
                self,
                "video_feature",
                check_finite_vector(self.video_feature, name=f"feature of {self.clip_id}"),
            )

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Annotation:
    clip_id: str
    text: str
    kind: AnnotationKind = AnnotationKind.CAPTION
    origin: AnnotationOrigin = AnnotationOrigin.ORIGINAL

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError(f"annotation for {self.clip_id} has empty text")


@dataclass(frozen=True)
class GroundTruthPair:
    query_text: str
    clip_id: str
    source_kind: AnnotationKind = AnnotationKind.CAPTION


@dataclass(frozen=True)
class DatasetSplit:
    train_clip_ids: frozenset[str]
    test_pairs: tuple[GroundTruthPair, ...]
    seed: int

    def __post_init__(self):
        test_ids = {p.clip_id for p in self.test_pairs}
        overlap = test_ids & self.train_clip_ids
        if overlap:
            raise ValidationError(f"train/test clips overlap: {sorted(overlap)[:5]}")


@dataclass
class Corpus:
    """An immutable-by-convention archive: clips, their annotations and transcripts."""

    clips: dict[str, Clip] = field(default_factory=dict)
    annotations: dict[str, list[Annotation]] = field(default_factory=dict)
    transcripts: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.clips)

    def clip_ids(self) -> list[str]:
        return sorted(self.clips)

    def captions(self, clip_id: str) -> list[Annotation]:
        return [a for a in self.annotations.get(clip_id, []) if a.kind is AnnotationKind.CAPTION]

    def feature_matrix(self, clip_ids=None):
        """Stack features for the given clips (default: all, sorted by id)."""
        ids = list(clip_ids) if clip_ids is not None else self.clip_ids()
        missing = [c for c in ids if self.clips[c].video_feature is None]
        if missing:
            raise ValidationError(f"clips without features: {missing[:5]}")
        return ids, np.stack([self.clips[c].video_feature for c in ids])


def group_shots(intervals, min_duration: float = 12.0, video_id: str = "video"):
    """Merge consecutive shots left to right until each clip lasts >= min_duration.

    The trailing remainder shorter than the threshold is emitted as one final
    short clip so the output always covers the exact input span.
    """
    intervals = list(intervals)
    if not intervals:
        return []
    for prev, cur in zip(intervals, intervals[1:]):
        if cur.start_s != prev.end_s:
            raise ValidationError(
                f"shots are not contiguous: gap between end={prev.end_s} "
                f"and start={cur.start_s}"
            )
    spans = []
    open_start = intervals[0].start_s
    for idx, interval in enumerate(intervals):
        if open_start is not None and interval.end_s - open_start >= min_duration:
            spans.append((open_start, interval.end_s))
            open_start = intervals[idx + 1].start_s if idx + 1 < len(intervals) else None
    if open_start is not None:
        spans.append((open_start, intervals[-1].end_s))
    return [
        Clip(clip_id=f"{video_id}:{i:04d}", video_id=video_id, start_s=s, end_s=e)
        for i, (s, e) in enumerate(spans)
    ]


def make_split(corpus: Corpus, train_fraction: float, seed: int) -> DatasetSplit:
    """Partition clips into train and test; one (caption, clip) pair per test clip."""
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    ids = corpus.clip_ids()
    if len(ids) < 2:
        raise ValidationError("split needs at least 2 clips")
    for cid in ids:
        if not corpus.captions(cid):
            raise ValidationError(f"clip {cid} has no caption")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    n_train = int(len(ids) * train_fraction)
    n_train = max(1, min(len(ids) - 1, n_train))
    train_ids = frozenset(ids[i] for i in order[:n_train])
    test_ids = sorted(ids[i] for i in order[n_train:])
    pairs = []
    for cid in test_ids:
        captions = corpus.captions(cid)
        chosen = captions[rng.integers(len(captions))]
        pairs.append(GroundTruthPair(chosen.text, cid, AnnotationKind.CAPTION))
    return DatasetSplit(train_clip_ids=train_ids, test_pairs=tuple(pairs), seed=seed)


def build_customised_train(
    corpus: Corpus, split: DatasetSplit, replace_max: int = 3, seed: int = 0
) -> dict[str, list[Annotation]]:
    """Replace 1..replace_max captions per transcribed training clip with its transcript.

    Clips without a transcript keep their annotations untouched; the number of
    annotations per clip never changes.
    """
    check_positive_int(replace_max, "replace_max")
    rng = np.random.default_rng(seed)
    out: dict[str, list[Annotation]] = {}
    for cid in sorted(split.train_clip_ids):
        annotations = list(corpus.annotations.get(cid, []))
        transcript = corpus.transcripts.get(cid)
        if not transcript or not transcript.strip():
            out[cid] = annotations
            continue
        caption_idx = [
            i for i, a in enumerate(annotations) if a.kind is AnnotationKind.CAPTION
        ]
        if not caption_idx:
            out[cid] = annotations
            continue
        k = int(rng.integers(1, min(replace_max, len(caption_idx)) + 1))
        chosen = rng.choice(len(caption_idx), size=k, replace=False)
        for j in sorted(int(c) for c in chosen):
            i = caption_idx[j]
            annotations[i] = Annotation(
                clip_id=cid,
                text=transcript,
                kind=AnnotationKind.TRANSCRIPT,
                origin=AnnotationOrigin.REPLACEMENT,
            )
        out[cid] = annotations
    return out


@dataclass(frozen=True)
class CustomisedTestSet:
    """Mixed-query test pairs plus bookkeeping about how many swaps were possible."""

    pairs: tuple[GroundTruthPair, ...]
    requested: int
    replaced: int
    shortfall: int


def build_customised_test(
    corpus: Corpus, test_pairs, fraction: float = 0.5, seed: int = 0
) -> CustomisedTestSet:
    """Swap the query of a seeded sample of pairs for the clip's transcript.

    Only pairs whose clip has a transcript are eligible; if fewer are eligible
    than requested, all of them are replaced and the shortfall is recorded.
    """
    check_fraction(fraction, "fraction")
    pairs = list(test_pairs)
    rng = np.random.default_rng(seed)
    eligible = [
        i
        for i, p in enumerate(pairs)
        if corpus.transcripts.get(p.clip_id, "").strip()
    ]
    requested = int(fraction * len(pairs))
    n_replace = min(requested, len(eligible))
    chosen = rng.choice(len(eligible), size=n_replace, replace=False) if n_replace else []
    out = list(pairs)
    for j in sorted(int(c) for c in chosen):
        i = eligible[j]
        out[i] = replace(
            pairs[i],
            query_text=corpus.transcripts[pairs[i].clip_id],
            source_kind=AnnotationKind.TRANSCRIPT,
        )
    return CustomisedTestSet(
        pairs=tuple(out),
        requested=requested,
        replaced=n_replace,
        shortfall=requested - n_replace,
    )


# Quote scaffolding shared by the synthetic transcripts and the classifier's
# synthetic quote sources.  Each template satisfies at least one quote rule.
QUOTE_TEMPLATES = (
    'he said, "{words}"',
    'she said, "{words}"',
    'the reporter said, "{words}"',
    'the guest replied, "{words}"',
    "according to the speaker, {words}",
    "according to him, {words}",
    'the host explained: "{words}"',
    'the announcer declared: "{words}"',
    '"{words}" was the answer',
    '"{words}" he whispered',
)


def visual_token(i: int) -> str:
    return f"vis{i:04d}"


def speech_token(i: int) -> str:
    return f"spk{i:04d}"


def synth_quote_sentences(n: int, speech_vocab: int, seed: int = 0) -> list[str]:
    """Quote-scaffolded sentences over the speech vocabulary, for classifier training."""
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(n):
        template = QUOTE_TEMPLATES[int(rng.integers(len(QUOTE_TEMPLATES)))]
        n_words = int(rng.integers(3, 9))
        words = " ".join(
            speech_token(int(i)) for i in rng.integers(0, speech_vocab, size=n_words)
        )
        sentences.append(template.format(words=words))
    return sentences


def synth_corpus(
    n_clips: int,
    visual_vocab: int = 300,
    speech_vocab: int = 300,
    transcript_coverage: float = 0.6,
    noise_sigma: float = 0.1,
    seed: int = 0,
    captions_per_clip: int = 20,
    topic_size: int = 8,
) -> Corpus:
    """Deterministic synthetic archive.

    Every clip gets a latent topic (a bag of visual-vocab words), captions
    sampled from that topic, a video feature equal to the topic's bag-of-words
    vector plus Gaussian noise, and (for a coverage fraction of clips) a
    quote-styled transcript whose speech tokens mirror the topic's indices.
    """
    check_positive_int(n_clips, "n_clips")
    if visual_vocab < 10 or speech_vocab < 10:
        raise ValidationError("vocabulary sizes must be >= 10")
    check_fraction(transcript_coverage, "transcript_coverage")
    if noise_sigma < 0:
        raise ValidationError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    corpus = Corpus()

    n_transcribed = int(transcript_coverage * n_clips)
    transcribed = set(
        int(i) for i in rng.choice(n_clips, size=n_transcribed, replace=False)
    )

    for i in range(n_clips):
        cid = f"clip{i:04d}"
        topic = rng.integers(0, visual_vocab, size=topic_size)
        feature = np.zeros(visual_vocab)
        for t in topic:
            feature[int(t)] += 1.0
        if noise_sigma > 0:
            feature = feature + noise_sigma * rng.standard_normal(visual_vocab)
        duration = float(12 + rng.integers(0, 19))
        corpus.clips[cid] = Clip(
            clip_id=cid,
            video_id=f"video{i:04d}",
            start_s=0.0,
            end_s=duration,
            video_feature=feature,
        )
        annotations = []
        for _ in range(captions_per_clip):
            n_words = int(rng.integers(4, 9))
            words = topic[rng.integers(0, topic_size, size=n_words)]
            text = " ".join(visual_token(int(w)) for w in words)
            annotations.append(Annotation(clip_id=cid, text=text))
        corpus.annotations[cid] = annotations
        if i in transcribed:
            template = QUOTE_TEMPLATES[int(rng.integers(len(QUOTE_TEMPLATES)))]
            # speech mirrors the whole topic so transcript queries carry the
            # same evidence as the video feature, in the disjoint vocabulary
            words = topic[rng.permutation(topic_size)]
            spoken = " ".join(speech_token(int(w) % speech_vocab) for w in words)
            corpus.transcripts[cid] = template.format(words=spoken)
    return corpus

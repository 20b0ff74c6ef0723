"""Line-delimited JSON persistence for corpora, pairs and splits.

One record per line, UTF-8, separate files per record type: append-friendly
and diffable.  Clip features live in features.jsonl so large vectors do not
bloat the clip table.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .corpus import (
    Annotation,
    AnnotationKind,
    AnnotationOrigin,
    Clip,
    Corpus,
    DatasetSplit,
    GroundTruthPair,
)
from .validation import ValidationError, check_finite_vector

CLIPS_FILE = "clips.jsonl"
ANNOTATIONS_FILE = "annotations.jsonl"
FEATURES_FILE = "features.jsonl"
TRANSCRIPTS_FILE = "transcripts.jsonl"
PAIRS_FILE = "pairs.jsonl"
SPLIT_FILE = "split.json"


def write_jsonl(path: str, records) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    os.replace(tmp, path)


def read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: invalid JSON record") from exc
    return records


def save_corpus(corpus: Corpus, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    ids = corpus.clip_ids()
    write_jsonl(
        os.path.join(directory, CLIPS_FILE),
        (
            {
                "clip_id": c,
                "video_id": corpus.clips[c].video_id,
                "start_s": corpus.clips[c].start_s,
                "end_s": corpus.clips[c].end_s,
            }
            for c in ids
        ),
    )
    write_jsonl(
        os.path.join(directory, ANNOTATIONS_FILE),
        (
            {
                "clip_id": a.clip_id,
                "text": a.text,
                "kind": a.kind.value,
                "origin": a.origin.value,
            }
            for c in ids
            for a in corpus.annotations.get(c, [])
        ),
    )
    write_jsonl(
        os.path.join(directory, FEATURES_FILE),
        (
            {"clip_id": c, "vector": corpus.clips[c].video_feature.tolist()}
            for c in ids
            if corpus.clips[c].video_feature is not None
        ),
    )
    write_jsonl(
        os.path.join(directory, TRANSCRIPTS_FILE),
        (
            {"clip_id": c, "text": corpus.transcripts[c]}
            for c in ids
            if c in corpus.transcripts
        ),
    )


def load_corpus(directory: str) -> Corpus:
    corpus = Corpus()
    for record in read_jsonl(os.path.join(directory, CLIPS_FILE)):
        clip = Clip(
            clip_id=record["clip_id"],
            video_id=record["video_id"],
            start_s=record["start_s"],
            end_s=record["end_s"],
        )
        if clip.clip_id in corpus.clips:
            raise ValidationError(f"duplicate clip_id: {clip.clip_id}")
        corpus.clips[clip.clip_id] = clip
        corpus.annotations[clip.clip_id] = []

    features_path = os.path.join(directory, FEATURES_FILE)
    if os.path.exists(features_path):
        for record in read_jsonl(features_path):
            cid = record["clip_id"]
            if cid not in corpus.clips:
                raise ValidationError(f"feature for unknown clip: {cid}")
            vector = check_finite_vector(
                np.array(record["vector"], dtype=float), name=f"feature of {cid}"
            )
            old = corpus.clips[cid]
            corpus.clips[cid] = Clip(
                clip_id=old.clip_id,
                video_id=old.video_id,
                start_s=old.start_s,
                end_s=old.end_s,
                video_feature=vector,
            )

    annotations_path = os.path.join(directory, ANNOTATIONS_FILE)
    if os.path.exists(annotations_path):
        for record in read_jsonl(annotations_path):
            cid = record["clip_id"]
            if cid not in corpus.clips:
                raise ValidationError(f"annotation for unknown clip: {cid}")
            corpus.annotations[cid].append(
                Annotation(
                    clip_id=cid,
                    text=record["text"],
                    kind=AnnotationKind(record.get("kind", "caption")),
                    origin=AnnotationOrigin(record.get("origin", "original")),
                )
            )

    transcripts_path = os.path.join(directory, TRANSCRIPTS_FILE)
    if os.path.exists(transcripts_path):
        for record in read_jsonl(transcripts_path):
            cid = record["clip_id"]
            if cid not in corpus.clips:
                raise ValidationError(f"transcript for unknown clip: {cid}")
            corpus.transcripts[cid] = record["text"]
    return corpus


def save_pairs(pairs, path: str) -> None:
    write_jsonl(
        path,
        (
            {
                "query_text": p.query_text,
                "clip_id": p.clip_id,
                "source_kind": p.source_kind.value,
            }
            for p in pairs
        ),
    )


def load_pairs(path: str) -> list[GroundTruthPair]:
    return [
        GroundTruthPair(
            query_text=r["query_text"],
            clip_id=r["clip_id"],
            source_kind=AnnotationKind(r.get("source_kind", "caption")),
        )
        for r in read_jsonl(path)
    ]


def save_split(split: DatasetSplit, path: str) -> None:
    payload = {
        "seed": split.seed,
        "train_clip_ids": sorted(split.train_clip_ids),
        "test_pairs": [
            {
                "query_text": p.query_text,
                "clip_id": p.clip_id,
                "source_kind": p.source_kind.value,
            }
            for p in split.test_pairs
        ],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    os.replace(tmp, path)


def load_split(path: str) -> DatasetSplit:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return DatasetSplit(
        train_clip_ids=frozenset(payload["train_clip_ids"]),
        test_pairs=tuple(
            GroundTruthPair(
                query_text=p["query_text"],
                clip_id=p["clip_id"],
                source_kind=AnnotationKind(p.get("source_kind", "caption")),
            )
            for p in payload["test_pairs"]
        ),
        seed=payload["seed"],
    )

"""HTTP engine: ingestion, training, search, evaluation report, feedback capture.

Read endpoints are safe for concurrent callers because every bound artifact is
immutable; mutating endpoints validate their whole payload first, then apply
under one lock, so a failed request leaves every store unchanged.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import Body, FastAPI, HTTPException, Query

from .classifier import QuoteSpeechClassifier
from .corpus import Annotation, AnnotationKind, AnnotationOrigin, Clip, Corpus
from .embedding import TwoTowerRetriever
from .pipeline import (
    CLASSIFIER_TRAIN_SETTINGS,
    EMBEDDING_TRAIN_SETTINGS,
    build_transcript_index,
    training_pairs,
)
from .router import MethodKind, RetrievalMethod
from .router import query as route_query
from .router import route
from .textsearch import Bm25Index
from .validation import UnencodableQueryError, ValidationError
from . import storage

RATING_ASPECTS = ("engagingness", "interestingness", "humanness", "informativeness")
VOTE_CHOICES = ("text_to_video", "traditional")
QUERY_KINDS = ("visual", "quote", "unknown")
DEFAULT_SEARCH_K = 3


@dataclass
class EngineState:
    corpus: Corpus = field(default_factory=Corpus)
    methods: dict[str, RetrievalMethod] = field(default_factory=dict)
    classifier: QuoteSpeechClassifier | None = None
    index: Bm25Index | None = None
    corpus_dir: str | None = None
    artifacts_dir: str | None = None
    ratings_path: str | None = None
    votes_path: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def feature_binding(self):
        ids, features = self.corpus.feature_matrix()
        return tuple(ids), features


def _append_jsonl(path: str, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _read_jsonl(path: str) -> list[dict]:
    if not path or not os.path.exists(path):
        return []
    return storage.read_jsonl(path)


def load_methods(bindings: dict, corpus: Corpus) -> dict[str, RetrievalMethod]:
    """Instantiate retrieval methods from a name -> artifact-paths mapping."""
    clip_ids, features = corpus.feature_matrix()
    clip_ids = tuple(clip_ids)
    methods = {}
    for name, entry in bindings.items():
        if not os.path.exists(entry["model"]):
            raise ValidationError(f"method {name}: missing artifact {entry['model']}")
        kind = MethodKind(entry["kind"])
        retriever = TwoTowerRetriever.load(entry["model"])
        index = classifier = None
        if kind is MethodKind.CLASSIFIER_ENHANCED:
            for key in ("index", "classifier"):
                if key not in entry or not os.path.exists(entry[key]):
                    raise ValidationError(
                        f"method {name}: missing artifact {entry.get(key, key)}"
                    )
            index = Bm25Index.load(entry["index"])
            classifier = QuoteSpeechClassifier.load(entry["classifier"])
        methods[name] = RetrievalMethod(
            name, kind, retriever, clip_ids, features, index=index, classifier=classifier
        )
    return methods


def build_state(config: dict) -> EngineState:
    """Load corpus and artifacts named by a serve-config mapping."""
    state = EngineState()
    corpus_dir = config.get("corpus_dir")
    if corpus_dir:
        clips_file = os.path.join(corpus_dir, storage.CLIPS_FILE)
        if not os.path.exists(clips_file):
            raise ValidationError(f"missing corpus file: {clips_file}")
        state.corpus = storage.load_corpus(corpus_dir)
        state.corpus_dir = corpus_dir
    artifacts_dir = config.get("artifacts_dir") or corpus_dir or "."
    os.makedirs(artifacts_dir, exist_ok=True)
    state.artifacts_dir = artifacts_dir
    state.ratings_path = os.path.join(artifacts_dir, "ratings.jsonl")
    state.votes_path = os.path.join(artifacts_dir, "votes.jsonl")
    if config.get("methods"):
        state.methods = load_methods(config["methods"], state.corpus)
        for method in state.methods.values():
            if method.index is not None:
                state.index = method.index
            if method.classifier is not None:
                state.classifier = method.classifier
    return state


def _clip_payload(state: EngineState, result) -> dict:
    clip = state.corpus.clips[result.clip_id]
    captions = state.corpus.captions(result.clip_id)
    return {
        "clip_id": result.clip_id,
        "rank": result.rank,
        "score": result.score,
        "backend": result.backend.value,
        "video_id": clip.video_id,
        "start_s": clip.start_s,
        "end_s": clip.end_s,
        "caption_preview": captions[0].text[:120] if captions else "",
        "transcript_preview": state.corpus.transcripts.get(result.clip_id, "")[:120],
    }


def _validate_rating(payload: dict) -> dict:
    for key in ("session_id", "query_id", "method", "clip_id", "stars"):
        if key not in payload:
            raise HTTPException(400, f"rating is missing field {key!r}")
    stars = payload["stars"]
    if not isinstance(stars, int) or isinstance(stars, bool) or not 1 <= stars <= 5:
        raise HTTPException(400, f"stars must be an integer in 1..5, got {stars!r}")
    kind = payload.get("query_kind", "unknown")
    if kind not in QUERY_KINDS:
        raise HTTPException(400, f"query_kind must be one of {QUERY_KINDS}, got {kind!r}")
    return {
        "session_id": str(payload["session_id"]),
        "query_id": str(payload["query_id"]),
        "method": str(payload["method"]),
        "clip_id": str(payload["clip_id"]),
        "stars": stars,
        "query_kind": kind,
        "timestamp": float(payload.get("timestamp") or time.time()),
    }


def _validate_vote(payload: dict) -> dict:
    for key in ("session_id", "aspect", "choice"):
        if key not in payload:
            raise HTTPException(400, f"vote is missing field {key!r}")
    aspect = str(payload["aspect"]).lower()
    if aspect not in RATING_ASPECTS:
        raise HTTPException(400, f"unknown aspect {payload['aspect']!r}")
    choice = str(payload["choice"]).lower()
    if choice not in VOTE_CHOICES:
        raise HTTPException(400, f"choice must be one of {VOTE_CHOICES}")
    return {
        "session_id": str(payload["session_id"]),
        "aspect": aspect,
        "choice": choice,
        "timestamp": float(payload.get("timestamp") or time.time()),
    }


def create_app(state: EngineState) -> FastAPI:
    app = FastAPI(title="avsearch", version="0.1.0")
    app.state.engine = state

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "corpus_size": len(state.corpus),
            "methods": sorted(state.methods),
        }

    @app.get("/search")
    def search(q: str = Query(...), method: str = Query(...),
               k: int = Query(DEFAULT_SEARCH_K)):
        if not state.methods:
            raise HTTPException(409, "no method bound")
        if method not in state.methods:
            raise HTTPException(404, f"unknown method {method!r}")
        if k < 1 or k > max(1, len(state.corpus)):
            raise HTTPException(400, f"k must be in 1..{len(state.corpus)}")
        bound = state.methods[method]
        routed = route(bound, q)
        try:
            results = route_query(bound, q, k)
        except UnencodableQueryError as exc:
            raise HTTPException(
                422,
                detail={"reason": "unencodable_query", "message": str(exc)},
            ) from exc
        return {
            "query": q,
            "method": method,
            "k": k,
            "backend": routed.backend_used.value,
            "decided_class": (
                {
                    "label": routed.decided_class.label.value,
                    "confidence": routed.decided_class.confidence,
                }
                if routed.decided_class is not None
                else None
            ),
            "results": [_clip_payload(state, r) for r in results],
        }

    def _ingest_clips(records):
        staged = {}
        for record in records:
            clip = Clip(
                clip_id=record["clip_id"],
                video_id=record["video_id"],
                start_s=float(record["start_s"]),
                end_s=float(record["end_s"]),
            )
            if clip.clip_id in state.corpus.clips or clip.clip_id in staged:
                raise ValidationError(f"duplicate clip_id {clip.clip_id}")
            staged[clip.clip_id] = clip
        state.corpus.clips.update(staged)
        for cid in staged:
            state.corpus.annotations.setdefault(cid, [])
        return len(staged)

    def _ingest_annotations(records):
        staged = []
        for record in records:
            annotation = Annotation(
                clip_id=record["clip_id"],
                text=record["text"],
                kind=AnnotationKind(record.get("kind", "caption")),
                origin=AnnotationOrigin(record.get("origin", "original")),
            )
            if annotation.clip_id not in state.corpus.clips:
                raise ValidationError(f"annotation for unknown clip {annotation.clip_id}")
            staged.append(annotation)
        for annotation in staged:
            state.corpus.annotations.setdefault(annotation.clip_id, []).append(annotation)
        return len(staged)

    def _ingest_features(records):
        staged = {}
        for record in records:
            cid = record["clip_id"]
            if cid not in state.corpus.clips:
                raise ValidationError(f"feature for unknown clip {cid}")
            vector = np.asarray(record["vector"], dtype=float)
            old = state.corpus.clips[cid]
            staged[cid] = Clip(
                clip_id=cid, video_id=old.video_id, start_s=old.start_s,
                end_s=old.end_s, video_feature=vector,
            )
        state.corpus.clips.update(staged)
        return len(staged)

    def _ingest_transcripts(records):
        staged = {}
        for record in records:
            cid = record["clip_id"]
            if cid not in state.corpus.clips:
                raise ValidationError(f"transcript for unknown clip {cid}")
            staged[cid] = str(record["text"])
        state.corpus.transcripts.update(staged)
        return len(staged)

    ingestors = {
        "clips": _ingest_clips,
        "annotations": _ingest_annotations,
        "features": _ingest_features,
        "transcripts": _ingest_transcripts,
    }

    @app.post("/ingest/{record_type}")
    def ingest(record_type: str, payload=Body(...)):
        if record_type not in ingestors:
            raise HTTPException(404, f"unknown record type {record_type!r}")
        records = payload.get("records") if isinstance(payload, dict) else payload
        if not isinstance(records, list):
            raise HTTPException(400, "body must be a list of records or {'records': [...]}")
        with state.lock:
            try:
                count = ingestors[record_type](records)
            except (ValidationError, KeyError, TypeError, ValueError) as exc:
                raise HTTPException(400, f"invalid {record_type} payload: {exc}") from exc
            if state.corpus_dir:
                storage.save_corpus(state.corpus, state.corpus_dir)
        return {"ingested": count, "record_type": record_type}

    @app.post("/train/embedding")
    def train_embedding(payload: dict = Body(default={})):
        name = payload.get("name", "baseline")
        kind = payload.get("kind", "baseline")
        if kind not in (MethodKind.BASELINE.value, MethodKind.CUSTOMISED.value):
            raise HTTPException(400, "kind must be baseline or customised")
        seed = int(payload.get("seed", 0))
        overrides = {
            key: payload[key]
            for key in EMBEDDING_TRAIN_SETTINGS
            if key in payload
        }
        with state.lock:
            trainable = {
                cid: anns
                for cid, anns in state.corpus.annotations.items()
                if anns and state.corpus.clips[cid].video_feature is not None
            }
            if len(trainable) < 2:
                raise HTTPException(409, "corpus has too few annotated clips with features")
            settings = {**EMBEDDING_TRAIN_SETTINGS, **overrides}
            texts, features = training_pairs(state.corpus, trainable)
            try:
                model = TwoTowerRetriever(seed=seed, **settings).fit(texts, features)
            except ValidationError as exc:
                raise HTTPException(400, str(exc)) from exc
            clip_ids, feature_matrix = state.feature_binding()
            state.methods[name] = RetrievalMethod(
                name, MethodKind(kind), model, clip_ids, feature_matrix
            )
            if state.artifacts_dir:
                model.save(os.path.join(state.artifacts_dir, f"{name}.model.json"))
            _maybe_bind_classifier_method(state)
        return {"trained": name, "kind": kind, "epochs": settings["epochs"],
                "final_loss": model.loss_curve_[-1]}

    @app.post("/train/classifier")
    def train_classifier_endpoint(payload: dict = Body(default={})):
        from .corpus import synth_quote_sentences
        from .classifier import build_training_set, evaluate_classifier

        seed = int(payload.get("seed", 0))
        with state.lock:
            transcripts = [t for t in state.corpus.transcripts.values() if t.strip()]
            captions = [
                a.text
                for cid in state.corpus.clip_ids()
                for a in state.corpus.captions(cid)
            ]
            quotes = synth_quote_sentences(
                int(payload.get("n_quote_sources", 500)), 300, seed=seed
            )
            try:
                dataset = build_training_set(quotes, transcripts, captions[:2000], seed=seed)
                settings = {
                    **CLASSIFIER_TRAIN_SETTINGS,
                    **{k: payload[k] for k in CLASSIFIER_TRAIN_SETTINGS if k in payload},
                }
                classifier = QuoteSpeechClassifier(seed=seed, **settings).fit(
                    [e.text for e in dataset.train], [e.label for e in dataset.train]
                )
            except ValidationError as exc:
                raise HTTPException(409, str(exc)) from exc
            report = evaluate_classifier(classifier, dataset.test)
            state.classifier = classifier
            if state.artifacts_dir:
                classifier.save(os.path.join(state.artifacts_dir, "classifier.model.json"))
            _maybe_bind_classifier_method(state)
        return {
            "trained": "classifier",
            "heldout_accuracy": report.accuracy,
            "recall": report.recall,
        }

    @app.post("/index/build")
    def build_index(payload: dict = Body(default={})):
        with state.lock:
            if not state.corpus.transcripts:
                raise HTTPException(409, "corpus has no transcripts to index")
            state.index = build_transcript_index(
                state.corpus,
                k1=float(payload.get("k1", 1.2)),
                b=float(payload.get("b", 0.75)),
            )
            if state.artifacts_dir:
                state.index.save(os.path.join(state.artifacts_dir, "index.json"))
            _maybe_bind_classifier_method(state)
        return {"indexed_docs": state.index.n_docs_, "avgdl": state.index.avgdl_}

    def _maybe_bind_classifier_method(state: EngineState):
        """Bind/refresh the classifier-enhanced method once all parts exist."""
        if state.classifier is None or state.index is None:
            return
        base = next(
            (
                state.methods[n]
                for n in sorted(state.methods)
                if state.methods[n].kind is not MethodKind.CLASSIFIER_ENHANCED
            ),
            None,
        )
        if base is None:
            return
        state.methods["classifier"] = RetrievalMethod(
            "classifier", MethodKind.CLASSIFIER_ENHANCED, base.retriever,
            base.clip_ids, base.clip_features, index=state.index,
            classifier=state.classifier,
        )

    @app.post("/rate")
    def rate(payload: dict = Body(...)):
        record = _validate_rating(payload)
        if state.ratings_path is None:
            raise HTTPException(409, "ratings store is not configured")
        with state.lock:
            _append_jsonl(state.ratings_path, record)
            count = len(_read_jsonl(state.ratings_path))
        return {"stored": True, "n_ratings": count}

    @app.post("/vote")
    def vote(payload: dict = Body(...)):
        record = _validate_vote(payload)
        if state.votes_path is None:
            raise HTTPException(409, "votes store is not configured")
        with state.lock:
            existing = _read_jsonl(state.votes_path)
            updated = any(
                r["session_id"] == record["session_id"] and r["aspect"] == record["aspect"]
                for r in existing
            )
            _append_jsonl(state.votes_path, record)
        return {"stored": True, "updated": updated}

    @app.get("/summary/ratings")
    def ratings_summary():
        records = _read_jsonl(state.ratings_path)
        grouped: dict[str, dict[str, list[int]]] = {}
        for record in records:
            grouped.setdefault(record["method"], {}).setdefault(
                record.get("query_kind", "unknown"), []
            ).append(record["stars"])
        return {
            "n_ratings": len(records),
            "mean_stars": {
                method: {
                    kind: {"mean": sum(stars) / len(stars), "count": len(stars)}
                    for kind, stars in sorted(kinds.items())
                }
                for method, kinds in sorted(grouped.items())
            },
        }

    @app.get("/summary/votes")
    def votes_summary():
        records = _read_jsonl(state.votes_path)
        latest: dict[tuple[str, str], str] = {}
        for record in records:  # append order; later submissions overwrite
            latest[(record["session_id"], record["aspect"])] = record["choice"]
        counts = {
            aspect: {choice: 0 for choice in VOTE_CHOICES} for aspect in RATING_ASPECTS
        }
        for (_, aspect), choice in latest.items():
            counts[aspect][choice] += 1
        return {"n_sessions_voted": len({s for s, _ in latest}), "votes": counts}

    @app.get("/eval/report")
    def eval_report():
        path = os.path.join(state.artifacts_dir or ".", "report.json")
        if not os.path.exists(path):
            raise HTTPException(404, "no evaluation report has been produced yet")
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    return app


def serve(config: dict, host: str = "127.0.0.1", port: int = 8080):
    """Build state from config and run the HTTP server (blocking)."""
    import uvicorn

    state = build_state(config)
    app = create_app(state)
    uvicorn.run(app, host=host, port=port)

"""Command-line entry points for every engine workflow.

Exit codes: 0 success, 1 validation error, 2 failed ordering assertion in
`eval --assert-orderings`.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from . import storage
from .corpus import build_customised_test, build_customised_train, make_split, synth_corpus
from .evaluation import check_orderings, compare
from .pipeline import (
    CLASSIFIER_TRAIN_SETTINGS,
    EMBEDDING_TRAIN_SETTINGS,
    build_transcript_index,
    train_embedding_model,
    train_query_classifier,
)
from .validation import ValidationError


def handles_validation_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """Classifier-routed text-to-video retrieval engine."""


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--clips", default=200, show_default=True)
@click.option("--visual-vocab", default=300, show_default=True)
@click.option("--speech-vocab", default=300, show_default=True)
@click.option("--coverage", default=0.6, show_default=True)
@click.option("--noise-sigma", default=0.1, show_default=True)
@click.option("--seed", default=7, show_default=True)
@handles_validation_errors
def synth(out, clips, visual_vocab, speech_vocab, coverage, noise_sigma, seed):
    """Generate a deterministic synthetic corpus into a directory."""
    corpus = synth_corpus(clips, visual_vocab, speech_vocab, coverage, noise_sigma, seed)
    storage.save_corpus(corpus, out)
    click.echo(f"wrote {len(corpus)} clips ({len(corpus.transcripts)} transcribed) to {out}")


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--clips", "clips_file", required=True, type=click.Path(exists=True))
@click.option("--annotations", "annotations_file", type=click.Path(exists=True))
@click.option("--features", "features_file", type=click.Path(exists=True))
@click.option("--transcripts", "transcripts_file", type=click.Path(exists=True))
@handles_validation_errors
def ingest(corpus_dir, clips_file, annotations_file, features_file, transcripts_file):
    """Validate record files and assemble them into a corpus directory."""
    os.makedirs(corpus_dir, exist_ok=True)
    staging = {
        storage.CLIPS_FILE: clips_file,
        storage.ANNOTATIONS_FILE: annotations_file,
        storage.FEATURES_FILE: features_file,
        storage.TRANSCRIPTS_FILE: transcripts_file,
    }
    for target, source in staging.items():
        if source:
            storage.write_jsonl(
                os.path.join(corpus_dir, target), storage.read_jsonl(source)
            )
    corpus = storage.load_corpus(corpus_dir)  # full validation pass
    storage.save_corpus(corpus, corpus_dir)
    click.echo(f"ingested {len(corpus)} clips into {corpus_dir}")


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--train-fraction", default=0.8, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", "split_file", type=click.Path())
@click.option("--pairs-out", "pairs_file", type=click.Path())
@handles_validation_errors
def split(corpus_dir, train_fraction, seed, split_file, pairs_file):
    """Partition clips into train/test and emit ground-truth pairs."""
    corpus = storage.load_corpus(corpus_dir)
    dataset_split = make_split(corpus, train_fraction, seed)
    split_file = split_file or os.path.join(corpus_dir, storage.SPLIT_FILE)
    pairs_file = pairs_file or os.path.join(corpus_dir, storage.PAIRS_FILE)
    storage.save_split(dataset_split, split_file)
    storage.save_pairs(dataset_split.test_pairs, pairs_file)
    click.echo(
        f"{len(dataset_split.train_clip_ids)} train clips, "
        f"{len(dataset_split.test_pairs)} test pairs -> {split_file}"
    )


@main.command("customise-train")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--split", "split_file", required=True, type=click.Path(exists=True))
@click.option("--replace-max", default=3, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", required=True, type=click.Path())
@handles_validation_errors
def customise_train(corpus_dir, split_file, replace_max, seed, out):
    """Swap captions for transcripts in the training annotation set."""
    corpus = storage.load_corpus(corpus_dir)
    dataset_split = storage.load_split(split_file)
    annotations = build_customised_train(corpus, dataset_split, replace_max, seed)
    storage.write_jsonl(
        out,
        (
            {"clip_id": a.clip_id, "text": a.text, "kind": a.kind.value,
             "origin": a.origin.value}
            for cid in sorted(annotations)
            for a in annotations[cid]
        ),
    )
    n_replaced = sum(
        a.origin.value == "replacement" for anns in annotations.values() for a in anns
    )
    click.echo(f"wrote customised training annotations ({n_replaced} replacements) to {out}")


@main.command("customise-test")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_file", required=True, type=click.Path(exists=True))
@click.option("--fraction", default=0.5, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", required=True, type=click.Path())
@handles_validation_errors
def customise_test(corpus_dir, pairs_file, fraction, seed, out):
    """Replace a fraction of test queries with the clips' transcripts."""
    corpus = storage.load_corpus(corpus_dir)
    pairs = storage.load_pairs(pairs_file)
    result = build_customised_test(corpus, pairs, fraction, seed)
    storage.save_pairs(result.pairs, out)
    message = f"replaced {result.replaced}/{result.requested} queries -> {out}"
    if result.shortfall:
        message += f" (warning: {result.shortfall} requested swaps had no transcript)"
    click.echo(message)


@main.command("train-embedding")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--split", "split_file", type=click.Path(exists=True))
@click.option("--annotations", "annotations_file", type=click.Path(exists=True),
              help="Annotation records to train on (e.g. a customised set); "
              "defaults to the corpus annotations of the training clips.")
@click.option("--seed", default=7, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--joint-dim", default=EMBEDDING_TRAIN_SETTINGS["joint_dim"], show_default=True)
@click.option("--margin", default=EMBEDDING_TRAIN_SETTINGS["margin"], show_default=True)
@click.option("--learning-rate", default=EMBEDDING_TRAIN_SETTINGS["learning_rate"],
              show_default=True)
@click.option("--epochs", default=EMBEDDING_TRAIN_SETTINGS["epochs"], show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@handles_validation_errors
def train_embedding(corpus_dir, split_file, annotations_file, seed, out,
                    joint_dim, margin, learning_rate, epochs, batch_size):
    """Train a joint text/video embedding model and save it."""
    from .corpus import Annotation, AnnotationKind, AnnotationOrigin

    corpus = storage.load_corpus(corpus_dir)
    if annotations_file:
        annotations_by_clip: dict = {}
        for record in storage.read_jsonl(annotations_file):
            annotation = Annotation(
                clip_id=record["clip_id"], text=record["text"],
                kind=AnnotationKind(record.get("kind", "caption")),
                origin=AnnotationOrigin(record.get("origin", "original")),
            )
            annotations_by_clip.setdefault(annotation.clip_id, []).append(annotation)
    elif split_file:
        dataset_split = storage.load_split(split_file)
        annotations_by_clip = {
            cid: corpus.annotations[cid] for cid in dataset_split.train_clip_ids
        }
    else:
        annotations_by_clip = {
            cid: anns for cid, anns in corpus.annotations.items() if anns
        }
    model = train_embedding_model(
        corpus, annotations_by_clip, seed, joint_dim=joint_dim, margin=margin,
        learning_rate=learning_rate, epochs=epochs, batch_size=batch_size,
    )
    model.save(out)
    click.echo(
        f"trained on {sum(len(a) for a in annotations_by_clip.values())} pairs; "
        f"loss {model.loss_curve_[0]:.4f} -> {model.loss_curve_[-1]:.4f}; saved {out}"
    )


@main.command("train-classifier")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--split", "split_file", required=True, type=click.Path(exists=True))
@click.option("--seed", default=7, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--epochs", default=CLASSIFIER_TRAIN_SETTINGS["epochs"], show_default=True)
@click.option("--learning-rate", default=CLASSIFIER_TRAIN_SETTINGS["learning_rate"],
              show_default=True)
@handles_validation_errors
def train_classifier(corpus_dir, split_file, seed, out, epochs, learning_rate):
    """Train the quote-vs-visual query classifier and save it."""
    corpus = storage.load_corpus(corpus_dir)
    dataset_split = storage.load_split(split_file)
    classifier, _, report = train_query_classifier(
        corpus, dataset_split, seed, epochs=epochs, learning_rate=learning_rate
    )
    classifier.save(out)
    click.echo(
        f"held-out accuracy {report.accuracy:.3f} "
        f"(recall visual={report.recall['visual']:.3f}, "
        f"quote={report.recall['quote_speech']:.3f}); saved {out}"
    )


@main.command("build-index")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--k1", default=1.2, show_default=True)
@click.option("--b", default=0.75, show_default=True)
@handles_validation_errors
def build_index(corpus_dir, out, k1, b):
    """Build the BM25 inverted index over clip transcripts."""
    corpus = storage.load_corpus(corpus_dir)
    index = build_transcript_index(corpus, k1=k1, b=b)
    index.save(out)
    click.echo(f"indexed {index.n_docs_} transcript docs (avgdl {index.avgdl_:.2f}) -> {out}")


def _load_methods_from_bindings(bindings_file, corpus):
    from .service import load_methods

    with open(bindings_file, encoding="utf-8") as fh:
        bindings = json.load(fh)
    return load_methods(bindings, corpus)


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--bindings", "bindings_file", required=True, type=click.Path(exists=True))
@click.option("--method", required=True)
@click.option("--q", "query_text", required=True)
@click.option("--k", default=3, show_default=True)
@handles_validation_errors
def search(corpus_dir, bindings_file, method, query_text, k):
    """Run one query against a bound method and print ranked results."""
    from .router import query as route_query, route
    from .validation import UnencodableQueryError

    corpus = storage.load_corpus(corpus_dir)
    methods = _load_methods_from_bindings(bindings_file, corpus)
    if method not in methods:
        raise ValidationError(f"unknown method {method!r}; bound: {sorted(methods)}")
    bound = methods[method]
    routed = route(bound, query_text)
    try:
        results = route_query(bound, query_text, k)
    except UnencodableQueryError as exc:
        click.echo(f"unencodable query: {exc}", err=True)
        sys.exit(1)
    click.echo(f"backend: {routed.backend_used.value}")
    if routed.decided_class is not None:
        click.echo(
            f"decided class: {routed.decided_class.label.value} "
            f"(confidence {routed.decided_class.confidence:.3f})"
        )
    for result in results:
        clip = corpus.clips[result.clip_id]
        click.echo(
            f"{result.rank:3d}. {result.clip_id}  score={result.score:.4f} "
            f"[{result.backend.value}] {clip.start_s:.0f}-{clip.end_s:.0f}s"
        )


@main.command("eval")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--bindings", "bindings_file", required=True, type=click.Path(exists=True))
@click.option("--pairs", "pairs_specs", multiple=True, required=True,
              help="label=path.jsonl; repeat for multiple test sets")
@click.option("--out", "json_out", type=click.Path())
@click.option("--text-out", type=click.Path())
@click.option("--k", type=int, default=None, help="defaults to corpus size")
@click.option("--assert-orderings", is_flag=True,
              help="exit 2 unless the configured R@5 orderings hold "
              "(expects methods baseline/customised/classifier and "
              "test sets original/mixed)")
@handles_validation_errors
def evaluate(corpus_dir, bindings_file, pairs_specs, json_out, text_out, k,
             assert_orderings):
    """Evaluate every bound method on every test set; emit report files."""
    corpus = storage.load_corpus(corpus_dir)
    methods = _load_methods_from_bindings(bindings_file, corpus)
    test_sets = {}
    for pair_arg in pairs_specs:
        if "=" not in pair_arg:
            raise ValidationError(f"--pairs expects label=path, got {pair_arg!r}")
        label, path = pair_arg.split("=", 1)
        test_sets[label] = storage.load_pairs(path)
    table = compare(methods, test_sets, k=k)
    if json_out:
        tmp = f"{json_out}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(table.to_json() + "\n")
        os.replace(tmp, json_out)
    rendered = table.render_text()
    if text_out:
        tmp = f"{text_out}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(rendered)
        os.replace(tmp, text_out)
    click.echo(rendered, nl=False)
    if assert_orderings:
        failures = check_orderings(table)
        if failures:
            for failure in failures:
                click.echo(f"ORDERING FAIL: {failure}", err=True)
            sys.exit(2)
        click.echo("all ordering assertions hold")


@main.command()
@click.option("--config", "config_file", required=True, type=click.Path(exists=True))
@click.option("--host", default=None, help="overrides AVSEARCH_HOST")
@click.option("--port", type=int, default=None, help="overrides AVSEARCH_PORT")
@handles_validation_errors
def serve(config_file, host, port):
    """Start the HTTP engine from a config file naming artifact paths."""
    from .service import serve as run_server

    with open(config_file, encoding="utf-8") as fh:
        config = json.load(fh)
    host = host or os.environ.get("AVSEARCH_HOST", "127.0.0.1")
    port = port or int(os.environ.get("AVSEARCH_PORT", "8080"))
    run_server(config, host=host, port=port)


if __name__ == "__main__":
    main()

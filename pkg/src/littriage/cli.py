"""Operator CLI: train, eval, classify, serve, bench, synth."""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from . import evaluate as ev
from . import forest as rf
from . import linear as lin
from . import plots, synth, textpipe
from .embed import EmbeddingCache, EmbeddingProvider, ProviderConfig
from .records import DocumentRecord, dedup, parse_corpus
from .service import TriageService
from .textpipe import DimensionMismatchError, Vocabulary, featurize

EXIT_IO = 3
EXIT_MISMATCH = 4

PUBLISHED_DOCS_PER_HOUR = 32000


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_corpus(path: str) -> list[DocumentRecord]:
    try:
        with open(path, encoding="utf-8") as fh:
            records, errors = parse_corpus(fh)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read corpus {path}: {exc}")
    for err in errors[:5]:
        click.echo(f"warning: line {err.line_no}: {err.kind}: {err.message}", err=True)
    if len(errors) > 5:
        click.echo(f"warning: {len(errors) - 5} further record errors suppressed", err=True)
    records, removed = dedup(records)
    if removed:
        click.echo(f"warning: removed {removed} duplicate ids", err=True)
    return records


def _provider(provider: str, endpoint: str, dimension: int, stub_seed: int,
              cache_path: str | None = None) -> EmbeddingProvider:
    config = ProviderConfig(
        mode=provider, endpoint=endpoint, dimension=dimension, stub_seed=stub_seed
    )
    cache = EmbeddingCache(cache_path) if cache_path else None
    return EmbeddingProvider(config, cache)


@click.group()
def main() -> None:
    """Literature-triage toolkit."""


@main.command()
@click.option("--corpus", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["forest", "linear"]), default="forest")
@click.option("--model-out", required=True, type=click.Path())
@click.option("--vocab-out", type=click.Path(), help="vocabulary output (forest backend)")
@click.option("--seed", type=int, default=0)
@click.option("--n-trees", type=int, default=100)
@click.option("--max-depth", type=int, default=16)
@click.option("--min-samples-leaf", type=int, default=2)
@click.option("--min-df", type=int, default=textpipe.DEFAULT_MIN_DF)
@click.option("--max-df-ratio", type=float, default=textpipe.DEFAULT_MAX_DF_RATIO)
@click.option("--epochs", type=int, default=50)
@click.option("--learning-rate", type=float, default=0.1)
@click.option("--batch-size", type=int, default=64)
@click.option("--l2-lambda", type=float, default=1e-4)
@click.option("--provider", type=click.Choice(["stub", "remote"]), default="stub")
@click.option("--endpoint", default="")
@click.option("--dimension", type=int, default=256)
@click.option("--embed-cache", type=click.Path(), default=None)
def train(corpus, backend, model_out, vocab_out, seed, n_trees, max_depth,
          min_samples_leaf, min_df, max_df_ratio, epochs, learning_rate,
          batch_size, l2_lambda, provider, endpoint, dimension, embed_cache):
    """Fit a backend on a labeled corpus and write the model file."""
    records = [r for r in _load_corpus(corpus) if r.label is not None]
    if not records:
        _fail(EXIT_MISMATCH, "corpus has no labeled records")

    if backend == "forest":
        tokenized = [textpipe.tokenize(r.text()) for r in records]
        try:
            vocab = textpipe.build_vocabulary(tokenized, min_df=min_df, max_df_ratio=max_df_ratio)
        except textpipe.EmptyVocabularyError as exc:
            _fail(EXIT_MISMATCH, str(exc))
        dataset = [
            (textpipe.tfidf_transform(textpipe.vectorize_counts(toks, vocab), vocab), r.label)
            for toks, r in zip(tokenized, records)
        ]
        params = rf.ForestParams(
            n_trees=n_trees, max_depth=max_depth, min_samples_leaf=min_samples_leaf, seed=seed
        )
        model = rf.train_forest(dataset, params, vocabulary_hash=vocab.content_hash())
        if vocab_out is None:
            vocab_out = str(Path(model_out).with_suffix(".vocab.json"))
        vocab.save(vocab_out)
        rf.save_forest(model, model_out)
        click.echo(f"trained forest on {len(records)} records -> {model_out} (vocab {vocab_out})")
    else:
        prov = _provider(provider, endpoint, dimension, seed, embed_cache)
        embeddings = prov.embed_batch([r.text() for r in records])
        hp = lin.LinearHyperparams(
            learning_rate=learning_rate, epochs=epochs, batch_size=batch_size,
            l2_lambda=l2_lambda, seed=seed,
        )
        model = lin.train_linear(list(zip(embeddings, [r.label for r in records])), hp)
        lin.save_linear(model, model_out)
        click.echo(f"trained linear head on {len(records)} records -> {model_out}")


def _predict_all(records, backend, model_path, vocab_path, provider, endpoint,
                 dimension, stub_seed, embed_cache):
    texts = [r.text() for r in records]
    try:
        if backend == "forest":
            if vocab_path is None:
                vocab_path = str(Path(model_path).with_suffix(".vocab.json"))
            vocab = Vocabulary.load(vocab_path)
            model = rf.load_forest(model_path, expected_vocabulary_hash=vocab.content_hash())
            vectors = [featurize(t, vocab) for t in texts]
            return rf.predict_forest_batch(model, vectors)
        model = lin.load_linear(model_path)
        prov = _provider(provider, endpoint, dimension, stub_seed, embed_cache)
        return [lin.forward(model, e) for e in prov.embed_batch(texts)]
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except (DimensionMismatchError, ValueError) as exc:
        _fail(EXIT_MISMATCH, str(exc))


@main.command("eval")
@click.option("--corpus", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["forest", "linear"]), default="forest")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", type=click.Path(), default=None)
@click.option("--provider", type=click.Choice(["stub", "remote"]), default="stub")
@click.option("--endpoint", default="")
@click.option("--dimension", type=int, default=256)
@click.option("--seed", type=int, default=0, help="stub embedding seed")
@click.option("--embed-cache", type=click.Path(), default=None)
@click.option("--report-dir", type=click.Path(), default=None,
              help="write report.txt, metrics.tsv, confusion.csv and figures here")
def eval_cmd(corpus, backend, model_path, vocab_path, provider, endpoint,
             dimension, seed, embed_cache, report_dir):
    """Evaluate a model on a labeled corpus and emit the metrics report."""
    records = [r for r in _load_corpus(corpus) if r.label is not None]
    if not records:
        _fail(EXIT_MISMATCH, "corpus has no labeled records")
    preds = _predict_all(records, backend, model_path, vocab_path, provider,
                         endpoint, dimension, seed, embed_cache)
    cm = ev.confusion([r.label for r in records], [p.predicted for p in preds])
    report = ev.metrics(cm)
    table = ev.render_table(report, title=f"Evaluation ({backend}, {len(records)} documents)")
    comparison = ev.render_published_comparison()
    click.echo(table)
    click.echo("")
    click.echo(comparison)
    if report_dir is not None:
        out = Path(report_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(table + "\n\n" + comparison + "\n", encoding="utf-8")
        (out / "metrics.tsv").write_text(ev.render_tsv(report), encoding="utf-8")
        (out / "confusion.csv").write_text(cm.to_csv(), encoding="utf-8")
        plots.plot_confusion(report, out / "confusion.png")
        plots.plot_f1_bars(report, out / "f1.png")
        click.echo(f"report written to {out}/")


@main.command()
@click.option("--corpus", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["forest", "linear"]), default="forest")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", type=click.Path(), default=None)
@click.option("--provider", type=click.Choice(["stub", "remote"]), default="stub")
@click.option("--endpoint", default="")
@click.option("--dimension", type=int, default=256)
@click.option("--seed", type=int, default=0)
@click.option("--embed-cache", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="output file (default stdout)")
def classify(corpus, backend, model_path, vocab_path, provider, endpoint,
             dimension, seed, embed_cache, out):
    """Stream predictions, one JSON line per input document, in input order."""
    records = _load_corpus(corpus)
    preds = _predict_all(records, backend, model_path, vocab_path, provider,
                         endpoint, dimension, seed, embed_cache)
    sink = open(out, "w", encoding="utf-8") if out else sys.stdout
    try:
        for rec, pred in zip(records, preds):
            sink.write(json.dumps({
                "id": rec.id,
                "predicted": pred.predicted.label,
                "probabilities": list(pred.probabilities),
                "entropy": pred.entropy,
            }) + "\n")
    finally:
        if out:
            sink.close()


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8350)
@click.option("--store", required=True, type=click.Path(), help="event-log/snapshot directory")
@click.option("--forest-model", type=click.Path(), default=None)
@click.option("--vocab", "vocab_path", type=click.Path(), default=None)
@click.option("--linear-model", type=click.Path(), default=None)
@click.option("--base-corpus", type=click.Path(), default=None,
              help="labeled corpus used as the retraining base")
@click.option("--provider", type=click.Choice(["stub", "remote"]), default="stub")
@click.option("--endpoint", default="")
@click.option("--dimension", type=int, default=256)
@click.option("--seed", type=int, default=0)
@click.option("--embed-cache", type=click.Path(), default=None)
@click.option("--default-backend", type=click.Choice(["forest", "linear"]), default=None,
              help="backend used for bulk /documents enqueueing")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON config file; explicit flags override its values")
def serve(host, port, store, forest_model, vocab_path, linear_model, base_corpus,
          provider, endpoint, dimension, seed, embed_cache, default_backend, config_path):
    """Run the curation-queue HTTP service."""
    import uvicorn

    from .api import create_app

    if config_path:
        try:
            cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            _fail(EXIT_IO, f"cannot read config {config_path}: {exc}")
        host = cfg.get("host", host)
        port = cfg.get("port", port)
        forest_model = forest_model or cfg.get("forest_model")
        vocab_path = vocab_path or cfg.get("vocab")
        linear_model = linear_model or cfg.get("linear_model")
        base_corpus = base_corpus or cfg.get("base_corpus")
        provider = cfg.get("provider", provider)
        endpoint = cfg.get("endpoint", endpoint)
        dimension = cfg.get("dimension", dimension)
        default_backend = default_backend or cfg.get("default_backend")

    vocab = None
    fmodel = None
    lmodel = None
    try:
        if forest_model:
            if vocab_path is None:
                vocab_path = str(Path(forest_model).with_suffix(".vocab.json"))
            vocab = Vocabulary.load(vocab_path)
            fmodel = rf.load_forest(forest_model, expected_vocabulary_hash=vocab.content_hash())
        if linear_model:
            lmodel = lin.load_linear(linear_model)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        _fail(EXIT_MISMATCH, str(exc))

    base = [r for r in _load_corpus(base_corpus) if r.label is not None] if base_corpus else []
    service = TriageService(
        store_dir=store,
        provider=_provider(provider, endpoint, dimension, seed, embed_cache),
        vocabulary=vocab,
        forest_model=fmodel,
        linear_model=lmodel,
        base_corpus=base,
    )
    if default_backend is None:
        default_backend = "forest" if fmodel is not None else "linear"
    app = create_app(service, default_backend=default_backend)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--corpus", type=click.Path(), default=None,
              help="corpus to benchmark on; omit to use --synthetic")
@click.option("--synthetic", type=int, default=None, help="generate N synthetic abstracts instead")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--vocab", "vocab_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None, help="write the report line here too")
def bench(corpus, synthetic, model_path, vocab_path, seed, out):
    """Time tokenize + TF-IDF + forest predict; report documents/hour."""
    if corpus is None and synthetic is None:
        _fail(2, "bench needs --corpus or --synthetic")
    records = synth.make_corpus(synthetic, seed=seed) if corpus is None else _load_corpus(corpus)
    if vocab_path is None:
        vocab_path = str(Path(model_path).with_suffix(".vocab.json"))
    try:
        vocab = Vocabulary.load(vocab_path)
        model = rf.load_forest(model_path, expected_vocabulary_hash=vocab.content_hash())
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    except ValueError as exc:
        _fail(EXIT_MISMATCH, str(exc))

    start = time.perf_counter()
    vectors = [featurize(r.text(), vocab) for r in records]
    preds = rf.predict_forest_batch(model, vectors)
    elapsed = time.perf_counter() - start
    assert len(preds) == len(records)
    docs_per_hour = len(records) / elapsed * 3600
    ratio = docs_per_hour / PUBLISHED_DOCS_PER_HOUR
    line = (
        f"bench: {len(records)} documents in {elapsed:.2f}s = {docs_per_hour:,.0f} docs/hour "
        f"({ratio:.1f}x the published {PUBLISHED_DOCS_PER_HOUR:,}/hour system figure)"
    )
    click.echo(line)
    if out:
        Path(out).write_text(line + "\n", encoding="utf-8")


@main.command("synth")
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
@click.option("--imbalanced", is_flag=True, help="99:1 binary-skew corpus instead")
def synth_cmd(n, seed, out, imbalanced):
    """Generate a labeled synthetic corpus file."""
    docs = synth.make_imbalanced_corpus(n, seed) if imbalanced else synth.make_corpus(n, seed)
    with open(out, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(doc.to_json_line() + "\n")
    click.echo(f"wrote {len(docs)} records to {out}")


if __name__ == "__main__":
    main()

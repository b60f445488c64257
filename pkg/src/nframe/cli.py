"""Command-line surface for the framing pipeline.

Exit codes: 0 success, 1 usage error, 2 data error (missing or
malformed inputs, schema violations, unreachable embedding service).
Every output artifact embeds the digest of the effective run config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import (
    frame_by_leaning,
    render,
    role_frame_cooccurrence,
    role_stakeholder,
    stakeholder_roles_by_leaning,
    to_csv,
)
from .annotation import (
    FRAMES,
    aggregate_frames,
    default_codebook,
    default_lexicon,
    extract_role_entities,
    load_annotations,
    load_codebook,
    load_labels,
    load_lexicon,
    save_labels,
)
from .agreement import agreement_report
from .baselines import (
    as_predictions,
    knn_fit_all,
    knn_from_payload,
    knn_payload,
    knn_predict,
    majority_predict,
    random_predict,
)
from .config import RunConfig, load_config
from .corpus import climate_filter, default_keywords, load_corpus, load_keywords, save_corpus
from .embedding import (
    HashEmbedder,
    RemoteEmbedder,
    TfidfEmbedder,
    TfidfVectorizer,
    article_text,
)
from .errors import DataError
from .evaluation import (
    FoldSpec,
    balance_upsample,
    evaluate,
    labels_to_sets,
    make_folds,
    predictions_to_sets,
)
from .rbf import (
    ABLATIONS,
    FrameModel,
    build_channels,
    channel_features,
    frame_descriptions,
    load_models,
    load_predictions,
    predict_frames,
    rank_all_frames,
    save_models,
    save_predictions,
    train_frame_model,
)
from .semisup import train_semisup
from .server import MockEmbedServer

METHODS = ("rbf", "rbf-a", "rbf-at", "knn", "majority", "random", "semisup")


class UsageError(Exception):
    """Bad flag combination detected after parsing; maps to exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _config_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="FILE", help="TOML config file")
    parent.add_argument("--seed", type=int, help="master random seed")
    parent.add_argument("--theta", type=float, help="relevance threshold for channel 4")
    parent.add_argument("--epochs", type=int, help="training epochs")
    parent.add_argument("--lr", type=float, help="learning rate")
    parent.add_argument("--batch-size", type=int, dest="batch_size", help="training batch size")
    parent.add_argument("--dim", type=int, help="hash embedding dimension")
    parent.add_argument(
        "--url", help="remote embed endpoint (NF_EMBED_URL is the fallback)"
    )
    parent.add_argument(
        "--descriptions", choices=("default", "alternate"),
        help="which bundled frame description texts to use",
    )
    return parent


def _resolve_config(args) -> RunConfig:
    overrides = {}
    for key in ("seed", "theta", "epochs", "lr", "batch_size", "descriptions", "folds"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "embedder", None):
        overrides["embedder.kind"] = args.embedder
    if getattr(args, "dim", None):
        overrides["embedder.dim"] = args.dim
    url = getattr(args, "url", None) or os.environ.get("NF_EMBED_URL")
    if url:
        overrides["embedder.url"] = url
    return load_config(getattr(args, "config", None), overrides)


def _meta(cfg: RunConfig) -> dict:
    return {"config_digest": cfg.digest()}


def _write_json(payload: dict, path):
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


def cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    articles = load_corpus(args.input)
    keywords = load_keywords(args.keywords) if args.keywords else default_keywords()
    kept = [a for a in articles if climate_filter(a, keywords)]
    save_corpus(kept, args.out, meta=_meta(cfg))
    print(f"kept {len(kept)} of {len(articles)} articles "
          f"({len(articles) - len(kept)} dropped) -> {args.out}")
    return 0


def _group_by_article(records):
    groups: dict[str, list] = {}
    for record in records:
        groups.setdefault(record.article_id, []).append(record)
    return groups


def cmd_aggregate(args) -> int:
    cfg = _resolve_config(args)
    codebook = load_codebook(args.codebook) if args.codebook else default_codebook()
    records = load_annotations(args.annotations, codebook)
    groups = _group_by_article(records)
    labels, role_entities = [], {}
    for article_id, group in groups.items():
        labels.append(aggregate_frames(group, codebook))
        roles = extract_role_entities(group)
        if roles:
            role_entities[article_id] = roles
    save_labels(labels, args.out, role_entities=role_entities, meta=_meta(cfg))
    counts = {f: sum(1 for l in labels if f in l.frames) for f in FRAMES}
    summary = ", ".join(f"{f}={counts[f]}" for f in FRAMES)
    print(f"aggregated {len(labels)} articles from {len(records)} annotation records "
          f"({summary}) -> {args.out}")
    return 0


def cmd_agreement(args) -> int:
    cfg = _resolve_config(args)
    codebook = load_codebook(args.codebook) if args.codebook else default_codebook()
    records = load_annotations(args.annotations, codebook)
    report = agreement_report(records, codebook)
    _write_json({"_config": _meta(cfg), **report}, args.out)
    print(f"alpha={report['alpha']:.4f} pairwise_mean={report['pairwise']['mean']:.4f} "
          f"-> {args.out}")
    return 0


def cmd_split(args) -> int:
    cfg = _resolve_config(args)
    labels = load_labels(args.labels)
    folds = make_folds([l.article_id for l in labels], k=cfg.folds, seed=cfg.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for fold in folds:
        _write_json({"_config": _meta(cfg), **fold.to_record()},
                    out_dir / f"fold{fold.fold_id}.json")
    sizes = f"{len(folds[0].train_ids)}/{len(folds[0].dev_ids)}/{len(folds[0].test_ids)}"
    print(f"wrote {len(folds)} folds (train/dev/test {sizes}) -> {out_dir}")
    return 0


def _load_fold(path) -> FoldSpec:
    candidate = Path(path)
    if not candidate.exists() and candidate.suffix != ".json":
        candidate = candidate.with_name(candidate.name + ".json")
    try:
        obj = json.loads(candidate.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read fold file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{candidate}: invalid JSON ({exc})") from None
    return FoldSpec.from_record(obj)


def _subset(articles_by_id: dict, ids, what: str) -> list:
    missing = [i for i in ids if i not in articles_by_id]
    if missing:
        raise DataError(f"{what} ids absent from corpus: {', '.join(missing[:3])}")
    return [articles_by_id[i] for i in ids]


def _make_rbf_embedder(cfg: RunConfig, fit_texts=None):
    kind = cfg.embedder.kind
    if kind == "hash":
        return HashEmbedder(cfg.embedder.dim), None
    if kind == "tfidf":
        vectorizer = TfidfVectorizer().fit(fit_texts)
        return TfidfEmbedder(vectorizer), vectorizer
    if kind == "remote":
        if not cfg.embedder.url:
            raise DataError("remote embedder needs --url or NF_EMBED_URL")
        remote = RemoteEmbedder.from_config(cfg.embedder)
        remote.check_health()
        return remote, None
    raise DataError(f"unknown embedder kind {kind!r}")


def _channel_sets(articles, cfg: RunConfig, embedder, descriptions) -> dict:
    """(article_id, frame) -> ChannelSet for every article and frame."""
    out = {}
    for article in articles:
        rankings = rank_all_frames(article, descriptions, embedder)
        for frame in FRAMES:
            out[(article.id, frame)] = build_channels(
                article, rankings[frame], cfg.theta, embedder
            )
    return out


def _train_rbf_family(args, cfg: RunConfig, method: str, train_articles,
                      label_sets) -> dict:
    ablation = ABLATIONS.get(method, ())
    fit_texts = [article_text(a) for a in train_articles]
    embedder, vectorizer = _make_rbf_embedder(cfg, fit_texts)
    descriptions = frame_descriptions(cfg.descriptions)
    channel_sets = _channel_sets(train_articles, cfg, embedder, descriptions)

    if method == "semisup":
        unlabeled_articles = load_corpus(args.unlabeled)
        unlabeled_sets = _channel_sets(unlabeled_articles, cfg, embedder, descriptions)

    models = {}
    for frame in FRAMES:
        pairs = [
            (channel_sets[(a.id, frame)], frame in label_sets[a.id])
            for a in train_articles
        ]
        balanced = balance_upsample(pairs, seed=cfg.seed)
        if method == "semisup":
            labeled = [(channel_features(cs), label) for cs, label in balanced]
            unlabeled_features = [
                channel_features(unlabeled_sets[(a.id, frame)])
                for a in unlabeled_articles
            ]
            weights, bias = train_semisup(
                labeled, unlabeled_features, cfg.semisup, cfg.train_config()
            )
            models[frame] = FrameModel(
                frame=frame, weights=weights, bias=bias, ablation=(),
                config={"epochs": cfg.epochs, "lr": cfg.lr,
                        "batch_size": cfg.batch_size, "seed": cfg.seed},
            )
        else:
            models[frame] = train_frame_model(
                balanced, cfg.train_config(ablation), frame
            )
    extra = {"method": method, "_config": _meta(cfg)}
    if vectorizer is not None:
        extra["tfidf_state"] = vectorizer.state()
    return {
        "models": models,
        "embedder_kind": cfg.embedder.kind,
        "embedder_dim": embedder.dim,
        "extra": extra,
    }


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    method = args.method
    if method == "semisup" and not args.unlabeled:
        raise UsageError("--unlabeled is required for --method semisup")
    articles = load_corpus(args.corpus)
    labels = load_labels(args.labels)
    fold = _load_fold(args.fold)
    articles_by_id = {a.id: a for a in articles}
    label_sets = labels_to_sets(labels)
    for article_id in (*fold.train_ids, *fold.dev_ids):
        if article_id not in label_sets:
            raise DataError(f"fold references unlabeled article {article_id}")
    train_articles = _subset(articles_by_id, fold.train_ids, "train")
    dev_articles = _subset(articles_by_id, fold.dev_ids, "dev")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"

    if method == "random":
        _write_json({"method": "random", "seed": cfg.seed, "_config": _meta(cfg)},
                    model_path)
    elif method == "majority":
        train_label_sets = [l for l in labels if l.article_id in set(fold.train_ids)]
        flags = majority_predict(train_label_sets)
        _write_json({"method": "majority", "flags": flags, "_config": _meta(cfg)},
                    model_path)
    elif method == "knn":
        train_label_sets = [l for l in labels if l.article_id in set(fold.train_ids)]
        dev_label_sets = [l for l in labels if l.article_id in set(fold.dev_ids)]
        models = knn_fit_all(
            train_articles, train_label_sets, dev_articles, dev_label_sets,
            k_grid=cfg.k_grid,
        )
        _write_json({"method": "knn", "_config": _meta(cfg), **knn_payload(models)},
                    model_path)
    else:
        result = _train_rbf_family(args, cfg, method, train_articles, label_sets)
        save_models(
            result["models"], model_path,
            embedder_kind=result["embedder_kind"],
            embedder_dim=result["embedder_dim"],
            theta=cfg.theta,
            descriptions_variant=cfg.descriptions,
            extra=result["extra"],
        )
    print(f"trained {method} on {len(train_articles)} articles -> {model_path}")
    return 0


def _model_path(path) -> Path:
    candidate = Path(path)
    if candidate.is_dir():
        candidate = candidate / "model.json"
    if not candidate.exists():
        raise DataError(f"model file not found: {candidate}")
    return candidate


def cmd_predict(args) -> int:
    cfg = _resolve_config(args)
    model_path = _model_path(args.model)
    try:
        payload = json.loads(model_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{model_path}: invalid JSON ({exc})") from None
    method = payload.get("method")
    articles = load_corpus(args.corpus)
    predictions = []
    if method == "random":
        seed = int(payload["seed"])
        for article in articles:
            predictions.extend(as_predictions(article.id, random_predict(article.id, seed)))
    elif method == "majority":
        flags = {f: bool(payload["flags"][f]) for f in FRAMES}
        for article in articles:
            predictions.extend(as_predictions(article.id, flags))
    elif method == "knn":
        models = knn_from_payload(payload)
        for article in articles:
            flags = {f: knn_predict(models[f], article) for f in FRAMES}
            predictions.extend(as_predictions(article.id, flags))
    elif method in ("rbf", "rbf-a", "rbf-at", "semisup"):
        models, payload = load_models(model_path)
        kind = payload["embedder"]["kind"]
        if kind == "hash":
            embedder = HashEmbedder(int(payload["embedder"]["dim"]))
        elif kind == "tfidf":
            if "tfidf_state" not in payload:
                raise DataError(f"{model_path}: tfidf model lacks vectorizer state")
            embedder = TfidfEmbedder(TfidfVectorizer.from_state(payload["tfidf_state"]))
        elif kind == "remote":
            if not cfg.embedder.url:
                raise DataError("remote embedder needs --url or NF_EMBED_URL")
            embedder = RemoteEmbedder.from_config(cfg.embedder)
        else:
            raise DataError(f"{model_path}: unknown embedder kind {kind!r}")
        descriptions = frame_descriptions(payload.get("descriptions_variant") or "default")
        theta = float(payload["theta"])
        for article in articles:
            predictions.extend(
                predict_frames(article, models, descriptions, embedder, theta=theta)
            )
    else:
        raise DataError(f"{model_path}: unknown method {method!r}")
    save_predictions(predictions, args.out, meta=_meta(cfg), with_evidence=args.evidence)
    print(f"wrote {len(predictions)} predictions for {len(articles)} articles -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    pred_sets = predictions_to_sets(load_predictions(args.preds))
    gold_sets = labels_to_sets(load_labels(args.gold))
    if not pred_sets:
        raise DataError(f"{args.preds}: no predictions")
    unknown = sorted(set(pred_sets) - set(gold_sets))
    if unknown:
        raise DataError(
            f"predictions cover articles absent from gold: {', '.join(unknown[:3])}"
        )
    gold_subset = {article_id: gold_sets[article_id] for article_id in pred_sets}
    report = evaluate(pred_sets, gold_subset, min_count=cfg.min_count)
    _write_json({"_config": _meta(cfg), **report.to_dict()}, args.out)
    print(f"macro_precision={report.macro_precision:.4f} "
          f"macro_recall={report.macro_recall:.4f} "
          f"harmonic_f1={report.harmonic_f1:.4f} "
          f"exact_match={report.exact_match:.4f} -> {args.out}")
    return 0


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label.lower()).strip("_")


def cmd_analyze(args) -> int:
    cfg = _resolve_config(args)
    labels = load_labels(args.labels)
    articles = load_corpus(args.corpus)
    codebook = load_codebook(args.codebook) if args.codebook else default_codebook()
    records = load_annotations(args.annotations, codebook)
    lexicon = load_lexicon(args.lexicon) if args.lexicon else default_lexicon()
    leaning_by_article = {a.id: a.leaning for a in articles}
    labeled_ids = {l.article_id for l in labels}
    role_records = {
        article_id: extract_role_entities(group)
        for article_id, group in _group_by_article(records).items()
        if article_id in labeled_ids
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    written = []

    def emit(name: str, table, kind: str):
        (out_dir / f"{name}.csv").write_text(
            to_csv(table, comment=f"config_digest={digest}"), encoding="utf-8"
        )
        (out_dir / f"{name}.svg").write_text(
            render(table, kind=kind, title=name.replace("_", " "),
                   metadata=f"config_digest={digest}"),
            encoding="utf-8",
        )
        written.append(name)

    emit("frame_by_leaning", frame_by_leaning(labels, leaning_by_article), "bars")
    role_frame = role_frame_cooccurrence(role_records, labels)
    emit("role_frame", role_frame, "heatmap")
    by_stakeholder = role_stakeholder(role_records, lexicon)
    emit("role_stakeholder", by_stakeholder, "heatmap")
    for j, category in enumerate(by_stakeholder.cols):
        if sum(row[j] for row in by_stakeholder.values) == 0:
            continue
        table = stakeholder_roles_by_leaning(
            category, role_records, lexicon, leaning_by_article
        )
        emit(f"roles_by_leaning_{_slug(category)}", table, "bars")
    print(f"wrote {len(written) * 2} files ({len(written)} tables) -> {out_dir}")
    return 0


def cmd_mock_embedder(args) -> int:
    cfg = _resolve_config(args)
    server = MockEmbedServer(port=args.port, dim=cfg.embedder.dim).start()
    print(f"serving /embed and /healthz on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = _Parser(prog="nframe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ingest", parents=[parent],
                       help="filter a raw corpus to climate-related articles")
    p.add_argument("--input", required=True, help="raw articles JSONL")
    p.add_argument("--keywords", help="keyword list file (default: bundled list)")
    p.add_argument("--out", required=True, help="filtered corpus JSONL")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("aggregate", parents=[parent],
                       help="aggregate annotations into per-article frame labels")
    p.add_argument("--annotations", required=True, help="annotation records JSONL")
    p.add_argument("--codebook", help="codebook JSON (default: bundled)")
    p.add_argument("--out", required=True, help="labels JSONL")
    p.set_defaults(handler=cmd_aggregate)

    p = sub.add_parser("agreement", parents=[parent],
                       help="inter-annotator reliability report")
    p.add_argument("--annotations", required=True, help="annotation records JSONL")
    p.add_argument("--codebook", help="codebook JSON (default: bundled)")
    p.add_argument("--out", required=True, help="report JSON")
    p.set_defaults(handler=cmd_agreement)

    p = sub.add_parser("split", parents=[parent],
                       help="write train/dev/test folds")
    p.add_argument("--labels", required=True, help="labels JSONL")
    p.add_argument("--folds", type=int, help="number of folds (default from config)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_split)

    p = sub.add_parser("train", parents=[parent], help="train a frame predictor")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--embedder", choices=("hash", "tfidf", "remote"),
                   help="embedding provider for rbf-family methods")
    p.add_argument("--corpus", required=True, help="articles JSONL")
    p.add_argument("--labels", required=True, help="labels JSONL")
    p.add_argument("--fold", required=True, help="fold JSON from the split command")
    p.add_argument("--unlabeled", help="unlabeled corpus JSONL (semisup only)")
    p.add_argument("--out", required=True, help="model output directory")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("predict", parents=[parent], help="predict frames for a corpus")
    p.add_argument("--model", required=True, help="model directory or model.json")
    p.add_argument("--corpus", required=True, help="articles JSONL")
    p.add_argument("--evidence", action="store_true",
                   help="include top-ranked evidence sentences in the output")
    p.add_argument("--out", required=True, help="predictions JSONL")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("eval", parents=[parent], help="score predictions against gold labels")
    p.add_argument("--preds", required=True, help="predictions JSONL")
    p.add_argument("--gold", required=True, help="gold labels JSONL")
    p.add_argument("--out", required=True, help="metrics JSON")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("analyze", parents=[parent],
                       help="exploratory cross-tabulations (CSV + SVG)")
    p.add_argument("--labels", required=True, help="labels JSONL")
    p.add_argument("--annotations", required=True, help="annotation records JSONL")
    p.add_argument("--corpus", required=True, help="articles JSONL (leaning metadata)")
    p.add_argument("--codebook", help="codebook JSON (default: bundled)")
    p.add_argument("--lexicon", help="stakeholder lexicon CSV (default: bundled)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("mock-embedder", parents=[parent],
                       help="serve the /embed protocol over the hash embedder")
    p.add_argument("--port", type=int, default=0, help="port (0 picks a free one)")
    p.set_defaults(handler=cmd_mock_embedder)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"nframe {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"nframe {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"nframe {args.command}: data error: missing file: {exc.filename or exc}",
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nframe {args.command}: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

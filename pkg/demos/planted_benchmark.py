"""Train the retrieval-based predictor against its baselines on the
synthetic planted-evidence corpus and show what the evidence channels
retrieved.

    python demos/planted_benchmark.py
"""

import time

from nframe.annotation import FRAMES
from nframe.baselines import majority_predict, random_predict
from nframe.embedding import HashEmbedder
from nframe.evaluation import (
    aggregate_reports,
    balance_upsample,
    evaluate,
    format_table,
    labels_to_sets,
    make_folds,
)
from nframe.planted import generate_planted
from nframe.rbf import (
    TrainConfig,
    build_channels,
    frame_descriptions,
    predict_frames,
    rank_all_frames,
    train_frame_model,
)


def main():
    start = time.perf_counter()
    corpus = generate_planted(200, seed=1042)
    embedder = HashEmbedder(256)
    descriptions = frame_descriptions()
    label_sets = labels_to_sets(corpus.labels)
    by_id = {a.id: a for a in corpus.articles}
    fold = make_folds([a.id for a in corpus.articles], k=5, seed=1042)[0]
    train_articles = [by_id[i] for i in fold.train_ids]
    test_articles = [by_id[i] for i in fold.test_ids]
    print(f"planted corpus: {len(corpus.articles)} articles, "
          f"{len(train_articles)} train / {len(test_articles)} test")

    channel_sets = {}
    for article in train_articles:
        rankings = rank_all_frames(article, descriptions, embedder)
        for frame in FRAMES:
            channel_sets[(article.id, frame)] = build_channels(
                article, rankings[frame], 0.15, embedder)
    models = {}
    for frame in FRAMES:
        pairs = [(channel_sets[(a.id, frame)], frame in label_sets[a.id])
                 for a in train_articles]
        models[frame] = train_frame_model(
            balance_upsample(pairs, seed=1042), TrainConfig(), frame)

    predictions = []
    for article in test_articles:
        predictions.extend(
            predict_frames(article, models, descriptions, embedder, theta=0.15))
    gold = {a.id: label_sets[a.id] for a in test_articles}
    pred_sets = {a.id: frozenset(p.frame for p in predictions
                                 if p.article_id == a.id and p.predicted)
                 for a in test_articles}

    train_labels = [l for l in corpus.labels if l.article_id in set(fold.train_ids)]
    majority_flags = majority_predict(train_labels)
    reports = {
        "rbf": evaluate(pred_sets, gold),
        "majority": evaluate({a.id: frozenset(f for f in FRAMES if majority_flags[f])
                              for a in test_articles}, gold),
        "random": evaluate({a.id: frozenset(
            f for f, v in random_predict(a.id, 1042).items() if v)
            for a in test_articles}, gold),
    }
    print()
    print(format_table({name: aggregate_reports([r]) for name, r in reports.items()}))

    hits = total = 0
    example = None
    for p in predictions:
        if p.predicted and p.frame in gold[p.article_id]:
            total += 1
            planted = corpus.planted_indices(p.article_id, p.frame)
            if p.evidence and p.evidence[0][0] in planted:
                hits += 1
                example = example or p
    print(f"top-1 evidence is a planted sentence on {hits}/{total} true positives")
    if example is not None:
        index, text, rel = example.evidence[0]
        print(f"\nexample: {example.article_id} frame {example.frame} "
              f"(p={example.probability:.3f})")
        print(f"  sentence {index} (rel {rel:.3f}): {text}")
    print(f"\ntotal {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()

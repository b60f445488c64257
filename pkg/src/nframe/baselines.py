"""Comparison predictors: random coin, per-frame majority class, TF-IDF KNN."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .annotation import FRAMES
from .embedding import TfidfVectorizer, article_text, l2_distance
from .errors import DataError
from .rbf import FramePrediction

K_GRID_DEFAULT = (1, 3, 5, 7, 9, 15, 25)


def random_predict(article_id: str, seed: int) -> dict[str, bool]:
    """Independent fair coin per frame.

    Seeded by hashing (seed, article_id, frame), so the outcome for one
    article never depends on evaluation order or on other articles.
    """
    out = {}
    for frame in FRAMES:
        digest = hashlib.blake2b(
            f"{seed}:{article_id}:{frame}".encode("utf-8"), digest_size=8
        ).digest()
        out[frame] = bool(digest[0] & 1)
    return out


def majority_predict(train_labels) -> dict[str, bool]:
    """Constant per-frame prediction: true iff the frame occurs in a
    strict majority of training articles (ties predict false)."""
    labels = list(train_labels)
    if not labels:
        raise DataError("majority baseline needs at least one training label")
    n = len(labels)
    out = {}
    for frame in FRAMES:
        positive = sum(1 for label in labels if frame in label.frames)
        out[frame] = positive > n - positive
    return out


@dataclass(frozen=True)
class KnnModel:
    frame: str
    k: int
    train_vectors: tuple
    train_labels: tuple[bool, ...]
    vectorizer: TfidfVectorizer

    def __post_init__(self):
        if not 1 <= self.k <= len(self.train_vectors):
            raise DataError(
                f"k={self.k} outside [1, {len(self.train_vectors)}] for frame {self.frame}"
            )
        if len(self.train_vectors) != len(self.train_labels):
            raise DataError("training vectors and labels differ in length")


def _vote(distances_labels, k: int) -> bool:
    """Majority label among the k nearest; distance ties prefer the lower
    training index, even-k vote ties predict false."""
    nearest = sorted(distances_labels, key=lambda t: (t[0], t[1]))[:k]
    positive = sum(1 for _, _, label in nearest if label)
    return positive > k - positive


def knn_predict(model: KnnModel, article) -> bool:
    query = model.vectorizer.transform(article_text(article))
    scored = [
        (l2_distance(query, vector), index, model.train_labels[index])
        for index, vector in enumerate(model.train_vectors)
    ]
    return _vote(scored, model.k)


def _binary_f1(predicted: list[bool], gold: list[bool]) -> float:
    tp = sum(1 for p, g in zip(predicted, gold) if p and g)
    fp = sum(1 for p, g in zip(predicted, gold) if p and not g)
    fn = sum(1 for p, g in zip(predicted, gold) if not p and g)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def knn_fit(frame: str, train_articles, train_labels, dev_articles, dev_labels,
            k_grid=K_GRID_DEFAULT, vectorizer: TfidfVectorizer | None = None) -> KnnModel:
    """Fit one frame's KNN classifier, tuning k on the dev split.

    train_labels / dev_labels are booleans aligned with the article
    lists.  k is the grid value with the best dev F1 (ties go to the
    smallest k); grid values larger than the training set are skipped.
    """
    train_articles = list(train_articles)
    train_labels = tuple(bool(v) for v in train_labels)
    if not train_articles:
        raise DataError("knn needs a non-empty training set")
    if len(train_articles) != len(train_labels):
        raise DataError("training articles and labels differ in length")
    if vectorizer is None:
        vectorizer = TfidfVectorizer()
        vectorizer.fit([article_text(a) for a in train_articles])
    train_vectors = tuple(vectorizer.transform(article_text(a)) for a in train_articles)
    usable = [k for k in k_grid if k <= len(train_articles)]
    if not usable:
        raise DataError(
            f"no usable k: grid {tuple(k_grid)} vs training size {len(train_articles)}"
        )

    dev_articles = list(dev_articles)
    dev_gold = [bool(v) for v in dev_labels]
    dev_vectors = [vectorizer.transform(article_text(a)) for a in dev_articles]
    distance_rows = [
        [
            (l2_distance(query, vector), index, train_labels[index])
            for index, vector in enumerate(train_vectors)
        ]
        for query in dev_vectors
    ]

    best_k, best_f1 = usable[0], -1.0
    for k in sorted(usable):
        predicted = [_vote(row, k) for row in distance_rows]
        f1 = _binary_f1(predicted, dev_gold)
        if f1 > best_f1:
            best_k, best_f1 = k, f1
    return KnnModel(
        frame=frame, k=best_k,
        train_vectors=train_vectors, train_labels=train_labels,
        vectorizer=vectorizer,
    )


def knn_fit_all(train_articles, train_label_sets, dev_articles, dev_label_sets,
                k_grid=K_GRID_DEFAULT) -> dict[str, KnnModel]:
    """One KnnModel per frame, sharing a single vectorizer fit."""
    train_articles = list(train_articles)
    if not train_articles:
        raise DataError("knn needs a non-empty training set")
    vectorizer = TfidfVectorizer()
    vectorizer.fit([article_text(a) for a in train_articles])
    by_id_train = {label.article_id: label for label in train_label_sets}
    by_id_dev = {label.article_id: label for label in dev_label_sets}
    models = {}
    for frame in FRAMES:
        models[frame] = knn_fit(
            frame,
            train_articles,
            [frame in by_id_train[a.id].frames for a in train_articles],
            dev_articles,
            [frame in by_id_dev[a.id].frames for a in dev_articles],
            k_grid=k_grid,
            vectorizer=vectorizer,
        )
    return models


def knn_payload(models: dict[str, KnnModel]) -> dict:
    """Serializable state for a per-frame KNN family sharing one
    vectorizer and one training matrix (as produced by knn_fit_all)."""
    if set(models) != set(FRAMES):
        raise DataError("knn payload needs one model per frame")
    first = models[FRAMES[0]]
    for model in models.values():
        if len(model.train_vectors) != len(first.train_vectors):
            raise DataError("knn models disagree on training size")
    return {
        "vectorizer": first.vectorizer.state(),
        "train_vectors": [
            {str(i): w for i, w in vector.weights.items()}
            for vector in first.train_vectors
        ],
        "frames": {
            frame: {"k": model.k, "labels": list(model.train_labels)}
            for frame, model in models.items()
        },
    }


def knn_from_payload(payload: dict) -> dict[str, KnnModel]:
    from .embedding import TfidfVector

    try:
        vectorizer = TfidfVectorizer.from_state(payload["vectorizer"])
        vectors = tuple(
            TfidfVector(
                dim=vectorizer.dim,
                weights={int(i): float(w) for i, w in entry.items()},
            )
            for entry in payload["train_vectors"]
        )
        return {
            frame: KnnModel(
                frame=frame,
                k=int(entry["k"]),
                train_vectors=vectors,
                train_labels=tuple(bool(v) for v in entry["labels"]),
                vectorizer=vectorizer,
            )
            for frame, entry in payload["frames"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed knn model payload ({exc})") from None


def as_predictions(article_id: str, flags: dict[str, bool]) -> list[FramePrediction]:
    """Wrap constant or vote-based per-frame booleans in the shared
    prediction record shape (probability 1/0, no evidence)."""
    return [
        FramePrediction(
            article_id=article_id, frame=frame,
            probability=1.0 if flags[frame] else 0.0,
            predicted=flags[frame], evidence=(),
        )
        for frame in FRAMES
    ]

"""Retrieval-based frame prediction.

For each frame, every sentence of an article is scored by cosine
similarity between its embedding and the embedding of a short frame
description.  Five channels are built from the resulting ranking (the
three most relevant sentences, the remaining above-threshold sentences,
and the truncated article), embedded, concatenated, and fed to one
logistic-regression head per frame.  The top-ranked sentences double as
evidence for each prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .annotation import FRAMES
from .corpus import Article, truncate_tokens
from .embedding import cosine
from .errors import DataError

THETA_DEFAULT = 0.15
SEP = " [SEP] "
N_CHANNELS = 5

# channel numbers zeroed per ablation variant
ABLATIONS = {"rbf": (), "rbf-a": (5,), "rbf-at": (4, 5)}


@dataclass(frozen=True)
class FrameDescription:
    frame: str
    text: str

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise DataError(f"unknown frame {self.frame!r}")
        if not self.text.strip():
            raise DataError(f"frame {self.frame}: empty description")


def _parse_descriptions(mapping, source: str) -> dict[str, FrameDescription]:
    if set(mapping) != set(FRAMES):
        raise DataError(
            f"{source}: descriptions must cover exactly the frames {', '.join(FRAMES)}"
        )
    return {frame: FrameDescription(frame, str(mapping[frame])) for frame in FRAMES}


def frame_descriptions(variant: str = "default") -> dict[str, FrameDescription]:
    """Bundled frame description texts ('default' or 'alternate')."""
    text = resources.files("nframe").joinpath("data/frame_descriptions.json").read_text("utf-8")
    variants = json.loads(text)
    if variant not in variants:
        raise DataError(
            f"unknown description variant {variant!r}; have {', '.join(sorted(variants))}"
        )
    return _parse_descriptions(variants[variant], source=f"bundled descriptions ({variant})")


def load_descriptions(path) -> dict[str, FrameDescription]:
    """Read user descriptions from a JSON file mapping frame to text."""
    mapping = json.loads(Path(path).read_text(encoding="utf-8"))
    return _parse_descriptions(mapping, source=str(path))


@dataclass(frozen=True)
class RelevanceRanking:
    article_id: str
    frame: str
    entries: tuple[tuple[int, float], ...]  # (sentence index, rel), rel non-increasing

    def top_indices(self, k: int = 3) -> tuple[int, ...]:
        return tuple(index for index, _ in self.entries[:k])


def relevance_ranking(article: Article, desc: FrameDescription, embedder,
                      sentence_vectors: np.ndarray | None = None) -> RelevanceRanking:
    """Score every sentence against the frame description.

    Sorted by descending relevance, ties broken by ascending sentence
    index.  sentence_vectors, when given, skips re-embedding (rows must
    follow sentence order).
    """
    sentences = article.sentences
    if not sentences:
        raise DataError(f"article {article.id} has no sentences to rank")
    if sentence_vectors is None:
        sentence_vectors = embedder.embed([s.text for s in sentences])
    desc_vector = embedder.embed([desc.text])[0]
    scored = [
        (index, cosine(sentence_vectors[index], desc_vector))
        for index in range(len(sentences))
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return RelevanceRanking(article_id=article.id, frame=desc.frame, entries=tuple(scored))


def rank_all_frames(article: Article, descriptions, embedder) -> dict[str, RelevanceRanking]:
    """Rankings for every frame, embedding the sentences only once."""
    sentences = article.sentences
    if not sentences:
        raise DataError(f"article {article.id} has no sentences to rank")
    vectors = embedder.embed([s.text for s in sentences])
    return {
        frame: relevance_ranking(article, descriptions[frame], embedder, sentence_vectors=vectors)
        for frame in FRAMES
    }


@dataclass(frozen=True)
class ChannelSet:
    article_id: str
    frame: str
    texts: tuple[str, ...]      # c1..c5
    vectors: np.ndarray         # shape (5, dim)
    theta: float


def build_channels(article: Article, ranking: RelevanceRanking, theta: float,
                   embedder) -> ChannelSet:
    """Assemble the five input channels for one (article, frame) pair.

    c1-c3: texts of the top three ranked sentences (empty strings when
    the article is shorter).  c4: all sentences with rel strictly above
    theta, minus the top three, joined by the separator token in
    document order.  c5: title plus body truncated at 256 tokens.
    """
    if ranking.article_id != article.id:
        raise DataError(
            f"ranking belongs to article {ranking.article_id}, not {article.id}"
        )
    sentences = article.sentences
    top = ranking.entries[:3]
    top_indices = {index for index, _ in top}
    c123 = [sentences[index].text for index, _ in top]
    while len(c123) < 3:
        c123.append("")
    rest = sorted(
        index
        for index, rel in ranking.entries
        if rel > theta and index not in top_indices
    )
    c4 = SEP.join(sentences[index].text for index in rest)
    c5 = truncate_tokens(article.title + " " + article.body, 256)
    texts = (*c123, c4, c5)
    vectors = embedder.embed(list(texts))
    return ChannelSet(
        article_id=article.id, frame=ranking.frame,
        texts=texts, vectors=vectors, theta=theta,
    )


def channel_features(channels: ChannelSet, ablation: tuple[int, ...] = ()) -> np.ndarray:
    """Concatenated channel embeddings with ablated channels zeroed."""
    vectors = channels.vectors.copy()
    for number in ablation:
        if not 1 <= number <= N_CHANNELS:
            raise ValueError(f"channel number {number} out of range")
        vectors[number - 1, :] = 0.0
    return vectors.reshape(-1)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    lr: float = 0.01
    batch_size: int = 8
    seed: int = 1042
    ablation: tuple[int, ...] = ()

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise DataError("epochs and batch_size must be >= 1")
        if self.lr <= 0:
            raise DataError("learning rate must be positive")


@dataclass(frozen=True)
class FrameModel:
    frame: str
    weights: np.ndarray  # length 5*dim; ablated blocks stay at 0
    bias: float
    ablation: tuple[int, ...]
    config: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.weights.shape[0] // N_CHANNELS

    def predict_proba(self, channels: ChannelSet) -> float:
        x = channel_features(channels, self.ablation)
        return float(_sigmoid(np.array([x @ self.weights + self.bias]))[0])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    expz = np.exp(z[~positive])
    out[~positive] = expz / (1.0 + expz)
    return out


def logistic_loss_grad(weights: np.ndarray, bias: float, X: np.ndarray,
                       y: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy and its analytic gradient."""
    z = X @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    err = _sigmoid(z) - y
    grad_w = X.T @ err / len(y)
    grad_b = float(err.mean())
    return loss, grad_w, grad_b


def train_logistic(X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> tuple[np.ndarray, float]:
    """Seeded mini-batch gradient descent from zero initialization.

    Deterministic given (X, y, cfg): the only randomness is the numpy
    Generator seeded by cfg.seed that shuffles each epoch.
    """
    if len(set(y.tolist())) < 2:
        raise DataError("training set must contain both classes")
    n = X.shape[0]
    weights = np.zeros(X.shape[1], dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            z = X[batch] @ weights + bias
            err = _sigmoid(z) - y[batch]
            weights = weights - cfg.lr * (X[batch].T @ err) / len(batch)
            bias = bias - cfg.lr * float(err.mean())
    return weights, bias


def train_frame_model(train, cfg: TrainConfig, frame: str | None = None) -> FrameModel:
    """Fit one frame's logistic head on (ChannelSet, bool) pairs.

    Ablated channels are zeroed in the features, which keeps their
    weight blocks at the zero initialization (the gradient of a weight
    is proportional to its input).
    """
    pairs = list(train)
    if not pairs:
        raise DataError("empty training set")
    frame = frame if frame is not None else pairs[0][0].frame
    X = np.stack([channel_features(cs, cfg.ablation) for cs, _ in pairs])
    y = np.array([float(label) for _, label in pairs])
    weights, bias = train_logistic(X, y, cfg)
    return FrameModel(
        frame=frame, weights=weights, bias=bias, ablation=cfg.ablation,
        config={
            "epochs": cfg.epochs, "lr": cfg.lr,
            "batch_size": cfg.batch_size, "seed": cfg.seed,
        },
    )


@dataclass(frozen=True)
class FramePrediction:
    article_id: str
    frame: str
    probability: float
    predicted: bool
    evidence: tuple[tuple[int, str, float], ...]  # (sentence index, text, rel)

    def to_record(self) -> dict:
        return {
            "article_id": self.article_id,
            "frame": self.frame,
            "probability": self.probability,
            "predicted": self.predicted,
            "evidence": [
                {"index": index, "rel": rel, "text": text}
                for index, text, rel in self.evidence
            ],
        }


def predict_frames(article: Article, models: dict[str, FrameModel], descriptions,
                   embedder, theta: float = THETA_DEFAULT) -> list[FramePrediction]:
    """One prediction per frame; the multi-label set is every frame with
    probability >= 0.5 and may be empty."""
    missing = [frame for frame in FRAMES if frame not in models]
    if missing:
        raise DataError(f"missing models for frame(s) {', '.join(missing)}")
    rankings = rank_all_frames(article, descriptions, embedder)
    sentences = article.sentences
    predictions = []
    for frame in FRAMES:
        ranking = rankings[frame]
        channels = build_channels(article, ranking, theta, embedder)
        probability = models[frame].predict_proba(channels)
        evidence = tuple(
            (index, sentences[index].text, rel)
            for index, rel in ranking.entries[:3]
        )
        predictions.append(FramePrediction(
            article_id=article.id, frame=frame,
            probability=probability, predicted=probability >= 0.5,
            evidence=evidence,
        ))
    return predictions


def save_predictions(predictions, path, meta=None, with_evidence: bool = True):
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for prediction in predictions:
            record = prediction.to_record()
            if not with_evidence:
                record["evidence"] = []
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_predictions(path) -> list[FramePrediction]:
    from .corpus import iter_jsonl

    predictions = []
    for lineno, obj in iter_jsonl(path):
        try:
            predictions.append(FramePrediction(
                article_id=str(obj["article_id"]),
                frame=str(obj["frame"]),
                probability=float(obj["probability"]),
                predicted=bool(obj["predicted"]),
                evidence=tuple(
                    (int(e["index"]), str(e["text"]), float(e["rel"]))
                    for e in obj.get("evidence", [])
                ),
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: line {lineno}: malformed prediction ({exc})") from None
    return predictions


MODEL_FORMAT_VERSION = 1


def save_models(models: dict[str, FrameModel], path, *, embedder_kind: str,
                embedder_dim: int, theta: float, descriptions_variant: str | None = None,
                extra: dict | None = None):
    """Serialize the five frame heads with the config needed to reuse
    them (embedder kind and dim, theta, ablation, training seed)."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "method": "rbf",
        "embedder": {"kind": embedder_kind, "dim": embedder_dim},
        "theta": theta,
        "descriptions_variant": descriptions_variant,
        "models": {
            frame: {
                "weights": model.weights.tolist(),
                "bias": model.bias,
                "ablation": list(model.ablation),
                "config": model.config,
            }
            for frame, model in models.items()
        },
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_models(path) -> tuple[dict[str, FrameModel], dict]:
    """Load frame heads; returns (models, stored payload)."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format {payload.get('format_version')!r}")
    models = {}
    for frame, entry in payload["models"].items():
        models[frame] = FrameModel(
            frame=frame,
            weights=np.asarray(entry["weights"], dtype=np.float64),
            bias=float(entry["bias"]),
            ablation=tuple(entry["ablation"]),
            config=dict(entry.get("config", {})),
        )
    return models, payload

"""Embedding providers and similarity.

Three providers share one contract (embed a list of texts, get one
vector per text, in order): a deterministic feature-hashing embedder
for reproducible experiments and tests, a TF-IDF vectorizer for the
KNN baseline, and an HTTP client for a real sentence-embedding model
behind the /embed wire protocol.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass

import numpy as np
import requests

from .errors import DataError

# 64-bit FNV-1a parameters
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class EmbedServiceError(DataError):
    """Remote embedding call failed after bounded retries."""


class ProtocolError(DataError):
    """Remote embedding server returned a response violating the wire
    contract (wrong vector count, inconsistent dimension, bad JSON)."""


@dataclass(frozen=True)
class EmbedderConfig:
    kind: str = "hash"
    dim: int = 256
    url: str | None = None
    timeout: float = 10.0
    batch_size: int = 64
    max_in_flight: int = 4
    max_attempts: int = 3
    backoff: float = 0.1
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in ("hash", "tfidf", "remote"):
            raise DataError(f"unknown embedder kind {self.kind!r}")
        if self.dim < 8:
            raise DataError("embedding dim must be >= 8")
        if self.timeout <= 0:
            raise DataError("timeout must be positive")
        if self.batch_size < 1 or self.max_in_flight < 1 or self.max_attempts < 1:
            raise DataError("batch_size, max_in_flight and max_attempts must be >= 1")


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def cosine(u, v) -> float:
    """Cosine similarity, clamped to [-1, 1] against float rounding.

    A zero vector has undefined angle; its similarity to anything is
    defined as 0.0.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def hash_embed(text: str, dim: int = 256, normalize: bool = True) -> np.ndarray:
    """Deterministic signed feature hashing of a text.

    Features are word unigrams plus character trigrams of the
    whitespace-normalized, lowercased text.  Each feature is hashed
    with 64-bit FNV-1a; bit 63 selects the sign and the remainder mod
    dim selects the bucket.  The result is L2-normalized unless
    normalize is false; empty text maps to the zero vector.
    """
    if dim < 8:
        raise ValueError("dim must be >= 8")
    vec = np.zeros(dim, dtype=np.float64)
    cleaned = " ".join(text.lower().split())
    if not cleaned:
        return vec
    features = cleaned.split(" ")
    features += [cleaned[i:i + 3] for i in range(len(cleaned) - 2)]
    for feat in features:
        h = _fnv1a(feat.encode("utf-8"))
        sign = -1.0 if (h >> 63) & 1 else 1.0
        vec[h % dim] += sign
    if normalize:
        norm = np.linalg.norm(vec)
        if norm > 0.0:
            vec /= norm
    return vec


class HashEmbedder:
    """Embeds via hash_embed; pure and thread-safe."""

    kind = "hash"

    def __init__(self, dim: int = 256):
        if dim < 8:
            raise ValueError("dim must be >= 8")
        self.dim = dim

    def embed(self, texts) -> np.ndarray:
        return np.stack([hash_embed(t, self.dim) for t in texts]) if texts else np.zeros((0, self.dim))

    def embed_one(self, text: str) -> np.ndarray:
        return hash_embed(text, self.dim)


@dataclass(frozen=True)
class TfidfVector:
    """L2-normalized tf-idf weights in sparse form."""

    dim: int
    weights: dict[int, float]

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        for idx, w in self.weights.items():
            dense[idx] = w
        return dense


def l2_distance(u: TfidfVector, v: TfidfVector) -> float:
    if u.dim != v.dim:
        raise ValueError("dimension mismatch")
    total = 0.0
    for idx in u.weights.keys() | v.weights.keys():
        diff = u.weights.get(idx, 0.0) - v.weights.get(idx, 0.0)
        total += diff * diff
    return total ** 0.5


class TfidfVectorizer:
    """tf-idf over whitespace tokens of lowercased text.

    idf = ln((1+N)/(1+df)) + 1 with raw term counts, L2-normalized.
    The vocabulary is fixed at fit time; unseen terms contribute
    nothing at transform time.
    """

    def __init__(self):
        self.vocabulary_: dict[str, int] | None = None
        self.idf_: np.ndarray | None = None

    @staticmethod
    def _tokens(text: str) -> list[str]:
        return text.lower().split()

    def fit(self, texts) -> "TfidfVectorizer":
        texts = list(texts)
        if not texts or not any(self._tokens(t) for t in texts):
            raise DataError("tf-idf needs at least one document with a token")
        df: dict[str, int] = {}
        for text in texts:
            for token in set(self._tokens(text)):
                df[token] = df.get(token, 0) + 1
        vocab = {token: i for i, token in enumerate(sorted(df))}
        n_docs = len(texts)
        idf = np.zeros(len(vocab), dtype=np.float64)
        for token, i in vocab.items():
            idf[i] = np.log((1.0 + n_docs) / (1.0 + df[token])) + 1.0
        self.vocabulary_ = vocab
        self.idf_ = idf
        return self

    @property
    def dim(self) -> int:
        if self.vocabulary_ is None:
            raise DataError("vectorizer is not fitted")
        return len(self.vocabulary_)

    def state(self) -> dict:
        """Serializable fitted state (tokens in index order plus idf)."""
        if self.vocabulary_ is None:
            raise DataError("vectorizer is not fitted")
        tokens = sorted(self.vocabulary_, key=self.vocabulary_.get)
        return {"tokens": tokens, "idf": self.idf_.tolist()}

    @classmethod
    def from_state(cls, state: dict) -> "TfidfVectorizer":
        tokens = list(state["tokens"])
        idf = np.asarray(state["idf"], dtype=np.float64)
        if len(tokens) != idf.shape[0]:
            raise DataError("tf-idf state: tokens and idf lengths differ")
        out = cls()
        out.vocabulary_ = {token: i for i, token in enumerate(tokens)}
        out.idf_ = idf
        return out

    def transform(self, text: str) -> TfidfVector:
        if self.vocabulary_ is None:
            raise DataError("vectorizer is not fitted")
        counts: dict[int, float] = {}
        for token in self._tokens(text):
            idx = self.vocabulary_.get(token)
            if idx is not None:
                counts[idx] = counts.get(idx, 0.0) + 1.0
        weights = {idx: tf * self.idf_[idx] for idx, tf in counts.items()}
        norm = sum(w * w for w in weights.values()) ** 0.5
        if norm > 0.0:
            weights = {idx: w / norm for idx, w in weights.items()}
        return TfidfVector(dim=self.dim, weights=weights)


def article_text(article) -> str:
    """The text an article-level embedder sees: title plus body."""
    return article.title + " " + article.body


def tfidf_fit(corpus) -> TfidfVectorizer:
    """Fit a vectorizer over whole articles (title plus body)."""
    articles = list(corpus)
    if not articles:
        raise DataError("cannot fit tf-idf on an empty corpus")
    return TfidfVectorizer().fit(article_text(a) for a in articles)


class TfidfEmbedder:
    """Adapts a fitted TfidfVectorizer to the embedding contract."""

    kind = "tfidf"

    def __init__(self, vectorizer: TfidfVectorizer):
        self.vectorizer = vectorizer
        self.dim = vectorizer.dim

    def embed(self, texts) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        return np.stack([self.vectorizer.transform(t).to_dense() for t in texts])

    def embed_one(self, text: str) -> np.ndarray:
        return self.vectorizer.transform(text).to_dense()


class RemoteEmbedder:
    """Client for the /embed wire protocol.

    Splits large inputs into batches, runs at most max_in_flight
    requests concurrently, and reassembles results in input order.
    Transport failures and non-2xx responses are retried with
    exponential backoff up to max_attempts total attempts; responses
    that break the protocol (wrong vector count, inconsistent dim)
    raise ProtocolError immediately.
    """

    kind = "remote"

    def __init__(self, url: str, *, timeout: float = 10.0, batch_size: int = 64,
                 max_in_flight: int = 4, max_attempts: int = 3, backoff: float = 0.1,
                 normalize: bool = True):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.batch_size = batch_size
        self.max_in_flight = max_in_flight
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.normalize = normalize
        self.dim: int | None = None
        self.model: str | None = None

    @classmethod
    def from_config(cls, cfg: EmbedderConfig) -> "RemoteEmbedder":
        if not cfg.url:
            raise DataError("remote embedder needs an endpoint URL")
        return cls(
            cfg.url,
            timeout=cfg.timeout,
            batch_size=cfg.batch_size,
            max_in_flight=cfg.max_in_flight,
            max_attempts=cfg.max_attempts,
            backoff=cfg.backoff,
            normalize=cfg.normalize,
        )

    def check_health(self):
        """Raise EmbedServiceError unless GET /healthz answers ok."""
        try:
            resp = requests.get(self.url + "/healthz", timeout=self.timeout)
        except requests.RequestException as exc:
            raise EmbedServiceError(f"embedding service unreachable at {self.url}: {exc}") from None
        if resp.status_code != 200:
            raise EmbedServiceError(
                f"embedding service unhealthy: status {resp.status_code}"
            )

    def _post_batch(self, texts: list[str]) -> tuple[list[list[float]], int, str]:
        payload = {"texts": texts, "normalize": self.normalize}
        last_error = None
        for attempt in range(self.max_attempts):
            if attempt > 0:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(self.url + "/embed", json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
                continue
            if resp.status_code != 200:
                last_error = f"status {resp.status_code}: {resp.text[:200]}"
                continue
            try:
                body = resp.json()
                vectors = body["vectors"]
                dim = int(body["dim"])
                model = str(body.get("model", ""))
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolError(f"malformed /embed response: {exc}") from None
            if len(vectors) != len(texts):
                raise ProtocolError(
                    f"server returned {len(vectors)} vectors for {len(texts)} texts"
                )
            if any(len(vec) != dim for vec in vectors):
                raise ProtocolError("vector length disagrees with reported dim")
            return vectors, dim, model
        raise EmbedServiceError(
            f"/embed failed after {self.max_attempts} attempts ({last_error})"
        )

    def embed(self, texts) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim or 0))
        batches = [texts[i:i + self.batch_size] for i in range(0, len(texts), self.batch_size)]
        if len(batches) == 1:
            results = [self._post_batch(batches[0])]
        else:
            results = [None] * len(batches)
            workers = min(self.max_in_flight, len(batches))
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(self._post_batch, b): i for i, b in enumerate(batches)}
                for future in concurrent.futures.as_completed(futures):
                    results[futures[future]] = future.result()
        dims = {dim for _, dim, _ in results}
        if self.dim is not None:
            dims.add(self.dim)
        if len(dims) > 1:
            raise ProtocolError(f"dim inconsistent across batches: {sorted(dims)}")
        self.dim = dims.pop()
        self.model = results[0][2]
        vectors = [vec for batch, _, _ in results for vec in batch]
        out = np.asarray(vectors, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise ProtocolError("server returned non-finite vector values")
        return out

    def embed_one(self, text: str) -> np.ndarray:
        return self.embed([text])[0]


def make_embedder(cfg: EmbedderConfig, fit_texts=None):
    """Build a provider from config.  tfidf needs fit_texts to learn
    its vocabulary; the other kinds ignore it."""
    if cfg.kind == "hash":
        return HashEmbedder(dim=cfg.dim)
    if cfg.kind == "tfidf":
        if fit_texts is None:
            raise DataError("tfidf embedder needs texts to fit a vocabulary")
        return TfidfEmbedder(TfidfVectorizer().fit(fit_texts))
    return RemoteEmbedder.from_config(cfg)

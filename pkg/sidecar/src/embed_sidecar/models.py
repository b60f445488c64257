"""Embedding model backends.

Two backends sit behind one interface (``name``, ``dim``,
``encode(texts, normalize)``):

- ``token-hash-<dim>``: a built-in deterministic model.  Each lowercased
  whitespace token maps to a fixed random vector seeded from a stable
  digest of the token, and a text embeds as the mean of its token
  vectors.  No checkpoint, no downloads, identical output across
  processes — the default, so the service is usable offline.
- ``st:<checkpoint>``: any sentence-transformers checkpoint, for real
  pretrained embeddings where downloads (or a local cache) are
  available.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_MODEL = "token-hash-384"


class TokenHashModel:
    """Deterministic embedding: mean of per-token seeded random vectors.

    Identical texts embed identically by construction; the empty text
    maps to the zero vector.
    """

    def __init__(self, dim: int = 384):
        if dim < 8:
            raise ValueError(f"dim must be >= 8, got {dim}")
        self.dim = dim
        self.name = f"token-hash-{dim}"
        self._token_vectors: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vector = self._token_vectors.get(token)
        if vector is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            seed = int.from_bytes(digest, "big")
            vector = np.random.default_rng(seed).standard_normal(self.dim)
            self._token_vectors[token] = vector
        return vector

    def encode(self, texts: list[str], normalize: bool) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = text.lower().split()
            if not tokens:
                continue
            acc = np.zeros(self.dim, dtype=np.float64)
            for token in tokens:
                acc += self._token_vector(token)
            acc /= len(tokens)
            if normalize:
                norm = np.linalg.norm(acc)
                if norm > 0:
                    acc = acc / norm
            out[row] = acc
        return out


class SentenceTransformerModel:
    """Wrapper around a sentence-transformers checkpoint."""

    def __init__(self, checkpoint: str):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(checkpoint)
        self.name = checkpoint
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str], normalize: bool) -> np.ndarray:
        vectors = self._model.encode(
            texts, convert_to_numpy=True, normalize_embeddings=normalize
        )
        return np.asarray(vectors, dtype=np.float64)


def resolve_backend(spec: str) -> tuple[str, str | int]:
    """Map a model spec string to (backend, argument).

    ``token-hash`` / ``token-hash-<dim>`` select the built-in model;
    ``st:<checkpoint>`` selects sentence-transformers.  Anything else is
    rejected so typos fail fast instead of triggering a surprise
    download.
    """
    if spec == "token-hash":
        return "token-hash", 384
    if spec.startswith("token-hash-"):
        suffix = spec[len("token-hash-"):]
        if not suffix.isdigit():
            raise ValueError(f"bad token-hash dimension in model spec {spec!r}")
        return "token-hash", int(suffix)
    if spec.startswith("st:"):
        checkpoint = spec[len("st:"):]
        if not checkpoint:
            raise ValueError("empty sentence-transformers checkpoint in model spec")
        return "st", checkpoint
    raise ValueError(
        f"unknown model spec {spec!r}; use token-hash[-<dim>] or st:<checkpoint>"
    )


def load_model(spec: str = DEFAULT_MODEL):
    backend, argument = resolve_backend(spec)
    if backend == "token-hash":
        return TokenHashModel(int(argument))
    return SentenceTransformerModel(str(argument))

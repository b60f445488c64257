"""Synthetic corpus with known ground truth.

Generates articles whose positive frames are signaled by one to three
planted sentences sharing vocabulary with the frame descriptions, mixed
into filler sentences drawn from a disjoint vocabulary.  Because the
generator returns the planted sentence positions, it supports end-to-end
benchmarks with verifiable evidence: a retrieval ranker should surface
the planted sentences, and a classifier trained on the derived channels
should recover the labels.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

from .annotation import FRAMES, FrameLabelSet
from .corpus import LEANINGS, Article, split_sentences
from .errors import DataError
from .rbf import frame_descriptions

DEFAULT_PREVALENCE = {"RE": 0.45, "CO": 0.55, "HI": 0.40, "MO": 0.35, "EC": 0.45}

# filler vocabulary is kept disjoint from every description's tokens so
# that filler sentences score near zero against all frame descriptions
_FILLER = (
    "quartz", "lantern", "gravel", "meadow", "copper", "violin", "tundra",
    "whistle", "barrel", "cinder", "ember", "fathom", "gossamer", "ivory",
    "jumble", "kettle", "marble", "nectar", "orchard", "pebble", "ripple",
    "saddle", "timber", "umbrella", "velvet", "walnut", "yonder", "zephyr",
    "anchor", "bramble", "crocus", "driftwood", "eaves", "flint", "garnet",
    "hazel", "inkwell", "juniper", "kiln", "loom", "mosaic", "nimbus",
    "opal", "plume", "quill", "russet", "sable", "thistle", "ultramarine",
    "vellum", "willow", "zinnia",
)

_OUTLETS = ("Synthetic Daily", "Generated Gazette", "Sample Tribune", "Mock Observer")


def _norm_token(token: str) -> str:
    return token.lower().strip(".,;:!?\"'")


def _description_tokens(descriptions) -> dict[str, list[str]]:
    return {frame: descriptions[frame].text.split() for frame in FRAMES}


def unique_tokens(descriptions) -> dict[str, set[str]]:
    """Tokens appearing in exactly one frame's description (normalized);
    these carry the discriminative signal of a planted sentence."""
    tokens = _description_tokens(descriptions)
    counts: dict[str, int] = {}
    for frame in FRAMES:
        for token in {_norm_token(t) for t in tokens[frame]}:
            counts[token] = counts.get(token, 0) + 1
    return {
        frame: {_norm_token(t) for t in tokens[frame] if counts[_norm_token(t)] == 1}
        for frame in FRAMES
    }


def _sentence_from(words: list[str]) -> str:
    last = words[-1].rstrip(",;")
    words = words[:-1] + [last]
    first = words[0]
    return " ".join([first[0].upper() + first[1:], *words[1:]]).rstrip(".") + "."


def _planted_sentence(frame: str, tokens: list[str], forced: set[str],
                      rng: np.random.Generator) -> str:
    kept = [
        token for token in tokens
        if _norm_token(token) in forced or rng.random() < 0.7
    ]
    words = list(kept) if kept else list(tokens)
    if rng.random() < 0.5:
        words.insert(0, _FILLER[rng.integers(0, len(_FILLER))])
    return _sentence_from(words)


def _filler_sentence(rng: np.random.Generator) -> str:
    count = int(rng.integers(4, 9))
    picks = [_FILLER[rng.integers(0, len(_FILLER))] for _ in range(count)]
    return _sentence_from(picks)


@dataclass(frozen=True)
class PlantedCorpus:
    articles: tuple[Article, ...]
    labels: tuple[FrameLabelSet, ...]
    planted: dict  # (article_id, frame) -> tuple of sentence indices

    def planted_indices(self, article_id: str, frame: str) -> tuple[int, ...]:
        return self.planted.get((article_id, frame), ())


def generate_planted(n_articles: int = 200, seed: int = 1042, id_prefix: str = "syn",
                     prevalence: dict | None = None,
                     descriptions=None) -> PlantedCorpus:
    """Deterministic synthetic corpus of n_articles with planted frame
    evidence; per-frame positive rates follow `prevalence`."""
    if n_articles < 1:
        raise DataError("n_articles must be >= 1")
    prevalence = dict(DEFAULT_PREVALENCE if prevalence is None else prevalence)
    missing = [f for f in FRAMES if f not in prevalence]
    if missing:
        raise DataError(f"prevalence missing frame(s) {', '.join(missing)}")
    descriptions = frame_descriptions() if descriptions is None else descriptions
    desc_tokens = _description_tokens(descriptions)
    forced = unique_tokens(descriptions)

    rng = np.random.default_rng(seed)
    start_date = datetime.date(2023, 1, 1)
    articles, labels = [], []
    planted: dict = {}
    for i in range(n_articles):
        article_id = f"{id_prefix}{i:04d}"
        positive = [f for f in FRAMES if rng.random() < prevalence[f]]
        tagged: list[tuple[str, str | None]] = []
        for frame in positive:
            for _ in range(int(rng.integers(1, 4))):
                tagged.append((
                    _planted_sentence(frame, desc_tokens[frame], forced[frame], rng),
                    frame,
                ))
        for _ in range(int(rng.integers(3, 9))):
            tagged.append((_filler_sentence(rng), None))
        order = rng.permutation(len(tagged))
        tagged = [tagged[j] for j in order]

        texts = [text for text, _ in tagged]
        body = " ".join(texts)
        recovered = [s.text for s in split_sentences(body)]
        if recovered != texts:
            raise AssertionError(
                f"planted article {article_id}: segmentation does not round-trip"
            )
        title = _sentence_from(
            [_FILLER[rng.integers(0, len(_FILLER))] for _ in range(int(rng.integers(3, 6)))]
        ).rstrip(".")
        article = Article(
            id=article_id,
            title=title,
            body=body,
            outlet=_OUTLETS[i % len(_OUTLETS)],
            leaning=LEANINGS[i % len(LEANINGS)],
            date=(start_date + datetime.timedelta(days=i % 365)).isoformat(),
        )
        articles.append(article)
        labels.append(FrameLabelSet(article_id=article_id, frames=frozenset(positive)))
        for frame in positive:
            planted[(article_id, frame)] = tuple(
                index for index, (_, tag) in enumerate(tagged) if tag == frame
            )
    return PlantedCorpus(
        articles=tuple(articles), labels=tuple(labels), planted=planted,
    )

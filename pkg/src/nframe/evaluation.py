"""Fold construction, class balancing, and multi-label frame metrics.

Headline numbers are macro-averaged precision and recall over the five
frames and their harmonic mean; per-frame scores, the mean of per-frame
F1, exact-match rate, and a per-multi-label table are reported
alongside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annotation import FRAMES, FrameLabelSet
from .errors import DataError


@dataclass(frozen=True)
class FoldSpec:
    fold_id: int
    seed: int
    train_ids: tuple[str, ...]
    dev_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self):
        splits = (*self.train_ids, *self.dev_ids, *self.test_ids)
        if len(set(splits)) != len(splits):
            raise DataError(f"fold {self.fold_id}: splits overlap")
        if not (self.train_ids and self.dev_ids and self.test_ids):
            raise DataError(f"fold {self.fold_id}: empty split")

    def to_record(self) -> dict:
        return {
            "fold_id": self.fold_id,
            "seed": self.seed,
            "train_ids": list(self.train_ids),
            "dev_ids": list(self.dev_ids),
            "test_ids": list(self.test_ids),
        }

    @classmethod
    def from_record(cls, obj: dict) -> "FoldSpec":
        try:
            return cls(
                fold_id=int(obj["fold_id"]),
                seed=int(obj["seed"]),
                train_ids=tuple(str(i) for i in obj["train_ids"]),
                dev_ids=tuple(str(i) for i in obj["dev_ids"]),
                test_ids=tuple(str(i) for i in obj["test_ids"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed fold record ({exc})") from None


def make_folds(ids, k: int = 5, seed: int = 1042) -> list[FoldSpec]:
    """k independent random 60/20/20 resplits of the labeled ids.

    Each fold reshuffles the full id list with its own generator seeded
    seed + fold_id; dev and test take floor(0.2 n) articles each and the
    remainder goes to train.  Folds are resplits, not a partition into
    disjoint test sets: test sets of different folds may overlap.
    """
    ids = list(ids)
    unique = sorted(set(ids))
    if len(unique) != len(ids):
        raise DataError("duplicate article ids in fold input")
    n = len(unique)
    if n < 5:
        raise DataError(f"need at least 5 labeled articles to split, got {n}")
    n_eval = n // 5
    folds = []
    for fold_id in range(k):
        rng = np.random.default_rng(seed + fold_id)
        order = [unique[i] for i in rng.permutation(n)]
        folds.append(FoldSpec(
            fold_id=fold_id,
            seed=seed,
            test_ids=tuple(order[:n_eval]),
            dev_ids=tuple(order[n_eval:2 * n_eval]),
            train_ids=tuple(order[2 * n_eval:]),
        ))
    return folds


def balance_upsample(pairs, seed: int) -> list:
    """Duplicate seeded random minority-class items until classes are
    1:1.  Originals are all kept, in order; copies are appended."""
    items = list(pairs)
    positive = [pair for pair in items if pair[1]]
    negative = [pair for pair in items if not pair[1]]
    if not positive or not negative:
        raise DataError("balancing needs both classes present")
    if len(positive) == len(negative):
        return items
    minority = positive if len(positive) < len(negative) else negative
    need = abs(len(positive) - len(negative))
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(minority), size=need)
    return items + [minority[i] for i in picks]


def labels_to_sets(labels) -> dict[str, frozenset]:
    out = {}
    for label in labels:
        if label.article_id in out:
            raise DataError(f"duplicate label set for article {label.article_id}")
        out[label.article_id] = label.frames
    return out


def predictions_to_sets(predictions) -> dict[str, frozenset]:
    """Collapse per-(article, frame) prediction records into one frame
    set per article."""
    seen: dict[str, set] = {}
    marked: dict[str, set] = {}
    for prediction in predictions:
        frames_seen = seen.setdefault(prediction.article_id, set())
        if prediction.frame in frames_seen:
            raise DataError(
                f"duplicate prediction for ({prediction.article_id}, {prediction.frame})"
            )
        frames_seen.add(prediction.frame)
        if prediction.predicted:
            marked.setdefault(prediction.article_id, set()).add(prediction.frame)
    return {article_id: frozenset(marked.get(article_id, ())) for article_id in seen}


def _check_aligned(preds: dict, gold: dict):
    if not gold:
        raise DataError("empty evaluation set")
    if set(preds) != set(gold):
        missing = sorted(set(gold) - set(preds))[:3]
        extra = sorted(set(preds) - set(gold))[:3]
        raise DataError(
            "predictions and gold cover different articles"
            f" (missing {missing}, unexpected {extra})"
        )


def per_frame_metrics(preds: dict[str, frozenset], gold: dict[str, frozenset]) -> dict:
    """Positive-class precision/recall/F1 per frame; a zero denominator
    yields 0 (a constant-negative predictor scores 0 precision)."""
    _check_aligned(preds, gold)
    out = {}
    for frame in FRAMES:
        tp = sum(1 for a in gold if frame in preds[a] and frame in gold[a])
        fp = sum(1 for a in gold if frame in preds[a] and frame not in gold[a])
        fn = sum(1 for a in gold if frame not in preds[a] and frame in gold[a])
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = harmonic_f1(precision, recall)
        out[frame] = {"precision": precision, "recall": recall, "f1": f1}
    return out


def macro_pr(preds: dict[str, frozenset], gold: dict[str, frozenset]) -> tuple[float, float]:
    per_frame = per_frame_metrics(preds, gold)
    precision = sum(per_frame[f]["precision"] for f in FRAMES) / len(FRAMES)
    recall = sum(per_frame[f]["recall"] for f in FRAMES) / len(FRAMES)
    return precision, recall


def harmonic_f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def exact_match_rate(preds: dict[str, frozenset], gold: dict[str, frozenset]) -> float:
    _check_aligned(preds, gold)
    return sum(1 for a in gold if preds[a] == gold[a]) / len(gold)


def label_string(frames) -> str:
    """Canonical multi-label name: frames joined '+' in fixed frame
    order, 'none' for the empty set."""
    ordered = [frame for frame in FRAMES if frame in frames]
    return "+".join(ordered) if ordered else "none"


def label_report(preds: dict[str, frozenset], gold: dict[str, frozenset],
                 min_count: int = 3) -> list[dict]:
    """Exact-match fraction per gold multi-label with at least min_count
    occurrences, best-predicted first (then larger N, then name)."""
    _check_aligned(preds, gold)
    groups: dict[str, list[str]] = {}
    for article_id, frames in gold.items():
        groups.setdefault(label_string(frames), []).append(article_id)
    rows = []
    for label, members in groups.items():
        if len(members) < min_count:
            continue
        exact = sum(1 for a in members if preds[a] == gold[a]) / len(members)
        rows.append({"label": label, "n": len(members), "exact": exact})
    rows.sort(key=lambda row: (-row["exact"], -row["n"], row["label"]))
    return rows


@dataclass(frozen=True)
class MetricsReport:
    per_frame: dict
    macro_precision: float
    macro_recall: float
    harmonic_f1: float
    f1_mean: float
    exact_match: float
    labels: list = field(default_factory=list)
    n_articles: int = 0

    def to_dict(self) -> dict:
        return {
            "per_frame": self.per_frame,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "harmonic_f1": self.harmonic_f1,
            "f1_mean": self.f1_mean,
            "exact_match": self.exact_match,
            "labels": self.labels,
            "n_articles": self.n_articles,
        }


def evaluate(preds, gold, min_count: int = 3) -> MetricsReport:
    """Full report from {article_id: frame set} mappings (FrameLabelSet
    lists and prediction-record lists are also accepted)."""
    preds = _as_sets(preds)
    gold = _as_sets(gold)
    per_frame = per_frame_metrics(preds, gold)
    precision, recall = macro_pr(preds, gold)
    return MetricsReport(
        per_frame=per_frame,
        macro_precision=precision,
        macro_recall=recall,
        harmonic_f1=harmonic_f1(precision, recall),
        f1_mean=sum(per_frame[f]["f1"] for f in FRAMES) / len(FRAMES),
        exact_match=exact_match_rate(preds, gold),
        labels=label_report(preds, gold, min_count=min_count),
        n_articles=len(gold),
    )


def _as_sets(value) -> dict[str, frozenset]:
    if isinstance(value, dict):
        return {str(k): frozenset(v) for k, v in value.items()}
    value = list(value)
    if value and isinstance(value[0], FrameLabelSet):
        return labels_to_sets(value)
    return predictions_to_sets(value)


def aggregate_reports(reports) -> dict:
    """Mean and population std over folds for every headline metric."""
    reports = list(reports)
    if not reports:
        raise DataError("no reports to aggregate")

    def stat(values):
        arr = np.array(values, dtype=np.float64)
        return {"mean": float(arr.mean()), "std": float(arr.std())}

    out = {
        "n_folds": len(reports),
        "macro_precision": stat([r.macro_precision for r in reports]),
        "macro_recall": stat([r.macro_recall for r in reports]),
        "harmonic_f1": stat([r.harmonic_f1 for r in reports]),
        "f1_mean": stat([r.f1_mean for r in reports]),
        "exact_match": stat([r.exact_match for r in reports]),
        "per_frame_f1": {
            frame: stat([r.per_frame[frame]["f1"] for r in reports])
            for frame in FRAMES
        },
    }
    return out


def format_table(rows: dict[str, dict]) -> str:
    """Aligned text table of aggregated results: one row per method,
    columns Macro-Pr, Macro-Re, F1, each as 'mean (std)'."""
    if not rows:
        raise DataError("no rows to format")

    def cell(entry):
        return f"{entry['mean']:.2f} ({entry['std']:.2f})"

    header = ("method", "Macro-Pr", "Macro-Re", "F1")
    body = [
        (
            name,
            cell(agg["macro_precision"]),
            cell(agg["macro_recall"]),
            cell(agg["harmonic_f1"]),
        )
        for name, agg in rows.items()
    ]
    widths = [
        max(len(row[col]) for row in [header, *body])
        for col in range(len(header))
    ]
    lines = []
    for row in [header, *body]:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"

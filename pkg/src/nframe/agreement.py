"""Inter-annotator reliability for indicator answers and role entities.

Indicator answers are treated as nominal data.  Krippendorff's alpha is
computed through the coincidence-matrix formulation with missing values
allowed; pairwise agreement is the chance-uncorrected fraction of
co-answered units on which two annotators agree.  Entity agreement uses
exact match after normalization plus Rouge-L token overlap.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations

from .annotation import normalize_entity
from .errors import DataError


@dataclass(frozen=True)
class ReliabilityMatrix:
    """Sparse units-by-annotators value matrix.

    units are hashable keys (the pipeline uses (article_id, qid));
    values maps (unit, annotator) to a nominal value.
    """

    units: tuple
    annotators: tuple[str, ...]
    values: dict

    @classmethod
    def from_records(cls, records, codebook, retained_only: bool = True):
        """Build the (article, question) x annotator matrix from
        annotation records, by default over retained indicators only."""
        qids = [
            q.qid
            for q in codebook.questions
            if (q.retained or not retained_only) and q.frame is not None
        ]
        units: list = []
        unit_seen: set = set()
        annotators: list[str] = []
        annotator_seen: set = set()
        values: dict = {}
        for record in records:
            if record.annotator_id not in annotator_seen:
                annotator_seen.add(record.annotator_id)
                annotators.append(record.annotator_id)
            for qid in qids:
                if qid not in record.answers:
                    continue
                unit = (record.article_id, qid)
                key = (unit, record.annotator_id)
                if key in values and values[key] != record.answers[qid]:
                    raise DataError(
                        f"{record.annotator_id} answered {qid} twice for "
                        f"article {record.article_id} with conflicting values"
                    )
                values[key] = record.answers[qid]
                if unit not in unit_seen:
                    unit_seen.add(unit)
                    units.append(unit)
        if len(annotators) < 2:
            raise DataError("reliability needs at least two annotators")
        return cls(units=tuple(units), annotators=tuple(annotators), values=values)

    def unit_values(self, unit) -> list:
        return [
            self.values[(unit, ann)]
            for ann in self.annotators
            if (unit, ann) in self.values
        ]

    def pair_values(self, ann_a: str, ann_b: str) -> list[tuple]:
        out = []
        for unit in self.units:
            ka, kb = (unit, ann_a), (unit, ann_b)
            if ka in self.values and kb in self.values:
                out.append((self.values[ka], self.values[kb]))
        return out


def krippendorff_alpha(matrix: ReliabilityMatrix) -> float:
    """Nominal-data Krippendorff's alpha.

    Units with fewer than two values are excluded.  By convention the
    degenerate case where every pairable value is identical (expected
    disagreement zero) returns 1.0.
    """
    coincidence: Counter = Counter()
    totals: Counter = Counter()
    n = 0.0
    for unit in matrix.units:
        values = matrix.unit_values(unit)
        m_u = len(values)
        if m_u < 2:
            continue
        for i, v in enumerate(values):
            totals[v] += 1.0
            n += 1.0
            for j, w in enumerate(values):
                if i != j:
                    coincidence[(v, w)] += 1.0 / (m_u - 1)
    if n == 0:
        raise DataError("no unit has two or more values; alpha is undefined")
    observed = sum(c for (v, w), c in coincidence.items() if v != w) / n
    expected = sum(
        totals[v] * totals[w]
        for v in totals
        for w in totals
        if v != w
    ) / (n * (n - 1))
    if expected == 0.0:
        return 1.0
    return 1.0 - observed / expected


def pairwise_agreement(matrix: ReliabilityMatrix) -> tuple[float, float, float]:
    """(mean, min, max) raw agreement over annotator pairs.

    Each pair contributes the fraction of its co-answered units with
    equal values; pairs that never co-answer are skipped.
    """
    if len(matrix.annotators) < 2:
        raise DataError("pairwise agreement needs at least two annotators")
    rates = []
    for ann_a, ann_b in combinations(matrix.annotators, 2):
        pairs = matrix.pair_values(ann_a, ann_b)
        if not pairs:
            continue
        rates.append(sum(1 for v, w in pairs if v == w) / len(pairs))
    if not rates:
        raise DataError("no annotator pair shares any unit")
    return (sum(rates) / len(rates), min(rates), max(rates))


def _lcs_length(a: list[str], b: list[str]) -> int:
    # single-row dynamic program
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        prev_diag = 0
        for j in range(1, len(b) + 1):
            tmp = row[j]
            if a[i - 1] == b[j - 1]:
                row[j] = prev_diag + 1
            else:
                row[j] = max(row[j], row[j - 1])
            prev_diag = tmp
    return row[-1]


def rouge_l(a: str, b: str) -> float:
    """Rouge-L F-measure over lowercased whitespace tokens.

    P = LCS/|b|, R = LCS/|a|, F = 2PR/(P+R); zero when either side has
    no tokens.
    """
    tokens_a = a.lower().split()
    tokens_b = b.lower().split()
    if not tokens_a or not tokens_b:
        return 0.0
    lcs = _lcs_length(tokens_a, tokens_b)
    precision = lcs / len(tokens_b)
    recall = lcs / len(tokens_a)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def entity_exact_match(a: str, b: str) -> bool:
    """Equality after entity normalization (case, articles, terminal
    punctuation)."""
    return normalize_entity(a) == normalize_entity(b)


def entity_agreement(records) -> dict | None:
    """Pairwise entity agreement pooled over role slots.

    A slot is one (article, role) pair for which at least two annotators
    supplied an entity; every annotator pair within a slot contributes
    one exact-match observation and one Rouge-L value.  Returns None
    when no slot is pairable.
    """
    by_article: dict[str, list] = {}
    for record in records:
        by_article.setdefault(record.article_id, []).append(record)
    matches = 0
    rouges: list[float] = []
    total = 0
    for article_records in by_article.values():
        roles = {role for r in article_records for role in r.role_entities}
        for role in roles:
            entities = [
                r.role_entities[role]
                for r in article_records
                if role in r.role_entities
            ]
            if len(entities) < 2:
                continue
            for e_a, e_b in combinations(entities, 2):
                total += 1
                matches += int(entity_exact_match(e_a, e_b))
                rouges.append(rouge_l(e_a, e_b))
    if total == 0:
        return None
    return {
        "exact_match_rate": matches / total,
        "rouge_l_mean": sum(rouges) / len(rouges),
    }


def agreement_report(records, codebook) -> dict:
    """Full reliability report over retained indicators and entities."""
    matrix = ReliabilityMatrix.from_records(records, codebook)
    mean, low, high = pairwise_agreement(matrix)
    entity = entity_agreement(records)
    return {
        "alpha": krippendorff_alpha(matrix),
        "pairwise": {"mean": mean, "min": low, "max": high},
        "entity": entity
        if entity is not None
        else {"exact_match_rate": None, "rouge_l_mean": None},
    }

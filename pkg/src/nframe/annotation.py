"""Indicator codebook, frame aggregation, and role-entity handling.

Annotators answer binary indicator questions per article; an indicator
counts as collectively affirmed when at least two annotators answered
yes.  A frame is assigned when enough of its retained indicators are
affirmed (two, except Moral where one suffices).  Questions that probe
for an entity in a narrative role (Hero, Villain, Victim) carry that
role in the codebook so records can be validated.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import DataError

# Canonical frame order, used everywhere labels are serialized or tabulated.
FRAMES = ("RE", "CO", "HI", "MO", "EC")

FRAME_NAMES = {
    "RE": "Resolution",
    "CO": "Conflict",
    "HI": "Human Interest",
    "MO": "Moral",
    "EC": "Economic",
}

ROLES = ("Hero", "Villain", "Victim")

# JSONL files use lowercase role keys.
_ROLE_KEYS = {"hero": "Hero", "villain": "Villain", "victim": "Victim"}

_ARTICLE_WORDS = ("the", "a", "an")
_TERMINAL_PUNCT = ".,;:!?\"'"

UNMAPPED_CATEGORY = "Other"


@dataclass(frozen=True)
class Question:
    qid: str
    frame: str | None
    text: str
    retained: bool
    role: str | None = None


@dataclass(frozen=True)
class Codebook:
    questions: tuple[Question, ...]
    frame_rule: dict[str, int]

    def __post_init__(self):
        seen = set()
        for q in self.questions:
            if q.qid in seen:
                raise DataError(f"duplicate question id {q.qid!r}")
            seen.add(q.qid)
            if q.frame is not None and q.frame not in FRAMES:
                raise DataError(f"question {q.qid}: unknown frame {q.frame!r}")
            if q.retained and q.frame is None:
                raise DataError(f"question {q.qid}: retained but mapped to no frame")
            if q.role is not None and q.role not in ROLES:
                raise DataError(f"question {q.qid}: unknown role {q.role!r}")
        for frame, minimum in self.frame_rule.items():
            if frame not in FRAMES:
                raise DataError(f"frame_rule names unknown frame {frame!r}")
            if not isinstance(minimum, int) or minimum < 1:
                raise DataError(f"frame_rule[{frame}] must be a positive integer")
            if not self.retained_for(frame):
                raise DataError(f"frame {frame} has no retained questions")

    def question(self, qid: str) -> Question | None:
        for q in self.questions:
            if q.qid == qid:
                return q
        return None

    def retained_for(self, frame: str) -> tuple[Question, ...]:
        return tuple(q for q in self.questions if q.retained and q.frame == frame)

    def role_triggers(self, role: str) -> tuple[str, ...]:
        """Qids of questions that prompt for an entity in the given role."""
        return tuple(q.qid for q in self.questions if q.role == role)


@dataclass(frozen=True)
class AnnotationRecord:
    article_id: str
    annotator_id: str
    answers: dict[str, bool]
    role_entities: dict[str, str] = field(default_factory=dict)

    def to_record(self) -> dict:
        roles = {key: self.role_entities.get(role) for key, role in _ROLE_KEYS.items()}
        return {
            "article_id": self.article_id,
            "annotator_id": self.annotator_id,
            "answers": dict(sorted(self.answers.items())),
            "role_entities": {k: v for k, v in roles.items() if v is not None},
        }


@dataclass(frozen=True)
class FrameLabelSet:
    article_id: str
    frames: frozenset[str]

    def sorted_frames(self) -> list[str]:
        return [f for f in FRAMES if f in self.frames]


@dataclass(frozen=True)
class StakeholderLexicon:
    categories: tuple[str, ...]
    mapping: dict[str, str]


def _parse_codebook(obj, source: str) -> Codebook:
    try:
        questions = tuple(
            Question(
                qid=q["qid"],
                frame=q.get("frame"),
                text=q["text"],
                retained=bool(q["retained"]),
                role=q.get("role"),
            )
            for q in obj["questions"]
        )
        frame_rule = {str(k): v for k, v in obj["frame_rule"].items()}
    except (KeyError, TypeError) as exc:
        raise DataError(f"{source}: malformed codebook ({exc})") from None
    return Codebook(questions=questions, frame_rule=frame_rule)


def load_codebook(path) -> Codebook:
    text = Path(path).read_text(encoding="utf-8")
    return _parse_codebook(json.loads(text), source=str(path))


def default_codebook() -> Codebook:
    """The bundled 22-question codebook (13 retained indicators)."""
    text = resources.files("nframe").joinpath("data/codebook.json").read_text("utf-8")
    return _parse_codebook(json.loads(text), source="bundled codebook")


def load_annotations(path, codebook: Codebook | None = None) -> list[AnnotationRecord]:
    """Read annotation records from JSONL, optionally validating each
    against a codebook (known qids; role entities only with their
    triggering question answered yes)."""
    from .corpus import iter_jsonl

    records = []
    for lineno, obj in iter_jsonl(path):
        try:
            record = _parse_annotation(obj, codebook)
        except DataError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
        records.append(record)
    return records


def _parse_annotation(obj, codebook: Codebook | None) -> AnnotationRecord:
    if not isinstance(obj, dict):
        raise DataError("expected a JSON object")
    for name in ("article_id", "annotator_id", "answers"):
        if name not in obj:
            raise DataError(f"missing field {name}")
    answers = {}
    for qid, value in obj["answers"].items():
        if not isinstance(value, bool):
            raise DataError(f"answer to {qid} must be true or false")
        if codebook is not None and codebook.question(qid) is None:
            raise DataError(f"answered question {qid!r} is not in the codebook")
        answers[qid] = value
    role_entities = {}
    for key, value in (obj.get("role_entities") or {}).items():
        role = _ROLE_KEYS.get(key)
        if role is None:
            raise DataError(f"unknown role key {key!r}")
        if value is None or not str(value).strip():
            continue
        role_entities[role] = str(value)
    if codebook is not None:
        for role, entity in role_entities.items():
            triggers = codebook.role_triggers(role)
            if triggers and not any(answers.get(t) is True for t in triggers):
                raise DataError(
                    f"{role} entity {entity!r} given without an affirmative "
                    f"answer to {' or '.join(triggers)}"
                )
    return AnnotationRecord(
        article_id=str(obj["article_id"]),
        annotator_id=str(obj["annotator_id"]),
        answers=answers,
        role_entities=role_entities,
    )


def save_annotations(records, path, meta=None):
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record.to_record(), sort_keys=True) + "\n")


def _yes_count(qid: str, records) -> int:
    return sum(1 for r in records if r.answers.get(qid) is True)


def majority_answer(qid: str, records, codebook: Codebook) -> bool:
    """True iff at least two annotators answered yes to qid.

    The threshold is an absolute count, so with two annotators it means
    unanimity and a single annotator can never affirm an indicator.
    """
    if codebook.question(qid) is None:
        raise DataError(f"question {qid!r} is not in the codebook")
    if not any(qid in r.answers for r in records):
        raise DataError(f"no annotator answered {qid!r}")
    return _yes_count(qid, records) >= 2


def aggregate_frames(records, codebook: Codebook) -> FrameLabelSet:
    """Aggregate one article's annotation records into its frame set.

    A frame is present when the number of its retained indicators with
    an affirmative majority reaches frame_rule[frame].  Indicators no
    annotator answered simply count as not affirmed.
    """
    records = list(records)
    if not records:
        raise DataError("cannot aggregate an empty record list")
    ids = {r.article_id for r in records}
    if len(ids) > 1:
        raise DataError(f"records span multiple articles: {sorted(ids)}")
    present = set()
    for frame in FRAMES:
        minimum = codebook.frame_rule.get(frame)
        if minimum is None:
            continue
        affirmed = sum(
            1 for q in codebook.retained_for(frame) if _yes_count(q.qid, records) >= 2
        )
        if affirmed >= minimum:
            present.add(frame)
    return FrameLabelSet(article_id=records[0].article_id, frames=frozenset(present))


def extract_role_entities(records) -> dict[str, list[tuple[str, str]]]:
    """Collect every non-empty role entity, keyed by role, without
    deduplication; annotator order follows record order."""
    out: dict[str, list[tuple[str, str]]] = {}
    for record in records:
        for role in ROLES:
            entity = record.role_entities.get(role)
            if entity:
                out.setdefault(role, []).append((record.annotator_id, entity))
    return out


def load_labels(path) -> list[FrameLabelSet]:
    from .corpus import iter_jsonl

    labels = []
    for lineno, obj in iter_jsonl(path):
        try:
            frames = frozenset(obj["frames"])
            unknown = frames - set(FRAMES)
            if unknown:
                raise DataError(f"unknown frame(s) {sorted(unknown)}")
            labels.append(FrameLabelSet(article_id=str(obj["article_id"]), frames=frames))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: line {lineno}: malformed label record ({exc})") from None
        except DataError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
    return labels


def save_labels(labels, path, role_entities=None, meta=None):
    """Write frame label sets as JSONL; role_entities, when given, maps
    article_id to the extract_role_entities mapping for that article."""
    with open(path, "w", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for label in labels:
            record = {
                "article_id": label.article_id,
                "frames": label.sorted_frames(),
            }
            if role_entities is not None:
                per_role = role_entities.get(label.article_id, {})
                record["role_entities"] = {
                    role: [
                        {"annotator_id": ann, "entity": ent}
                        for ann, ent in per_role.get(role, [])
                    ]
                    for role in ROLES
                    if per_role.get(role)
                }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def normalize_entity(entity: str) -> str:
    """Lowercase, collapse whitespace, strip leading articles and
    trailing punctuation.  Idempotent by construction."""
    words = entity.lower().split()
    while words and words[0] in _ARTICLE_WORDS:
        words = words[1:]
    return " ".join(words).rstrip(_TERMINAL_PUNCT).strip()


def _parse_lexicon(rows, source: str) -> StakeholderLexicon:
    categories: list[str] = []
    mapping: dict[str, str] = {}
    for row in rows:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < 2:
            raise DataError(f"{source}: lexicon rows need entity and category")
        entity, category = row[0].strip(), row[1].strip()
        if entity == "normalized_entity":  # header row
            continue
        key = normalize_entity(entity)
        if not key:
            raise DataError(f"{source}: entity {entity!r} normalizes to nothing")
        if key in mapping and mapping[key] != category:
            raise DataError(f"{source}: entity {key!r} mapped to two categories")
        mapping[key] = category
        if category not in categories:
            categories.append(category)
    if not mapping:
        raise DataError(f"{source}: empty lexicon")
    for catch_all in (UNMAPPED_CATEGORY, "Ambiguous"):
        if catch_all not in categories:
            categories.append(catch_all)
    return StakeholderLexicon(categories=tuple(categories), mapping=mapping)


def load_lexicon(path) -> StakeholderLexicon:
    """Read a stakeholder lexicon CSV of normalized_entity,category."""
    with open(path, encoding="utf-8", newline="") as fh:
        return _parse_lexicon(csv.reader(fh), source=str(path))


def default_lexicon() -> StakeholderLexicon:
    text = resources.files("nframe").joinpath("data/stakeholder_lexicon.csv").read_text("utf-8")
    return _parse_lexicon(csv.reader(io.StringIO(text)), source="bundled lexicon")


def map_stakeholder(entity: str, lexicon: StakeholderLexicon) -> str:
    """Category of an entity string after normalization; unmapped
    entities fall into the catch-all category."""
    return lexicon.mapping.get(normalize_entity(entity), UNMAPPED_CATEGORY)

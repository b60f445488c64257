"""Exploratory cross-tabulations: frame prevalence by outlet leaning,
narrative roles against frames and stakeholder groups, and per-category
role-by-leaning breakdowns, with CSV and SVG emission."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .annotation import FRAMES, ROLES, StakeholderLexicon, map_stakeholder
from .corpus import LEANINGS
from .errors import DataError

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CrossTab:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: tuple[tuple, ...]          # one inner tuple per row
    normalized: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.rows or not self.cols:
            raise DataError("cross-tab needs at least one row and one column")
        if len(self.values) != len(self.rows):
            raise DataError("row count does not match value matrix")
        for row_label, row in zip(self.rows, self.values):
            if len(row) != len(self.cols):
                raise DataError(f"row {row_label!r} has wrong width")
            for v in row:
                if v < 0:
                    raise DataError(f"negative cell in row {row_label!r}")
        if self.normalized not in (None, "row", "col"):
            raise DataError(f"unknown normalization axis {self.normalized!r}")
        if self.normalized == "row":
            for row_label, row in zip(self.rows, self.values):
                total = sum(row)
                if total and abs(total - 1.0) > _SUM_TOL:
                    raise DataError(f"normalized row {row_label!r} sums to {total}")
        if self.normalized == "col":
            for j, col_label in enumerate(self.cols):
                total = sum(row[j] for row in self.values)
                if total and abs(total - 1.0) > _SUM_TOL:
                    raise DataError(f"normalized column {col_label!r} sums to {total}")

    def cell(self, row: str, col: str):
        try:
            return self.values[self.rows.index(row)][self.cols.index(col)]
        except ValueError:
            raise DataError(f"no cell ({row!r}, {col!r})") from None

    def normalize(self, axis: str = "row") -> "CrossTab":
        """Scale so each row (or column) sums to 1; all-zero lines stay
        zero."""
        if axis == "row":
            values = tuple(
                tuple(v / total if (total := sum(row)) else 0.0 for v in row)
                for row in self.values
            )
        elif axis == "col":
            totals = [sum(row[j] for row in self.values) for j in range(len(self.cols))]
            values = tuple(
                tuple(v / totals[j] if totals[j] else 0.0 for j, v in enumerate(row))
                for row in self.values
            )
        else:
            raise DataError(f"unknown normalization axis {axis!r}")
        return CrossTab(rows=self.rows, cols=self.cols, values=values, normalized=axis)


def frame_by_leaning(labels, leaning_by_article: dict[str, str]) -> CrossTab:
    """Fraction of each leaning's articles that carry each frame.

    Rows are the four leanings in fixed order, columns the five frames.
    Cells are per-frame fractions, so a row of multi-label articles can
    sum past 1.  Leanings without any labeled article get a zero row.
    """
    counts = {leaning: {frame: 0 for frame in FRAMES} for leaning in LEANINGS}
    totals = {leaning: 0 for leaning in LEANINGS}
    for label in labels:
        try:
            leaning = leaning_by_article[label.article_id]
        except KeyError:
            raise DataError(f"article {label.article_id} has no leaning metadata") from None
        if leaning not in LEANINGS:
            raise DataError(f"article {label.article_id}: unknown leaning {leaning!r}")
        totals[leaning] += 1
        for frame in label.frames:
            counts[leaning][frame] += 1
    values = tuple(
        tuple(
            counts[leaning][frame] / totals[leaning] if totals[leaning] else 0.0
            for frame in FRAMES
        )
        for leaning in LEANINGS
    )
    return CrossTab(rows=LEANINGS, cols=FRAMES, values=values)


def _iter_extractions(role_records: dict):
    """Yield (article_id, role, entity) from {article_id: {role:
    [entity or (annotator, entity), ...]}}."""
    for article_id, by_role in role_records.items():
        for role, entries in by_role.items():
            if role not in ROLES:
                raise DataError(f"article {article_id}: unknown role {role!r}")
            for entry in entries:
                entity = entry[1] if isinstance(entry, (tuple, list)) else entry
                yield article_id, role, str(entity)


def role_frame_cooccurrence(role_records: dict, labels) -> CrossTab:
    """Count role extractions per co-present frame.

    Every annotator's extraction counts once per frame of its article,
    so an extraction in a two-frame article lands in two columns.
    """
    frame_sets = {label.article_id: label.frames for label in labels}
    counts = {role: {frame: 0 for frame in FRAMES} for role in ROLES}
    for article_id, role, _ in _iter_extractions(role_records):
        try:
            frames = frame_sets[article_id]
        except KeyError:
            raise DataError(f"role record for unlabeled article {article_id}") from None
        for frame in frames:
            counts[role][frame] += 1
    values = tuple(tuple(counts[role][frame] for frame in FRAMES) for role in ROLES)
    return CrossTab(rows=ROLES, cols=FRAMES, values=values)


def role_stakeholder(role_records: dict, lexicon: StakeholderLexicon) -> CrossTab:
    """Count role extractions per stakeholder category (entities outside
    the lexicon fall into the catch-all category)."""
    categories = tuple(lexicon.categories)
    counts = {role: {category: 0 for category in categories} for role in ROLES}
    for _, role, entity in _iter_extractions(role_records):
        counts[role][map_stakeholder(entity, lexicon)] += 1
    values = tuple(tuple(counts[role][c] for c in categories) for role in ROLES)
    return CrossTab(rows=ROLES, cols=categories, values=values)


def stakeholder_roles_by_leaning(category: str, role_records: dict,
                                 lexicon: StakeholderLexicon,
                                 leaning_by_article: dict[str, str]) -> CrossTab:
    """Role-by-leaning counts restricted to entities of one stakeholder
    category."""
    if category not in lexicon.categories:
        raise DataError(f"unknown stakeholder category {category!r}")
    counts = {role: {leaning: 0 for leaning in LEANINGS} for role in ROLES}
    for article_id, role, entity in _iter_extractions(role_records):
        if map_stakeholder(entity, lexicon) != category:
            continue
        try:
            leaning = leaning_by_article[article_id]
        except KeyError:
            raise DataError(f"article {article_id} has no leaning metadata") from None
        if leaning not in LEANINGS:
            raise DataError(f"article {article_id}: unknown leaning {leaning!r}")
        counts[role][leaning] += 1
    values = tuple(tuple(counts[role][l] for l in LEANINGS) for role in ROLES)
    return CrossTab(rows=ROLES, cols=LEANINGS, values=values)


def _format_number(v) -> str:
    if isinstance(v, bool):
        raise DataError("boolean cell in cross-tab")
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def to_csv(table: CrossTab, comment: str | None = None) -> str:
    """Header row of column labels, one line per row; an optional
    trailing '# ...' comment carries provenance."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["", *table.cols])
    for label, row in zip(table.rows, table.values):
        writer.writerow([label, *(_format_number(v) for v in row)])
    text = buffer.getvalue()
    if comment is not None:
        text += f"# {comment}\n"
    return text


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def from_csv(text: str) -> CrossTab:
    lines = [line for line in text.splitlines() if line and not line.startswith("#")]
    if not lines:
        raise DataError("empty cross-tab CSV")
    parsed = list(csv.reader(lines))
    header = parsed[0]
    if len(header) < 2 or header[0] != "":
        raise DataError("cross-tab CSV must start with an empty-corner header row")
    cols = tuple(header[1:])
    rows, values = [], []
    for record in parsed[1:]:
        if len(record) != len(cols) + 1:
            raise DataError(f"row {record[0]!r} has wrong width")
        rows.append(record[0])
        try:
            values.append(tuple(_parse_number(v) for v in record[1:]))
        except ValueError as exc:
            raise DataError(f"row {record[0]!r}: non-numeric cell ({exc})") from None
    return CrossTab(rows=tuple(rows), cols=cols, values=tuple(values))


_CELL = 64
_GAP = 8
_LEFT = 120
_TOP = 48
_BOTTOM = 24


def _svg_header(width: int, height: int, title: str, metadata: str | None) -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
    ]
    if metadata is not None:
        parts.append(f"<metadata>{escape(metadata)}</metadata>")
    parts.append(f'<title>{escape(title)}</title>')
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    return parts


def render(table: CrossTab, kind: str = "heatmap", title: str = "",
           metadata: str | None = None) -> str:
    """Standalone deterministic SVG; kind is 'bars' (grouped bars per
    row) or 'heatmap' (shaded grid with printed values)."""
    if kind == "heatmap":
        return _render_heatmap(table, title, metadata)
    if kind == "bars":
        return _render_bars(table, title, metadata)
    raise DataError(f"unknown chart kind {kind!r}")


def _cell_text(v) -> str:
    return str(v) if isinstance(v, int) else f"{v:.2f}"


def _render_heatmap(table: CrossTab, title: str, metadata: str | None) -> str:
    width = _LEFT + len(table.cols) * _CELL + _GAP
    height = _TOP + len(table.rows) * _CELL + _BOTTOM
    peak = max((v for row in table.values for v in row), default=0) or 1
    parts = _svg_header(width, height, title or "cross-tab heatmap", metadata)
    if title:
        parts.append(f'<text x="{_LEFT}" y="16" font-size="13">{escape(title)}</text>')
    for j, col in enumerate(table.cols):
        x = _LEFT + j * _CELL + _CELL // 2
        parts.append(
            f'<text x="{x}" y="{_TOP - 8}" text-anchor="middle">{escape(str(col))}</text>'
        )
    for i, (row_label, row) in enumerate(zip(table.rows, table.values)):
        y = _TOP + i * _CELL
        parts.append(
            f'<text x="{_LEFT - 8}" y="{y + _CELL // 2 + 4}" '
            f'text-anchor="end">{escape(str(row_label))}</text>'
        )
        for j, v in enumerate(row):
            x = _LEFT + j * _CELL
            shade = 255 - int(round(160 * (v / peak)))
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL - 2}" height="{_CELL - 2}" '
                f'fill="rgb({shade},{shade},255)" stroke="#777"/>'
            )
            parts.append(
                f'<text x="{x + (_CELL - 2) // 2}" y="{y + _CELL // 2 + 4}" '
                f'text-anchor="middle">{_cell_text(v)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _render_bars(table: CrossTab, title: str, metadata: str | None) -> str:
    bar_width = 18
    group_width = len(table.cols) * bar_width + 2 * _GAP
    plot_height = 160
    width = _LEFT + len(table.rows) * group_width + _GAP
    height = _TOP + plot_height + _BOTTOM + 40
    peak = max((v for row in table.values for v in row), default=0) or 1
    parts = _svg_header(width, height, title or "cross-tab bars", metadata)
    if title:
        parts.append(f'<text x="{_LEFT}" y="16" font-size="13">{escape(title)}</text>')
    baseline = _TOP + plot_height
    parts.append(
        f'<line x1="{_LEFT - 4}" y1="{baseline}" x2="{width - _GAP}" y2="{baseline}" '
        f'stroke="#333"/>'
    )
    for i, (row_label, row) in enumerate(zip(table.rows, table.values)):
        gx = _LEFT + i * group_width + _GAP
        parts.append(
            f'<text x="{gx + len(table.cols) * bar_width // 2}" y="{baseline + 16}" '
            f'text-anchor="middle">{escape(str(row_label))}</text>'
        )
        for j, v in enumerate(row):
            bar = int(round(plot_height * (v / peak)))
            x = gx + j * bar_width
            shade = 40 + (200 * j) // max(len(table.cols) - 1, 1)
            parts.append(
                f'<rect x="{x}" y="{baseline - bar}" width="{bar_width - 3}" '
                f'height="{bar}" fill="rgb({shade},{shade},230)" stroke="#555"/>'
            )
            parts.append(
                f'<text x="{x + (bar_width - 3) // 2}" y="{baseline - bar - 3}" '
                f'text-anchor="middle" font-size="9">{_cell_text(v)}</text>'
            )
    legend_y = baseline + 34
    for j, col in enumerate(table.cols):
        shade = 40 + (200 * j) // max(len(table.cols) - 1, 1)
        x = _LEFT + j * 90
        parts.append(
            f'<rect x="{x}" y="{legend_y - 9}" width="10" height="10" '
            f'fill="rgb({shade},{shade},230)" stroke="#555"/>'
        )
        parts.append(f'<text x="{x + 14}" y="{legend_y}">{escape(str(col))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

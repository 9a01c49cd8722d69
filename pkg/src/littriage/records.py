"""Corpus ingestion: canonical document records and line-delimited parsing."""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass
from typing import IO, Iterable, Optional

logger = logging.getLogger(__name__)

SOURCES = ("pubmed", "embase", "medrxiv", "biorxiv", "other")


class DocClass(enum.IntEnum):
    """Five-way document taxonomy, in canonical report order."""

    BROAD_SYNTHESIS = 0
    SYSTEMATIC_REVIEW = 1
    PRIMARY_RCT = 2
    PRIMARY_NON_RCT = 3
    EXCLUDED = 4

    @property
    def label(self) -> str:
        return self.name.lower()


N_CLASSES = len(DocClass)

CLASS_NAMES = tuple(c.label for c in DocClass)

# Human-readable names used by the report renderer.
CLASS_DISPLAY = (
    "Broad synthesis",
    "Systematic review",
    "Primary rct",
    "Primary non-rct",
    "Excluded",
)

_LABEL_NORM_RE = re.compile(r"[\s_\-]+")

_LABEL_ALIASES = {
    "broad synthesis": DocClass.BROAD_SYNTHESIS,
    "systematic review": DocClass.SYSTEMATIC_REVIEW,
    "primary rct": DocClass.PRIMARY_RCT,
    "primary non rct": DocClass.PRIMARY_NON_RCT,
    "excluded": DocClass.EXCLUDED,
}


def normalize_label(raw: str) -> Optional[DocClass]:
    """Map a free-form label string onto a DocClass, or None if unknown.

    Lowercases, trims, and collapses runs of whitespace/underscores/hyphens
    so heterogeneous exporter spellings all match.
    """
    key = _LABEL_NORM_RE.sub(" ", raw.strip().lower()).strip()
    return _LABEL_ALIASES.get(key)


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    title: str = ""
    abstract: str = ""
    source: str = "other"
    label: Optional[DocClass] = None

    def text(self) -> str:
        """Classification text: title and abstract joined by a space."""
        if self.title and self.abstract:
            return self.title + " " + self.abstract
        return self.title or self.abstract

    def to_json_line(self) -> str:
        obj = {
            "id": self.id,
            "title": self.title,
            "abstract": self.abstract,
            "source": self.source,
        }
        if self.label is not None:
            obj["label"] = self.label.label
        return json.dumps(obj, ensure_ascii=False)


@dataclass(frozen=True)
class RecordError:
    line_no: int
    kind: str  # malformed-line | missing-id | empty-text | unknown-label
    message: str


def _parse_line(line_no: int, line: str) -> "DocumentRecord | RecordError":
    try:
        obj = json.loads(line)
    except ValueError as exc:
        return RecordError(line_no, "malformed-line", f"not valid JSON: {exc}")
    if not isinstance(obj, dict):
        return RecordError(line_no, "malformed-line", "record is not an object")

    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        return RecordError(line_no, "missing-id", "field 'id' missing or empty")

    title = obj.get("title") or ""
    abstract = obj.get("abstract") or ""
    if not isinstance(title, str) or not isinstance(abstract, str):
        return RecordError(line_no, "malformed-line", "title/abstract must be strings")
    if not title.strip() and not abstract.strip():
        return RecordError(line_no, "empty-text", "both title and abstract are empty")

    source = obj.get("source") or "other"
    if not isinstance(source, str):
        return RecordError(line_no, "malformed-line", "source must be a string")
    source = source.strip().lower()
    if source not in SOURCES:
        logger.warning("line %d: unknown source %r downgraded to 'other'", line_no, source)
        source = "other"

    label: Optional[DocClass] = None
    raw_label = obj.get("label")
    if raw_label is not None:
        if not isinstance(raw_label, str):
            return RecordError(line_no, "unknown-label", "label must be a string")
        label = normalize_label(raw_label)
        if label is None:
            return RecordError(line_no, "unknown-label", f"unknown label {raw_label!r}")

    return DocumentRecord(id=doc_id, title=title, abstract=abstract, source=source, label=label)


def parse_corpus(stream: IO[str] | Iterable[str]) -> tuple[list[DocumentRecord], list[RecordError]]:
    """Parse line-delimited JSON records.

    Blank lines are skipped; every other line yields exactly one record or
    one RecordError. Parsing never aborts on a bad line.
    """
    records: list[DocumentRecord] = []
    errors: list[RecordError] = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        out = _parse_line(line_no, line)
        if isinstance(out, RecordError):
            errors.append(out)
        else:
            records.append(out)
    return records, errors


def dedup(records: list[DocumentRecord]) -> tuple[list[DocumentRecord], int]:
    """Keep the first occurrence of each id, preserving order."""
    seen: set[str] = set()
    kept: list[DocumentRecord] = []
    for rec in records:
        if rec.id in seen:
            continue
        seen.add(rec.id)
        kept.append(rec)
    return kept, len(records) - len(kept)

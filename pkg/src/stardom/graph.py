"""Typed triple store linking products, orders, series, forecasts, explanations and feedback.

Entities are typed records with literal attributes; triples connect an existing
subject entity to another entity or to a literal. Tabular ingestion is driven
by a mapping document (id column per entity kind plus column-to-predicate
rules) and is idempotent. The store serializes to a line-oriented dump of
``kind<TAB>subject<TAB>predicate<TAB>object`` records.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Iterable, Iterator, Mapping

from .errors import DataValidationError, IngestionError, IntegrityError, UsageError
from .validation import Literal, check_literal, check_nonempty_str

ENTITY_KINDS = (
    "Product",
    "Order",
    "SeriesRef",
    "ForecastRef",
    "ExplanationRef",
    "FeedbackRef",
    "User",
    "DecisionRef",
    "ScenarioRef",
)


@dataclass
class Entity:
    id: str
    kind: str
    attributes: dict[str, Literal] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise IntegrityError("entity id must be nonempty")
        if self.kind not in ENTITY_KINDS:
            raise DataValidationError(f"unknown entity kind {self.kind!r}")
        for name, value in self.attributes.items():
            check_nonempty_str(name, "attribute name")
            check_literal(value, f"attribute {name!r}")


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Literal
    object_is_ref: bool = False

    def __post_init__(self):
        check_nonempty_str(self.subject, "subject")
        check_nonempty_str(self.predicate, "predicate")
        check_literal(self.object, "object")
        if self.object_is_ref and not isinstance(self.object, str):
            raise DataValidationError("entity-reference objects must be id strings")


@dataclass(frozen=True)
class IngestReport:
    entities_created: int = 0
    triples_created: int = 0

    @property
    def total(self) -> int:
        return self.entities_created + self.triples_created


def _object_key(value: Literal) -> tuple:
    # Distinguish 5 from "5" and from date(...) when deduplicating.
    return (type(value).__name__, str(value))


# Export-line escaping: fields may contain tabs or any character Python (or a
# text editor) would treat as a line boundary, so all of those are encoded.
_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_LINE_BREAKERS = "\x0b\x0c\x1c\x1d\x1e\x85  "
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ch in _LINE_BREAKERS:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return "".join(out)


def _unescape(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "u" and i + 6 <= len(text):
                out.append(chr(int(text[i + 2: i + 6], 16)))
                i += 6
                continue
            out.append(_UNESCAPES.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _encode_object(value: Literal, is_ref: bool) -> str:
    if is_ref:
        return "e:" + _escape(value)
    if isinstance(value, date):
        return "d:" + value.isoformat()
    if isinstance(value, (int, float)):
        return "n:" + repr(value)
    return "s:" + _escape(value)


def _decode_object(text: str) -> tuple[Literal, bool]:
    if len(text) < 2 or text[1] != ":":
        raise DataValidationError(f"malformed object field {text!r}")
    tag, body = text[0], text[2:]
    if tag == "e":
        return _unescape(body), True
    if tag == "s":
        return _unescape(body), False
    if tag == "d":
        return date.fromisoformat(body), False
    if tag == "n":
        num = float(body)
        return (int(num) if num.is_integer() and "." not in body and "e" not in body else num), False
    raise DataValidationError(f"unknown object tag {tag!r}")


class TripleStore:
    """In-memory typed triple graph with single-writer, snapshot-read semantics."""

    def __init__(self):
        self._entities: dict[str, Entity] = {}
        self._triples: list[Triple] = []
        self._index: set[tuple[str, str, tuple]] = set()
        self._lock = threading.RLock()

    # -- entities -----------------------------------------------------------

    def upsert_entity(self, entity: Entity) -> str:
        """Insert or merge an entity; attribute merges let new keys win."""
        with self._lock:
            existing = self._entities.get(entity.id)
            if existing is None:
                self._entities[entity.id] = Entity(entity.id, entity.kind, dict(entity.attributes))
            else:
                if existing.kind != entity.kind:
                    raise IntegrityError(
                        f"entity {entity.id!r} is {existing.kind}; cannot change kind to {entity.kind}"
                    )
                existing.attributes.update(entity.attributes)
            return entity.id

    def get_entity(self, entity_id: str) -> Entity | None:
        with self._lock:
            e = self._entities.get(entity_id)
            return Entity(e.id, e.kind, dict(e.attributes)) if e else None

    def has_entity(self, entity_id: str) -> bool:
        with self._lock:
            return entity_id in self._entities

    def entities(self) -> list[Entity]:
        with self._lock:
            return [Entity(e.id, e.kind, dict(e.attributes)) for e in self._entities.values()]

    # -- triples ------------------------------------------------------------

    def add_triple(self, triple: Triple) -> bool:
        """Store a triple; returns False (without growing) for an exact duplicate."""
        with self._lock:
            if triple.subject not in self._entities:
                raise IntegrityError(f"triple subject {triple.subject!r} does not resolve to an entity")
            if triple.object_is_ref and triple.object not in self._entities:
                raise IntegrityError(f"triple object {triple.object!r} does not resolve to an entity")
            key = (triple.subject, triple.predicate, _object_key(triple.object))
            if key in self._index:
                return False
            self._index.add(key)
            self._triples.append(triple)
            return True

    def add(self, subject: str, predicate: str, obj: Literal, *, is_ref: bool = False) -> bool:
        return self.add_triple(Triple(subject, predicate, obj, object_is_ref=is_ref))

    def __len__(self) -> int:
        with self._lock:
            return len(self._triples)

    def query(
        self,
        subject: str | None = None,
        predicate: str | None = None,
        object: Literal | None = None,
    ) -> list[Triple]:
        """Triples matching every set filter, in insertion order."""
        if subject is None and predicate is None and object is None:
            raise UsageError("query requires at least one of subject, predicate, object")
        obj_key = None if object is None else _object_key(object)
        with self._lock:
            return [
                t
                for t in self._triples
                if (subject is None or t.subject == subject)
                and (predicate is None or t.predicate == predicate)
                and (obj_key is None or _object_key(t.object) == obj_key)
            ]

    def check_referential_integrity(self) -> list[Triple]:
        """Full scan; returns triples whose entity-reference object is dangling."""
        with self._lock:
            return [t for t in self._triples if t.object_is_ref and t.object not in self._entities]

    # -- tabular ingestion ----------------------------------------------------

    def ingest_tabular(self, rows: Iterable[Mapping[str, Any]], mapping: Mapping[str, Any]) -> IngestReport:
        """Apply an ingestion mapping to tabular rows.

        Mapping document::

            {"entities": [{"kind": "Order", "id_column": "order_id"}],
             "rules": [{"kind": "Order", "predicate": "ofProduct",
                        "column": "product_id", "object_kind": "Product"}]}

        Each entity declaration creates one entity per row from its id column;
        each rule adds one triple per row whose subject is that row's entity of
        ``kind`` and whose object is the cell value (an entity reference when
        ``object_kind`` is set, a literal otherwise). Re-ingesting the same
        rows creates nothing.
        """
        decls = list(mapping.get("entities", []))
        rules = list(mapping.get("rules", []))
        if not decls:
            raise IngestionError("mapping declares no entities")
        id_columns = {}
        for decl in decls:
            kind = decl.get("kind")
            if kind not in ENTITY_KINDS:
                raise IngestionError(f"mapping declares unknown entity kind {kind!r}")
            column = decl.get("id_column")
            if not column:
                raise IngestionError(f"entity declaration for {kind!r} lacks an id_column")
            id_columns[kind] = column
        for rule in rules:
            if rule.get("kind") not in id_columns:
                raise IngestionError(f"rule subject kind {rule.get('kind')!r} has no entity declaration")
            if not rule.get("predicate"):
                raise IngestionError("rule lacks a predicate")
            if not rule.get("column"):
                raise IngestionError("rule lacks a column")

        entities_created = 0
        triples_created = 0
        with self._lock:
            for row in rows:
                ids: dict[str, str] = {}
                for kind, column in id_columns.items():
                    if column not in row:
                        raise IngestionError(f"mapped column {column!r} missing from input")
                    entity_id = str(row[column]).strip()
                    check_nonempty_str(entity_id, f"id column {column!r}")
                    if entity_id not in self._entities:
                        entities_created += 1
                    self.upsert_entity(Entity(entity_id, kind))
                    ids[kind] = entity_id
                for rule in rules:
                    column = rule["column"]
                    if column not in row:
                        raise IngestionError(f"mapped column {column!r} missing from input")
                    raw = row[column]
                    object_kind = rule.get("object_kind")
                    if object_kind:
                        if object_kind not in ENTITY_KINDS:
                            raise IngestionError(f"rule names unknown object kind {object_kind!r}")
                        obj = str(raw).strip()
                        check_nonempty_str(obj, f"object column {column!r}")
                        if obj not in self._entities:
                            entities_created += 1
                        self.upsert_entity(Entity(obj, object_kind))
                        stored = self.add(ids[rule["kind"]], rule["predicate"], obj, is_ref=True)
                    else:
                        stored = self.add(ids[rule["kind"]], rule["predicate"], _coerce_cell(raw))
                    if stored:
                        triples_created += 1
        return IngestReport(entities_created, triples_created)

    def ingest_csv(self, text: str, mapping: Mapping[str, Any]) -> IngestReport:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None:
            raise IngestionError("CSV input has no header row")
        return self.ingest_tabular(list(reader), mapping)

    # -- serialization --------------------------------------------------------

    def export_lines(self) -> Iterator[str]:
        """Dump the graph: one bare-entity line per entity, one line per triple."""
        with self._lock:
            for e in self._entities.values():
                yield f"{e.kind}\t{_escape(e.id)}\t\t"
            for t in self._triples:
                kind = self._entities[t.subject].kind
                yield (
                    f"{kind}\t{_escape(t.subject)}\t{_escape(t.predicate)}\t"
                    f"{_encode_object(t.object, t.object_is_ref)}"
                )

    def export_text(self) -> str:
        return "".join(line + "\n" for line in self.export_lines())

    def import_lines(self, lines: Iterable[str]) -> IngestReport:
        entities_created = 0
        triples_created = 0
        with self._lock:
            for raw in lines:
                line = raw.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 4:
                    raise DataValidationError(f"malformed dump line: {line!r}")
                kind, subject, predicate, obj_field = parts
                subject = _unescape(subject)
                if not self.has_entity(subject):
                    entities_created += 1
                self.upsert_entity(Entity(subject, kind))
                if predicate == "" and obj_field == "":
                    continue
                obj, is_ref = _decode_object(obj_field)
                if self.add(subject, _unescape(predicate), obj, is_ref=is_ref):
                    triples_created += 1
        return IngestReport(entities_created, triples_created)

    def triple_multiset(self) -> list[tuple[str, str, str, tuple]]:
        """Canonical (kind, subject, predicate, object) multiset for isomorphism checks."""
        with self._lock:
            return sorted(
                (self._entities[t.subject].kind, t.subject, t.predicate, _object_key(t.object))
                for t in self._triples
            )


def _coerce_cell(raw: Any) -> Literal:
    """CSV cells arrive as strings; keep them as string literals unless numeric."""
    if isinstance(raw, (int, float, date)):
        return check_literal(raw)
    text = str(raw)
    try:
        num = float(text)
    except ValueError:
        return text
    if not math.isfinite(num):  # cells like "nan"/"inf" stay strings
        return text
    if text.strip().isdigit() or (text.strip().startswith("-") and text.strip()[1:].isdigit()):
        return int(text)
    return num

"""CSV ingestion, schema validation, and cell access for the source tables.

The parser is hand-rolled rather than built on the csv module because the
rest of the pipeline needs to distinguish an *absent* field (empty and
unquoted) from a *present but empty* one (quoted ``""``). Only absent cells
suppress triples downstream.
"""

from __future__ import annotations

import codecs
import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources

from .errors import (
    DecodeError,
    EmptyInputError,
    HeaderError,
    JsonSyntaxError,
    RaggedRowError,
    SchemaFormatError,
    UnknownColumnError,
)

DEFAULT_VALUE_DELIMITER = ";"


def normalize_name(name: str) -> str:
    """Trim, collapse internal whitespace, and casefold a column name."""
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class CsvDialect:
    delimiter: str = ","
    quote: str = '"'
    encoding: str = "utf-8"
    has_header: bool = True

    def __post_init__(self):
        if len(self.delimiter) != 1 or len(self.quote) != 1:
            raise ValueError("delimiter and quote must be single characters")
        if self.delimiter == self.quote:
            raise ValueError("delimiter and quote must differ")
        try:
            codecs.lookup(self.encoding)
        except LookupError:
            raise ValueError(f"unsupported encoding: {self.encoding!r}") from None


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    required: bool = False
    multivalued: bool = False
    value_delimiter: str | None = None

    def __post_init__(self):
        if not self.name.strip():
            raise ValueError("column name must be non-empty")
        if self.value_delimiter is not None and len(self.value_delimiter) != 1:
            raise ValueError("value_delimiter must be a single character")

    @property
    def effective_delimiter(self) -> str:
        return self.value_delimiter or DEFAULT_VALUE_DELIMITER


@dataclass(frozen=True)
class TableSchema:
    id: str
    columns: tuple[ColumnSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        seen: set[str] = set()
        for col in self.columns:
            key = normalize_name(col.name)
            if key in seen:
                raise HeaderError(f"duplicate column name in schema {self.id!r}: {col.name!r}")
            seen.add(key)

    def column(self, name: str) -> ColumnSpec | None:
        key = normalize_name(name)
        for col in self.columns:
            if normalize_name(col.name) == key:
                return col
        return None


@dataclass(frozen=True)
class TabularDataset:
    header: tuple[str, ...]
    rows: tuple[tuple[str | None, ...], ...]
    source_id: str

    def __post_init__(self):
        object.__setattr__(self, "header", tuple(self.header))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        seen: set[str] = set()
        for name in self.header:
            if not name.strip():
                raise HeaderError("empty column name in header")
            key = normalize_name(name)
            if key in seen:
                raise HeaderError(f"duplicate column name in header: {name!r}")
            seen.add(key)
        width = len(self.header)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise RaggedRowError(i, width, len(row))

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {normalize_name(name): i for i, name in enumerate(self.header)}

    def column_position(self, name: str) -> int:
        try:
            return self._positions[normalize_name(name)]
        except KeyError:
            raise UnknownColumnError(
                f"unknown column {name!r} in source {self.source_id!r}"
            ) from None

    @cached_property
    def row_dicts(self) -> tuple[dict[str, str | None], ...]:
        """Rows keyed by normalized column name, for term-map lookups."""
        keys = [normalize_name(name) for name in self.header]
        return tuple(dict(zip(keys, row)) for row in self.rows)


# --- severity constants used by ValidationReport ---------------------------

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Issue:
    severity: str
    row: int | None
    column: str | None
    message: str

    def render(self) -> str:
        parts = [self.severity.upper()]
        if self.row is not None:
            parts.append(f"row {self.row}")
        if self.column is not None:
            parts.append(f"column {self.column!r}")
        return f"[{' | '.join(parts)}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[Issue, ...]

    @classmethod
    def from_issues(cls, issues: list[Issue]) -> "ValidationReport":
        return cls(ok=not any(i.severity == ERROR for i in issues), issues=tuple(issues))

    def to_json(self) -> str:
        payload = {
            "ok": self.ok,
            "issues": [
                {"severity": i.severity, "row": i.row, "column": i.column, "message": i.message}
                for i in self.issues
            ],
        }
        return json.dumps(payload, indent=2)


# --- CSV parsing -----------------------------------------------------------

def _parse_records(text: str, delimiter: str, quote: str) -> list[list[tuple[str, bool]]]:
    """Split CSV text into records of (value, was_quoted) fields.

    RFC 4180 conventions: quotes double inside quoted fields, delimiters and
    line breaks are literal inside quotes. A lone trailing newline does not
    produce a record, and fully blank lines are skipped.
    """
    records: list[list[tuple[str, bool]]] = []
    fields: list[tuple[str, bool]] = []
    buf: list[str] = []
    quoted = False
    in_quotes = False
    record_started = False

    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if in_quotes:
            if c == quote:
                if i + 1 < n and text[i + 1] == quote:
                    buf.append(quote)
                    i += 2
                else:
                    in_quotes = False
                    i += 1
            else:
                buf.append(c)
                i += 1
            continue
        if c == quote and not buf and not quoted:
            quoted = True
            in_quotes = True
            record_started = True
            i += 1
        elif c == delimiter:
            fields.append(("".join(buf), quoted))
            buf.clear()
            quoted = False
            record_started = True
            i += 1
        elif c in "\r\n":
            if record_started:
                fields.append(("".join(buf), quoted))
                records.append(fields)
                fields = []
                buf.clear()
                quoted = False
                record_started = False
            if c == "\r" and i + 1 < n and text[i + 1] == "\n":
                i += 2
            else:
                i += 1
        else:
            buf.append(c)
            record_started = True
            i += 1

    # Unterminated quote at EOF is tolerated; the open field is flushed as-is.
    if record_started:
        fields.append(("".join(buf), quoted))
        records.append(fields)
    return records


def load_csv(data: bytes, dialect: CsvDialect, source_id: str) -> TabularDataset:
    """Parse CSV bytes into a dataset.

    An empty unquoted field becomes an absent cell (None); a quoted empty
    field becomes present empty text.
    """
    try:
        text = data.decode(dialect.encoding)
    except UnicodeDecodeError as exc:
        raise DecodeError(f"cannot decode input as {dialect.encoding}: {exc}") from exc
    if text.startswith("﻿"):
        text = text[1:]

    records = _parse_records(text, dialect.delimiter, dialect.quote)
    if not records:
        raise EmptyInputError("no CSV records found")

    if dialect.has_header:
        header = tuple(value for value, _ in records[0])
        body = records[1:]
    else:
        header = tuple(f"column_{i + 1}" for i in range(len(records[0])))
        body = records

    rows: list[tuple[str | None, ...]] = []
    for idx, record in enumerate(body):
        if len(record) != len(header):
            raise RaggedRowError(idx, len(header), len(record))
        rows.append(tuple(None if value == "" and not was_quoted else value
                          for value, was_quoted in record))
    return TabularDataset(header=header, rows=tuple(rows), source_id=source_id)


def serialize_csv(dataset: TabularDataset, dialect: CsvDialect) -> bytes:
    """Inverse of load_csv: absent cells become empty unquoted fields, empty
    text becomes a quoted empty field."""
    q = dialect.quote
    special = {dialect.delimiter, q, "\r", "\n"}

    def fmt(cell: str | None) -> str:
        if cell is None:
            return ""
        if cell == "":
            return q + q
        if any(ch in special for ch in cell):
            return q + cell.replace(q, q + q) + q
        return cell

    lines = []
    if dialect.has_header:
        lines.append(dialect.delimiter.join(fmt(h) for h in dataset.header))
    for row in dataset.rows:
        lines.append(dialect.delimiter.join(fmt(c) for c in row))
    return ("\r\n".join(lines) + "\r\n").encode(dialect.encoding)


# --- operations ------------------------------------------------------------

def validate_schema(dataset: TabularDataset, schema: TableSchema) -> ValidationReport:
    """Check a dataset against a schema.

    Issues come out in a fixed order: missing required columns (schema
    order), unknown columns (header order), then per-row absent required
    cells ordered by row and schema column order.
    """
    issues: list[Issue] = []
    header_keys = {normalize_name(h) for h in dataset.header}
    schema_keys = {normalize_name(c.name) for c in schema.columns}

    for col in schema.columns:
        if col.required and normalize_name(col.name) not in header_keys:
            issues.append(Issue(ERROR, None, col.name, "required column is missing"))
    for name in dataset.header:
        if normalize_name(name) not in schema_keys:
            issues.append(Issue(WARNING, None, name, "column not declared in schema"))

    required_present = [
        col for col in schema.columns
        if col.required and normalize_name(col.name) in header_keys
    ]
    positions = {col.name: dataset.column_position(col.name) for col in required_present}
    for row_idx, row in enumerate(dataset.rows):
        for col in required_present:
            if row[positions[col.name]] is None:
                issues.append(Issue(ERROR, row_idx, col.name, "required cell is absent"))
    return ValidationReport.from_issues(issues)


def cell(dataset: TabularDataset, row: int, column: str) -> str | None:
    """Cell lookup by normalized column name; None when the cell is absent."""
    return dataset.rows[row][dataset.column_position(column)]


def split_multivalued(value: str, delimiter: str = DEFAULT_VALUE_DELIMITER) -> list[str]:
    """Split on the delimiter, trim each part, and drop empty parts."""
    return [part for part in (p.strip() for p in value.split(delimiter)) if part]


# --- schema files ----------------------------------------------------------

def schema_from_json(text: str) -> TableSchema:
    """Load a schema from its JSON form: {"id": ..., "columns": [...]}.

    Each column is {"name": ..., "required"?: bool, "multivalued"?: bool,
    "value_delimiter"?: str}. A top-level "description" is allowed and
    ignored.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JsonSyntaxError(f"invalid schema JSON: {exc}") from exc
    if not isinstance(raw, dict) or "id" not in raw or "columns" not in raw:
        raise SchemaFormatError("schema JSON must be an object with 'id' and 'columns'")
    columns = []
    for entry in raw["columns"]:
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaFormatError(f"bad column entry: {entry!r}")
        unknown = set(entry) - {"name", "required", "multivalued", "value_delimiter"}
        if unknown:
            raise SchemaFormatError(f"unknown column fields: {sorted(unknown)}")
        try:
            columns.append(ColumnSpec(
                name=entry["name"],
                required=bool(entry.get("required", False)),
                multivalued=bool(entry.get("multivalued", False)),
                value_delimiter=entry.get("value_delimiter"),
            ))
        except ValueError as exc:
            raise SchemaFormatError(str(exc)) from exc
    try:
        return TableSchema(id=raw["id"], columns=tuple(columns))
    except HeaderError as exc:
        raise SchemaFormatError(str(exc)) from exc


def bundled_schema(name: str) -> TableSchema:
    """Load one of the schemas shipped with the package ('objects' or 'process')."""
    path = resources.files("glam2rdf.data").joinpath(f"schemas/{name}_table.json")
    return schema_from_json(path.read_text(encoding="utf-8"))

"""RDF term model and N-Triples line formatting."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import IriInvalidError

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF_NS + "type"
RDF_LANGSTRING = RDF_NS + "langString"
XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_BOOLEAN = XSD_NS + "boolean"
XSD_DATETIME = XSD_NS + "dateTime"

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")
# Characters an IRI reference may never contain (N-Triples IRIREF grammar).
_IRI_FORBIDDEN_RE = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_LANG_TAG_RE = re.compile(r"^[A-Za-z]{1,8}(?:-[A-Za-z0-9]{1,8})*$")
# No leading or trailing dot, per the N-Triples BLANK_NODE_LABEL production.
_BLANK_LABEL_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?$")


def is_absolute_iri(text: str) -> bool:
    """True when text has a scheme and no characters illegal in an IRI reference."""
    return bool(_SCHEME_RE.match(text)) and not _IRI_FORBIDDEN_RE.search(text)


def check_absolute_iri(text: str, context: str = "") -> str:
    if not is_absolute_iri(text):
        where = f" in {context}" if context else ""
        raise IriInvalidError(f"not an absolute IRI{where}: {text!r}")
    return text


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self):
        check_absolute_iri(self.value, "IRI term")


@dataclass(frozen=True)
class BlankNode:
    label: str

    def __post_init__(self):
        if not _BLANK_LABEL_RE.match(self.label):
            raise ValueError(f"invalid blank node label: {self.label!r}")


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    language: str | None = None

    def __post_init__(self):
        if self.language is not None:
            if not _LANG_TAG_RE.match(self.language):
                raise ValueError(f"invalid language tag: {self.language!r}")
            # Tagged literals always carry rdf:langString.
            object.__setattr__(self, "datatype", RDF_LANGSTRING)
        else:
            check_absolute_iri(self.datatype, "literal datatype")


RdfTerm = Iri | BlankNode | Literal


@dataclass(frozen=True)
class Triple:
    subject: Iri | BlankNode
    predicate: Iri
    object: RdfTerm


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_ESCAPE_RE = re.compile(r'[\\"\n\r\t]')


def escape_literal(text: str) -> str:
    return _ESCAPE_RE.sub(lambda m: _ESCAPES[m.group()], text)


def format_term(term: RdfTerm) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    if isinstance(term, Literal):
        quoted = f'"{escape_literal(term.lexical)}"'
        if term.language is not None:
            return f"{quoted}@{term.language}"
        if term.datatype != XSD_STRING:
            return f"{quoted}^^<{term.datatype}>"
        return quoted
    raise TypeError(f"not an RDF term: {term!r}")


def format_triple(t: Triple) -> str:
    return f"{format_term(t.subject)} {format_term(t.predicate)} {format_term(t.object)} ."


def sanitize_blank_label(text: str) -> str:
    """Force arbitrary text into the blank node label grammar."""
    cleaned = re.sub(r"[^A-Za-z0-9_.\-]", "_", text) or "b"
    if not re.match(r"[A-Za-z0-9_]", cleaned[0]):
        cleaned = "b" + cleaned
    if cleaned[-1] == ".":
        cleaned += "_"
    return cleaned

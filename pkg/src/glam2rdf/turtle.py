"""Minimal Turtle reader covering the constructs the RML subset needs.

Handles @prefix directives, prefixed names, IRI references, string literals
with datatype/language, integers, booleans, the 'a' keyword, labeled blank
nodes, nested blank node property lists, and ; , punctuation. Collections,
@base, and multi-line strings are out of scope and rejected with named
errors.

Output is a triple soup: nodes are tagged tuples
('iri', value) | ('bnode', id) | ('lit', lexical, datatype, language).
"""

from __future__ import annotations

import re

from .errors import TurtleSyntaxError, UnsupportedFeatureError
from .terms import RDF_TYPE, XSD_BOOLEAN, XSD_INTEGER, is_absolute_iri

Node = tuple  # tagged tuples, see module docstring
Statement = tuple  # (subject Node, predicate Node, object Node)

_TOKEN_SPECS = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("PREFIX_KW", r"@prefix\b|PREFIX\b"),
    ("BASE_KW", r"@base\b|BASE\b"),
    ("IRIREF", r'<[^<>"{}|^`\\\x00-\x20]*>'),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"'),
    ("BNODE", r"_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?"),
    ("LANGTAG", r"@[A-Za-z]{1,8}(?:-[A-Za-z0-9]{1,8})*"),
    ("DTSEP", r"\^\^"),
    # Local parts never swallow the statement-terminating dot.
    ("PNAME", r"[A-Za-z][A-Za-z0-9_.\-]*:[A-Za-z0-9_%](?:[A-Za-z0-9_.\-%]*[A-Za-z0-9_\-%])?"
              r"|[A-Za-z][A-Za-z0-9_.\-]*:"
              r"|:[A-Za-z0-9_](?:[A-Za-z0-9_.\-%]*[A-Za-z0-9_\-%])?"),
    ("BOOL", r"\b(?:true|false)\b"),
    ("A_KW", r"\ba\b"),
    ("NUMBER", r"[+-]?[0-9]+(?:\.[0-9]+)?"),
    ("PUNCT", r"[;,.\[\]()]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPECS))

_STRING_ESCAPES = {
    "t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f",
    '"': '"', "'": "'", "\\": "\\",
}


def _unescape(raw: str, line: int, col: int) -> str:
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise TurtleSyntaxError("dangling escape in string", line, col)
        e = raw[i + 1]
        if e in _STRING_ESCAPES:
            out.append(_STRING_ESCAPES[e])
            i += 2
        elif e == "u" or e == "U":
            width = 4 if e == "u" else 8
            hexpart = raw[i + 2:i + 2 + width]
            if len(hexpart) != width or not re.fullmatch(r"[0-9A-Fa-f]+", hexpart):
                raise TurtleSyntaxError(f"bad unicode escape \\{e}{hexpart}", line, col)
            out.append(chr(int(hexpart, 16)))
            i += 2 + width
        else:
            raise TurtleSyntaxError(f"unknown escape \\{e}", line, col)
    return "".join(out)


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind: str, value: str, line: int, col: int):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TurtleSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(_Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: dict[str, str] = {}
        self.statements: list[Statement] = []
        self._bnode_counter = 0

    # --- token helpers ---

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            raise TurtleSyntaxError(
                "unexpected end of input",
                last.line if last else 1,
                last.col if last else 1,
            )
        self.pos += 1
        return tok

    def _expect_punct(self, char: str) -> None:
        tok = self._next()
        if tok.kind != "PUNCT" or tok.value != char:
            raise TurtleSyntaxError(f"expected {char!r}, got {tok.value!r}", tok.line, tok.col)

    def _fresh_bnode(self) -> Node:
        self._bnode_counter += 1
        return ("bnode", f"g{self._bnode_counter}")

    # --- grammar ---

    def parse(self) -> tuple[dict[str, str], list[Statement]]:
        while self._peek() is not None:
            tok = self._peek()
            if tok.kind == "PREFIX_KW":
                self._parse_prefix()
            elif tok.kind == "BASE_KW":
                raise UnsupportedFeatureError(
                    f"@base directives are not supported (line {tok.line})"
                )
            else:
                self._parse_triples()
        return self.prefixes, self.statements

    def _parse_prefix(self) -> None:
        kw = self._next()
        name = self._next()
        if name.kind != "PNAME" or not name.value.endswith(":"):
            raise TurtleSyntaxError("expected prefix label", name.line, name.col)
        label = name.value[:-1]
        iri = self._next()
        if iri.kind != "IRIREF":
            raise TurtleSyntaxError("expected namespace IRI", iri.line, iri.col)
        namespace = iri.value[1:-1]
        if not is_absolute_iri(namespace):
            raise TurtleSyntaxError(
                f"namespace IRI must be absolute: {namespace!r}", iri.line, iri.col
            )
        self.prefixes[label] = namespace
        if kw.value == "@prefix":
            self._expect_punct(".")

    def _parse_triples(self) -> None:
        subject = self._parse_term(allow_literal=False)
        self._parse_predicate_object_list(subject, terminator=".")
        self._expect_punct(".")

    def _parse_predicate_object_list(self, subject: Node, terminator: str) -> None:
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == "PUNCT" and tok.value == terminator:
                return  # tolerate trailing ';'
            predicate = self._parse_predicate()
            while True:
                obj = self._parse_term(allow_literal=True)
                self.statements.append((subject, predicate, obj))
                tok = self._peek()
                if tok is not None and tok.kind == "PUNCT" and tok.value == ",":
                    self._next()
                    continue
                break
            tok = self._peek()
            if tok is not None and tok.kind == "PUNCT" and tok.value == ";":
                self._next()
                continue
            return

    def _parse_predicate(self) -> Node:
        tok = self._next()
        if tok.kind == "A_KW":
            return ("iri", RDF_TYPE)
        if tok.kind == "IRIREF":
            return self._iri_from_ref(tok)
        if tok.kind == "PNAME":
            return ("iri", self._expand_pname(tok))
        raise TurtleSyntaxError(f"expected predicate, got {tok.value!r}", tok.line, tok.col)

    def _parse_term(self, allow_literal: bool) -> Node:
        tok = self._next()
        if tok.kind == "IRIREF":
            return self._iri_from_ref(tok)
        if tok.kind == "PNAME":
            return ("iri", self._expand_pname(tok))
        if tok.kind == "BNODE":
            return ("bnode", tok.value[2:])
        if tok.kind == "PUNCT" and tok.value == "[":
            node = self._fresh_bnode()
            self._parse_predicate_object_list(node, terminator="]")
            self._expect_punct("]")
            return node
        if tok.kind == "PUNCT" and tok.value == "(":
            raise UnsupportedFeatureError(
                f"RDF collections are not supported (line {tok.line})"
            )
        if not allow_literal:
            raise TurtleSyntaxError(f"expected subject, got {tok.value!r}", tok.line, tok.col)
        if tok.kind == "STRING":
            lexical = _unescape(tok.value[1:-1], tok.line, tok.col)
            nxt = self._peek()
            if nxt is not None and nxt.kind == "LANGTAG":
                self._next()
                return ("lit", lexical, None, nxt.value[1:])
            if nxt is not None and nxt.kind == "DTSEP":
                self._next()
                dt = self._next()
                if dt.kind == "IRIREF":
                    return ("lit", lexical, self._iri_from_ref(dt)[1], None)
                if dt.kind == "PNAME":
                    return ("lit", lexical, self._expand_pname(dt), None)
                raise TurtleSyntaxError("expected datatype IRI", dt.line, dt.col)
            return ("lit", lexical, None, None)
        if tok.kind == "NUMBER":
            if "." in tok.value:
                raise UnsupportedFeatureError(
                    f"decimal literals are not supported (line {tok.line})"
                )
            return ("lit", tok.value, XSD_INTEGER, None)
        if tok.kind == "BOOL":
            return ("lit", tok.value, XSD_BOOLEAN, None)
        raise TurtleSyntaxError(f"unexpected token {tok.value!r}", tok.line, tok.col)

    def _iri_from_ref(self, tok: _Token) -> Node:
        iri = tok.value[1:-1]
        if not is_absolute_iri(iri):
            raise TurtleSyntaxError(f"relative IRI not allowed: <{iri}>", tok.line, tok.col)
        return ("iri", iri)

    def _expand_pname(self, tok: _Token) -> str:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.prefixes:
            raise TurtleSyntaxError(f"undeclared prefix {prefix!r}:", tok.line, tok.col)
        return self.prefixes[prefix] + local


def parse(text: str) -> tuple[dict[str, str], list[Statement]]:
    """Parse Turtle text into (prefixes, statements)."""
    return _Parser(_tokenize(text)).parse()

"""Executable RML mapping graph: data model, Turtle output, Turtle input.

The graph is deliberately structural (no RDF node identities), so equality
is independent of blank node labels. Function-valued term maps are written
with a small Function-Ontology-style extension vocabulary and always carry
a plain fallback reference/template, so engines that ignore the extension
still produce the raw value.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import quote, unquote

from . import turtle
from .errors import DanglingJoinError, UnsupportedFeatureError
from .terms import (
    Iri,
    Literal,
    RDF_TYPE,
    XSD_STRING,
    check_absolute_iri,
    escape_literal,
)

RR = "http://www.w3.org/ns/r2rml#"
RML = "http://semweb.mmlab.be/ns/rml#"
QL = "http://semweb.mmlab.be/ns/ql#"
FNX = "https://w3id.org/glam2rdf/fnx#"
MAP_NS = "urn:tmap:"

# Namespaces the serializer owns; they never appear in RmlGraph.prefixes.
_INFRA_NAMESPACES = {RR, RML, QL, FNX, MAP_NS}
_INFRA_LABELS = {"rr", "rml", "ql", "fnx", "map"}

IRI = "iri"
LITERAL = "literal"
BLANK = "blank"

_TERM_TYPES = (IRI, LITERAL, BLANK)
_KINDS = ("constant", "reference", "template", "function", "blank")

_TEMPLATE_PLACEHOLDER_RE = re.compile(r"\{([^{}]+)\}")


@dataclass(frozen=True)
class TermMap:
    """One term generation rule.

    kind 'constant' uses ``constant``; 'reference' and 'template' use
    ``value``; 'function' uses ``value`` for the registry name plus ``args``;
    kind 'blank' has no payload and yields a row-derived blank node.
    """

    kind: str
    value: str = ""
    constant: Iri | Literal | None = None
    args: tuple["TermMap", ...] = ()
    term_type: str = LITERAL
    datatype: str | None = None
    language: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown term map kind: {self.kind!r}")
        if self.term_type not in _TERM_TYPES:
            raise ValueError(f"unknown term type: {self.term_type!r}")
        if self.datatype is not None and self.language is not None:
            raise ValueError("datatype and language are mutually exclusive")
        if (self.datatype or self.language) and self.term_type != LITERAL:
            raise ValueError("datatype/language require a literal term type")
        if self.kind == "constant" and self.constant is None:
            raise ValueError("constant term map needs a term")
        if self.kind == "template" and not _TEMPLATE_PLACEHOLDER_RE.search(self.value):
            raise ValueError(f"template has no {{column}} placeholder: {self.value!r}")
        if self.kind == "function" and not self.value:
            raise ValueError("function term map needs a function name")
        if self.args and self.kind != "function":
            raise ValueError("only function term maps take arguments")
        if self.kind == "blank" and self.term_type != BLANK:
            raise ValueError("kind 'blank' requires term type 'blank'")
        if self.datatype is not None:
            check_absolute_iri(self.datatype, "term map datatype")

    def template_columns(self) -> list[str]:
        return _TEMPLATE_PLACEHOLDER_RE.findall(self.value)


@dataclass(frozen=True)
class JoinCondition:
    child: str
    parent: str


@dataclass(frozen=True)
class RefObjectMap:
    parent: str
    conditions: tuple[JoinCondition, ...]

    def __post_init__(self):
        if not self.conditions:
            raise UnsupportedFeatureError(
                f"referencing object map to {self.parent!r} has no join condition"
            )


@dataclass(frozen=True)
class PredicateObjectMap:
    predicate: TermMap
    object: TermMap | RefObjectMap


@dataclass(frozen=True)
class TriplesMap:
    id: str
    source_id: str
    subject: TermMap
    classes: tuple[str, ...] = ()
    predicate_object_maps: tuple[PredicateObjectMap, ...] = ()
    formulation: str = "csv"

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(sorted(self.classes)))
        if self.subject.term_type == LITERAL:
            raise ValueError(f"subject map of {self.id!r} cannot be a literal")
        if self.formulation != "csv":
            raise UnsupportedFeatureError(
                f"reference formulation {self.formulation!r} is not supported"
            )
        for iri in self.classes:
            check_absolute_iri(iri, f"class of triples map {self.id!r}")


@dataclass(frozen=True, eq=True)
class RmlGraph:
    triples_maps: tuple[TriplesMap, ...]
    prefixes: dict[str, str]

    def __post_init__(self):
        object.__setattr__(
            self, "triples_maps", tuple(sorted(self.triples_maps, key=lambda t: t.id))
        )
        ids = [tm.id for tm in self.triples_maps]
        if len(set(ids)) != len(ids):
            raise ValueError("triples map ids must be unique")
        known = set(ids)
        for tm in self.triples_maps:
            for pom in tm.predicate_object_maps:
                if isinstance(pom.object, RefObjectMap) and pom.object.parent not in known:
                    raise DanglingJoinError(
                        f"triples map {tm.id!r} joins to unknown map {pom.object.parent!r}"
                    )
        object.__setattr__(self, "prefixes", {
            label: iri for label, iri in self.prefixes.items()
            if iri not in _INFRA_NAMESPACES
        })

    __hash__ = None

    def by_id(self, map_id: str) -> TriplesMap:
        for tm in self.triples_maps:
            if tm.id == map_id:
                return tm
        raise KeyError(map_id)

    def function_names(self) -> set[str]:
        names: set[str] = set()

        def walk(tm: TermMap) -> None:
            if tm.kind == "function":
                names.add(tm.value)
                for arg in tm.args:
                    walk(arg)

        for tmap in self.triples_maps:
            walk(tmap.subject)
            for pom in tmap.predicate_object_maps:
                walk(pom.predicate)
                if isinstance(pom.object, TermMap):
                    walk(pom.object)
        return names


# --- serialization -----------------------------------------------------------

_PN_LOCAL_RE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?$")
_MAP_ID_SAFE = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-"


def _map_iri(map_id: str) -> str:
    return MAP_NS + quote(map_id, safe=_MAP_ID_SAFE)


def _fmt_literal(lexical: str, datatype: str | None = None, language: str | None = None) -> str:
    quoted = f'"{escape_literal(lexical)}"'
    if language:
        return f"{quoted}@{language}"
    if datatype and datatype != XSD_STRING:
        return f"{quoted}^^<{datatype}>"
    return quoted


class _TurtleWriter:
    def __init__(self, prefixes: dict[str, str]):
        # Longest namespace wins when compacting; doc labels that shadow the
        # infrastructure ones are dropped rather than emitted twice.
        self.prefixes = {"rr": RR, "rml": RML, "ql": QL, "map": MAP_NS}
        for label, iri in sorted(prefixes.items()):
            if label not in _INFRA_LABELS:
                self.prefixes[label] = iri
        self.used_fnx = False

    def pname(self, iri: str) -> str:
        candidates = [
            (label, ns) for label, ns in self.prefixes.items() if iri.startswith(ns)
        ]
        if self.used_fnx and iri.startswith(FNX):
            candidates.append(("fnx", FNX))
        best = max(candidates, key=lambda c: len(c[1]), default=None)
        if best is not None:
            local = iri[len(best[1]):]
            if _PN_LOCAL_RE.match(local):
                return f"{best[0]}:{local}"
        return f"<{iri}>"

    def term_map_props(self, tm: TermMap, default_tt: str) -> list[str]:
        props: list[str] = []
        if tm.kind == "constant":
            if isinstance(tm.constant, Iri):
                props.append(f"rr:constant {self.pname(tm.constant.value)}")
            else:
                props.append(
                    "rr:constant "
                    + _fmt_literal(tm.constant.lexical, tm.constant.datatype, tm.constant.language)
                )
        elif tm.kind == "reference":
            props.append(f"rml:reference {_fmt_literal(tm.value)}")
        elif tm.kind == "template":
            props.append(f"rr:template {_fmt_literal(tm.value)}")
        elif tm.kind == "function":
            self.used_fnx = True
            props.append(f"fnx:function {_fmt_literal(tm.value)}")
            for i, arg in enumerate(tm.args):
                inner = self.term_map_props(arg, LITERAL)
                body = " ; ".join([f"fnx:index {i}"] + inner)
                props.append(f"fnx:argument [ {body} ]")
            fallback = _first_fallback(tm.args)
            if fallback is not None:
                if fallback.kind == "reference":
                    props.append(f"rml:reference {_fmt_literal(fallback.value)}")
                else:
                    props.append(f"rr:template {_fmt_literal(fallback.value)}")
        if tm.term_type != default_tt and tm.kind != "constant":
            tt = {"iri": "rr:IRI", "literal": "rr:Literal", "blank": "rr:BlankNode"}[tm.term_type]
            props.append(f"rr:termType {tt}")
        if tm.datatype:
            props.append(f"rr:datatype {self.pname(tm.datatype)}")
        if tm.language:
            props.append(f"rr:language {_fmt_literal(tm.language)}")
        return props


def _first_fallback(args: tuple[TermMap, ...]) -> TermMap | None:
    for arg in args:
        if arg.kind in ("reference", "template"):
            return arg
    return None


def serialize_rml_turtle(graph: RmlGraph) -> str:
    """Write the graph as deterministic Turtle (maps sorted by id)."""
    writer = _TurtleWriter(graph.prefixes)

    blocks: list[str] = []
    for tm in graph.triples_maps:
        lines = [f"{writer.pname(_map_iri(tm.id))} a rr:TriplesMap ;"]
        lines.append(
            f"    rml:logicalSource [ rml:source {_fmt_literal(tm.source_id)} ; "
            "rml:referenceFormulation ql:CSV ] ;"
        )
        subj_props = writer.term_map_props(tm.subject, IRI)
        subj_props += [f"rr:class {writer.pname(c)}" for c in tm.classes]
        sep = " ;\n        "
        lines.append(f"    rr:subjectMap [ {sep.join(subj_props)} ]" +
                     (" ;" if tm.predicate_object_maps else " ."))
        for i, pom in enumerate(tm.predicate_object_maps):
            parts: list[str] = []
            if pom.predicate.kind == "constant" and isinstance(pom.predicate.constant, Iri):
                parts.append(f"rr:predicate {writer.pname(pom.predicate.constant.value)}")
            else:
                pprops = writer.term_map_props(pom.predicate, IRI)
                parts.append(f"rr:predicateMap [ {' ; '.join(pprops)} ]")
            if isinstance(pom.object, RefObjectMap):
                oprops = [f"rr:parentTriplesMap {writer.pname(_map_iri(pom.object.parent))}"]
                for cond in pom.object.conditions:
                    oprops.append(
                        f"rr:joinCondition [ rr:child {_fmt_literal(cond.child)} ; "
                        f"rr:parent {_fmt_literal(cond.parent)} ]"
                    )
                parts.append(f"rr:objectMap [ {' ; '.join(oprops)} ]")
            else:
                oprops = writer.term_map_props(pom.object, LITERAL)
                parts.append(f"rr:objectMap [ {' ; '.join(oprops)} ]")
            terminator = " ;" if i + 1 < len(tm.predicate_object_maps) else " ."
            body = " ;\n        ".join(parts)
            lines.append(f"    rr:predicateObjectMap [\n        {body}\n    ]{terminator}")
        blocks.append("\n".join(lines))

    header = [f"@prefix map: <{MAP_NS}> ."]
    header.append(f"@prefix rr: <{RR}> .")
    header.append(f"@prefix rml: <{RML}> .")
    header.append(f"@prefix ql: <{QL}> .")
    if writer.used_fnx:
        header.append(f"@prefix fnx: <{FNX}> .")
    for label, iri in sorted(graph.prefixes.items()):
        if label not in _INFRA_LABELS:
            header.append(f"@prefix {label}: <{iri}> .")
    return "\n".join(header) + "\n\n" + "\n\n".join(blocks) + ("\n" if blocks else "")


# --- parsing -----------------------------------------------------------------

class _SoupGraph:
    """Index over the turtle triple soup with ordered object lists."""

    def __init__(self, statements: list[turtle.Statement]):
        self.spo: dict[turtle.Node, dict[str, list[turtle.Node]]] = {}
        for s, p, o in statements:
            self.spo.setdefault(s, {}).setdefault(p[1], []).append(o)

    def objects(self, subject: turtle.Node, predicate: str) -> list[turtle.Node]:
        return self.spo.get(subject, {}).get(predicate, [])

    def one(self, subject: turtle.Node, predicate: str) -> turtle.Node | None:
        values = self.objects(subject, predicate)
        if len(values) > 1:
            raise UnsupportedFeatureError(
                f"multiple values for <{predicate}> on one node"
            )
        return values[0] if values else None

    def predicates(self, subject: turtle.Node) -> set[str]:
        return set(self.spo.get(subject, {}))


def _lit_value(node: turtle.Node | None, what: str) -> str | None:
    if node is None:
        return None
    if node[0] != "lit":
        raise UnsupportedFeatureError(f"{what} must be a literal")
    return node[1]


def _iri_value(node: turtle.Node, what: str) -> str:
    if node[0] != "iri":
        raise UnsupportedFeatureError(f"{what} must be an IRI")
    return node[1]


_TERMTYPE_BY_IRI = {
    RR + "IRI": IRI,
    RR + "Literal": LITERAL,
    RR + "BlankNode": BLANK,
}

# Predicates understood on a plain (non-referencing) term map node.
_TERM_MAP_PREDS = {
    RR + "constant", RML + "reference", RR + "template",
    RR + "termType", RR + "datatype", RR + "language", RR + "class",
    FNX + "function", FNX + "argument", FNX + "index",
    RDF_TYPE,
}

_TRIPLES_MAP_PREDS = {
    RML + "logicalSource", RR + "subject", RR + "subjectMap",
    RR + "predicateObjectMap", RDF_TYPE,
}

_POM_PREDS = {
    RR + "predicate", RR + "predicateMap", RR + "object", RR + "objectMap",
    RDF_TYPE,
}


def _reject_unknown(g: "_SoupGraph", node: turtle.Node, allowed: set[str], where: str) -> None:
    for pred in g.predicates(node):
        if (pred.startswith(RR) or pred.startswith(RML) or pred.startswith(FNX)) \
                and pred not in allowed:
            raise UnsupportedFeatureError(f"{where}: unsupported property <{pred}>")


def _parse_term_map(g: _SoupGraph, node: turtle.Node, default_tt: str, where: str) -> TermMap:
    if node[0] == "iri":
        # Constant shortcut object/predicate position.
        return TermMap(kind="constant", constant=Iri(node[1]), term_type=IRI)
    if node[0] == "lit":
        return TermMap(
            kind="constant",
            constant=Literal(node[1], node[2] or XSD_STRING, node[3]),
            term_type=LITERAL,
        )

    _reject_unknown(g, node, _TERM_MAP_PREDS, where)

    tt_node = g.one(node, RR + "termType")
    term_type = None
    if tt_node is not None:
        iri = _iri_value(tt_node, "rr:termType")
        if iri not in _TERMTYPE_BY_IRI:
            raise UnsupportedFeatureError(f"unsupported term type <{iri}> in {where}")
        term_type = _TERMTYPE_BY_IRI[iri]

    datatype = None
    dt_node = g.one(node, RR + "datatype")
    if dt_node is not None:
        datatype = _iri_value(dt_node, "rr:datatype")
    language = _lit_value(g.one(node, RR + "language"), "rr:language")

    fn_name = _lit_value(g.one(node, FNX + "function"), "fnx:function")
    if fn_name is not None:
        arg_nodes = g.objects(node, FNX + "argument")
        indexed = []
        for arg_node in arg_nodes:
            idx = _lit_value(g.one(arg_node, FNX + "index"), "fnx:index")
            if idx is None:
                raise UnsupportedFeatureError(f"function argument without index in {where}")
            indexed.append((int(idx), arg_node))
        indexed.sort(key=lambda pair: pair[0])
        args = []
        for _, arg_node in indexed:
            # The index predicate is stripped before recursing.
            args.append(_parse_function_arg(g, arg_node, where))
        return TermMap(
            kind="function",
            value=fn_name,
            args=tuple(args),
            term_type=term_type or default_tt,
            datatype=datatype,
            language=language,
        )

    constant = g.one(node, RR + "constant")
    reference = _lit_value(g.one(node, RML + "reference"), "rml:reference")
    template = _lit_value(g.one(node, RR + "template"), "rr:template")

    present = [x is not None for x in (constant, reference, template)]
    if sum(present) > 1:
        raise UnsupportedFeatureError(f"conflicting term map payloads in {where}")
    if constant is not None:
        if constant[0] == "iri":
            return TermMap(kind="constant", constant=Iri(constant[1]), term_type=IRI,
                           datatype=datatype, language=language)
        if constant[0] == "lit":
            return TermMap(
                kind="constant",
                constant=Literal(constant[1], constant[2] or XSD_STRING, constant[3]),
                term_type=LITERAL,
            )
        raise UnsupportedFeatureError(f"blank node constant in {where}")
    if reference is not None:
        return TermMap(kind="reference", value=reference,
                       term_type=term_type or default_tt,
                       datatype=datatype, language=language)
    if template is not None:
        return TermMap(kind="template", value=template,
                       term_type=term_type or default_tt,
                       datatype=datatype, language=language)
    if term_type == BLANK:
        return TermMap(kind="blank", term_type=BLANK)
    raise UnsupportedFeatureError(f"term map without payload in {where}")


def _parse_function_arg(g: _SoupGraph, node: turtle.Node, where: str) -> TermMap:
    reference = _lit_value(g.one(node, RML + "reference"), "rml:reference")
    template = _lit_value(g.one(node, RR + "template"), "rr:template")
    constant = g.one(node, RR + "constant")
    fn = _lit_value(g.one(node, FNX + "function"), "fnx:function")
    if fn is not None:
        return _parse_term_map(g, node, LITERAL, where)
    if reference is not None:
        return TermMap(kind="reference", value=reference)
    if template is not None:
        return TermMap(kind="template", value=template)
    if constant is not None:
        if constant[0] == "iri":
            return TermMap(kind="constant", constant=Iri(constant[1]), term_type=IRI)
        return TermMap(kind="constant",
                       constant=Literal(constant[1], constant[2] or XSD_STRING, constant[3]))
    raise UnsupportedFeatureError(f"function argument without payload in {where}")


def _map_id_from_iri(iri: str) -> str:
    if iri.startswith(MAP_NS):
        return unquote(iri[len(MAP_NS):])
    return iri


def parse_rml_turtle(text: str) -> RmlGraph:
    """Parse RML Turtle limited to CSV logical sources and the term-map
    subset written by serialize_rml_turtle."""
    prefixes, statements = turtle.parse(text)
    g = _SoupGraph(statements)

    tm_nodes = [s for s, _, _ in _unique_subjects(statements)
                if g.objects(s, RML + "logicalSource")]
    if not tm_nodes:
        # Still accept empty documents (prefix-only files).
        pass

    maps = []
    bnode_ids = 0
    for node in tm_nodes:
        if node[0] == "iri":
            map_id = _map_id_from_iri(node[1])
        else:
            bnode_ids += 1
            map_id = f"anonymous_{bnode_ids}"
        where = f"triples map {map_id!r}"
        _reject_unknown(g, node, _TRIPLES_MAP_PREDS, where)

        ls = g.one(node, RML + "logicalSource")
        if ls is None or ls[0] == "lit":
            raise UnsupportedFeatureError(f"{where}: bad logical source")
        source = _lit_value(g.one(ls, RML + "source"), "rml:source")
        if source is None:
            raise UnsupportedFeatureError(f"{where}: logical source without rml:source")
        formulation = g.one(ls, RML + "referenceFormulation")
        if formulation is not None:
            f_iri = _iri_value(formulation, "rml:referenceFormulation")
            if f_iri != QL + "CSV":
                raise UnsupportedFeatureError(
                    f"{where}: reference formulation <{f_iri}> is not supported"
                )
        for pred in g.predicates(ls):
            if pred not in (RML + "source", RML + "referenceFormulation"):
                raise UnsupportedFeatureError(f"{where}: unsupported logical source "
                                              f"property <{pred}>")

        subj_shortcut = g.one(node, RR + "subject")
        subj_node = g.one(node, RR + "subjectMap")
        classes: list[str] = []
        if subj_shortcut is not None and subj_node is not None:
            raise UnsupportedFeatureError(f"{where}: both rr:subject and rr:subjectMap")
        if subj_shortcut is not None:
            subject = TermMap(kind="constant",
                              constant=Iri(_iri_value(subj_shortcut, "rr:subject")),
                              term_type=IRI)
        elif subj_node is not None:
            subject = _parse_term_map(g, subj_node, IRI, where + " subject")
            classes = [_iri_value(c, "rr:class") for c in g.objects(subj_node, RR + "class")]
        else:
            raise UnsupportedFeatureError(f"{where}: no subject map")

        poms: list[PredicateObjectMap] = []
        for pom_node in g.objects(node, RR + "predicateObjectMap"):
            _reject_unknown(g, pom_node, _POM_PREDS, where + " predicate-object map")
            predicates = [
                TermMap(kind="constant", constant=Iri(_iri_value(p, "rr:predicate")),
                        term_type=IRI)
                for p in g.objects(pom_node, RR + "predicate")
            ]
            predicates += [
                _parse_term_map(g, p, IRI, where + " predicate map")
                for p in g.objects(pom_node, RR + "predicateMap")
            ]
            objects: list[TermMap | RefObjectMap] = []
            for o in g.objects(pom_node, RR + "object"):
                objects.append(_parse_term_map(g, o, LITERAL, where + " object"))
            for o_node in g.objects(pom_node, RR + "objectMap"):
                parent = g.one(o_node, RR + "parentTriplesMap")
                if parent is not None:
                    conditions = []
                    for jc in g.objects(o_node, RR + "joinCondition"):
                        child = _lit_value(g.one(jc, RR + "child"), "rr:child")
                        par = _lit_value(g.one(jc, RR + "parent"), "rr:parent")
                        if child is None or par is None:
                            raise UnsupportedFeatureError(
                                f"{where}: join condition needs rr:child and rr:parent"
                            )
                        conditions.append(JoinCondition(child=child, parent=par))
                    objects.append(RefObjectMap(
                        parent=_map_id_from_iri(_iri_value(parent, "rr:parentTriplesMap")),
                        conditions=tuple(conditions),
                    ))
                else:
                    objects.append(_parse_term_map(g, o_node, LITERAL, where + " object map"))
            if not predicates or not objects:
                raise UnsupportedFeatureError(f"{where}: predicate-object map needs both sides")
            for p in predicates:
                for o in objects:
                    poms.append(PredicateObjectMap(predicate=p, object=o))

        maps.append(TriplesMap(
            id=map_id,
            source_id=source,
            subject=subject,
            classes=tuple(classes),
            predicate_object_maps=tuple(poms),
        ))

    doc_prefixes = {
        label: iri for label, iri in prefixes.items()
        if iri not in _INFRA_NAMESPACES and label not in _INFRA_LABELS
    }
    return RmlGraph(triples_maps=tuple(maps), prefixes=doc_prefixes)


def _unique_subjects(statements: list[turtle.Statement]) -> list[turtle.Statement]:
    seen: set[turtle.Node] = set()
    out = []
    for stmt in statements:
        if stmt[0] not in seen:
            seen.add(stmt[0])
            out.append(stmt)
    return out

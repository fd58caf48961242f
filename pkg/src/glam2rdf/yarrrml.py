"""YARRRML subset: document model, YAML parsing/serialization, RML translation.

Supported constructs: ``prefixes``; ``mappings`` (alias ``mapping``); per
mapping ``sources`` (shorthand ``[file~csv]``, bare string, or long form
with ``access``/``referenceFormulation``), ``s``/``subject``,
``po``/``predicateobjects`` as ``[p, o]`` pairs or long form with
``p``/``predicate``, ``o``/``object``, ``datatype``, ``language``, ``type``,
``function``/``parameters``, and ``condition`` with ``equal`` for joins.
``$(col)`` alone makes a reference, embedded in other text a template; a
``~iri`` suffix forces an IRI term. Anything else is rejected with a named
UnsupportedFeatureError.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import yaml

from .errors import (
    UnknownPrefixError,
    UnsupportedFeatureError,
    YamlSyntaxError,
    YarrrmlFormatError,
)
from .rml import (
    BLANK,
    IRI,
    LITERAL,
    JoinCondition,
    PredicateObjectMap,
    RefObjectMap,
    RmlGraph,
    TermMap,
    TriplesMap,
)
from .terms import Iri, Literal, XSD_STRING, is_absolute_iri

_REFERENCE_RE = re.compile(r"\$\(([^()]+)\)")
_BRACE_RE = re.compile(r"\{([^{}]+)\}")

# Schemes accepted as full IRIs without a declared prefix; anything else
# colon-shaped is treated as a CURIE.
_IRI_HINTS = ("http://", "https://", "urn:", "mailto:", "file://", "ftp://", "tel:", "data:")


@dataclass(frozen=True)
class TermSpec:
    kind: str  # constant | reference | template | function_call
    value: str
    args: tuple["TermSpec", ...] = ()
    term_type: str = LITERAL
    datatype: str | None = None
    language: str | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "reference", "template", "function_call"):
            raise ValueError(f"unknown term spec kind: {self.kind!r}")
        if self.datatype is not None and self.language is not None:
            raise ValueError("datatype and language are mutually exclusive")
        if (self.datatype or self.language) and self.term_type != LITERAL:
            raise ValueError("datatype/language require a literal term type")
        if self.kind == "template" and not (
            _REFERENCE_RE.search(self.value) or _BRACE_RE.search(self.value)
        ):
            raise ValueError(f"template has no placeholder: {self.value!r}")
        if self.kind == "constant" and "$(" in self.value:
            raise ValueError(f"constant value may not contain '$(': {self.value!r}")
        if self.args and self.kind != "function_call":
            raise ValueError("only function calls take arguments")


@dataclass(frozen=True)
class JoinSpec:
    parent: str
    conditions: tuple[tuple[str, str], ...]  # (child column, parent column)


@dataclass(frozen=True)
class PoEntry:
    predicate: str  # curie-or-IRI text
    object: TermSpec | JoinSpec


@dataclass(frozen=True)
class YarrrmlMapping:
    sources: tuple[tuple[str, str], ...]  # (source id, reference formulation)
    subject: TermSpec
    classes: tuple[str, ...] = ()
    po: tuple[PoEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(sorted(self.classes)))
        if not self.sources:
            raise YarrrmlFormatError("mapping needs at least one source")


@dataclass(frozen=True, eq=True)
class YarrrmlDocument:
    prefixes: dict[str, str]
    mappings: dict[str, YarrrmlMapping]

    def __post_init__(self):
        for label, iri in self.prefixes.items():
            if not is_absolute_iri(iri):
                raise YarrrmlFormatError(
                    f"namespace for prefix {label!r} is not absolute: {iri!r}"
                )

    __hash__ = None


# --- CURIE handling ----------------------------------------------------------

def expand_curie(text: str, prefixes: dict[str, str], where: str) -> str:
    """Expand a CURIE against the prefix map or pass an absolute IRI through."""
    if text.startswith(_IRI_HINTS):
        return text
    m = re.match(r"^([A-Za-z][A-Za-z0-9_.\-]*):(.*)$", text)
    if m and m.group(1) in prefixes:
        return prefixes[m.group(1)] + m.group(2)
    if m:
        raise UnknownPrefixError(f"{where}: undeclared prefix {m.group(1)!r} in {text!r}")
    raise UnknownPrefixError(f"{where}: not a CURIE or absolute IRI: {text!r}")


def _check_curie(text: str, prefixes: dict[str, str], where: str) -> None:
    expand_curie(text, prefixes, where)


# --- parsing -------------------------------------------------------------------

def _scalar(value: object) -> str:
    # Hand-written YAML may leave booleans/numbers untyped.
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _term_from_text(
    raw: object,
    prefixes: dict[str, str],
    where: str,
    *,
    iri_position: bool = False,
    datatype: str | None = None,
    language: str | None = None,
    term_type: str | None = None,
) -> TermSpec:
    text = _scalar(raw)
    if text.endswith("~iri"):
        term_type = IRI
        text = text[: -len("~iri")]
    elif text.endswith("~literal"):
        term_type = LITERAL
        text = text[: -len("~literal")]

    refs = _REFERENCE_RE.findall(text)
    if refs:
        tt = term_type or (IRI if iri_position else LITERAL)
        dt = datatype if tt == LITERAL else None
        lang = language if tt == LITERAL else None
        if re.fullmatch(r"\$\([^()]+\)", text):
            return TermSpec(kind="reference", value=refs[0], term_type=tt,
                            datatype=dt, language=lang)
        return TermSpec(kind="template", value=text, term_type=tt,
                        datatype=dt, language=lang)

    tt = term_type or (IRI if iri_position else LITERAL)
    if tt == IRI:
        _check_curie(text, prefixes, where)
        return TermSpec(kind="constant", value=text, term_type=IRI)
    return TermSpec(kind="constant", value=text, term_type=LITERAL,
                    datatype=datatype, language=language)


_TERMTYPE_NAMES = {"iri": IRI, "literal": LITERAL, "blank": BLANK}


def _parse_source(raw: object, where: str) -> tuple[str, str]:
    if isinstance(raw, list):
        if len(raw) != 1:
            raise UnsupportedFeatureError(
                f"{where}: source shorthand with {len(raw)} entries (iterators are "
                "not supported)"
            )
        raw = raw[0]
    if isinstance(raw, str):
        access, tilde, formulation = raw.partition("~")
        formulation = formulation if tilde else "csv"
    elif isinstance(raw, dict):
        unknown = set(raw) - {"access", "referenceFormulation"}
        if unknown:
            raise UnsupportedFeatureError(f"{where}: unsupported source keys {sorted(unknown)}")
        access = raw.get("access")
        formulation = raw.get("referenceFormulation", "csv")
        if not isinstance(access, str):
            raise YarrrmlFormatError(f"{where}: source needs an 'access' string")
    else:
        raise YarrrmlFormatError(f"{where}: bad source entry {raw!r}")
    if formulation.casefold() != "csv":
        raise UnsupportedFeatureError(
            f"{where}: reference formulation {formulation!r} is not supported"
        )
    return access, "csv"


def _parse_condition(raw: object, where: str) -> list[tuple[str, str]]:
    conditions = raw if isinstance(raw, list) else [raw]
    out: list[tuple[str, str]] = []
    for cond in conditions:
        if not isinstance(cond, dict) or cond.get("function") != "equal":
            raise UnsupportedFeatureError(f"{where}: only 'equal' join conditions are supported")
        params = cond.get("parameters")
        if not isinstance(params, list) or len(params) != 2:
            raise YarrrmlFormatError(f"{where}: condition needs two parameters")
        values: dict[str, str] = {}
        for param in params:
            if not isinstance(param, list) or len(param) != 2:
                raise YarrrmlFormatError(f"{where}: condition parameter must be a [name, value] pair")
            name, value = param
            m = re.fullmatch(r"\$\(([^()]+)\)", _scalar(value))
            if not m:
                raise UnsupportedFeatureError(
                    f"{where}: join condition value must be a $(column) reference"
                )
            values[_scalar(name)] = m.group(1)
        if set(values) != {"str1", "str2"}:
            raise YarrrmlFormatError(f"{where}: condition parameters must be str1 and str2")
        out.append((values["str1"], values["str2"]))
    return out


def _parse_function_object(
    raw: dict, prefixes: dict[str, str], where: str,
    datatype: str | None, language: str | None, term_type: str | None,
) -> TermSpec:
    unknown = set(raw) - {"function", "parameters", "type", "datatype", "language"}
    if unknown:
        raise UnsupportedFeatureError(f"{where}: unsupported function keys {sorted(unknown)}")
    name = _scalar(raw["function"])
    params = raw.get("parameters", [])
    if not isinstance(params, list):
        raise YarrrmlFormatError(f"{where}: parameters must be a list")
    args = []
    for param in params:
        if isinstance(param, list):
            if len(param) != 2:
                raise YarrrmlFormatError(f"{where}: parameter pair must be [name, value]")
            param = param[1]
        args.append(_term_from_text(param, prefixes, where))
    datatype = raw.get("datatype", datatype)
    language = raw.get("language", language)
    if "type" in raw:
        term_type = _TERMTYPE_NAMES.get(_scalar(raw["type"]))
        if term_type is None:
            raise YarrrmlFormatError(f"{where}: unknown term type {raw['type']!r}")
    tt = term_type or LITERAL
    return TermSpec(
        kind="function_call",
        value=name,
        args=tuple(args),
        term_type=tt,
        datatype=datatype if tt == LITERAL else None,
        language=language if tt == LITERAL else None,
    )


def _parse_po_entry(
    raw: object, prefixes: dict[str, str], where: str
) -> tuple[str, TermSpec | JoinSpec]:
    """Returns (predicate text, object). Class entries are extracted later."""
    if isinstance(raw, list):
        if len(raw) != 2:
            raise UnsupportedFeatureError(
                f"{where}: po shorthand must be a [predicate, object] pair"
            )
        pred_raw, obj_raw = raw
        predicate = _scalar(pred_raw)
        if predicate != "a":
            _check_curie(predicate, prefixes, where)
        obj = _term_from_text(obj_raw, prefixes, where,
                              iri_position=(predicate == "a"))
        return predicate, obj

    if not isinstance(raw, dict):
        raise YarrrmlFormatError(f"{where}: bad po entry {raw!r}")
    keys = set(raw)
    unknown = keys - {"p", "predicate", "o", "object", "datatype", "language", "type"}
    if unknown:
        raise UnsupportedFeatureError(f"{where}: unsupported po keys {sorted(unknown)}")
    pred_raw = raw.get("p", raw.get("predicate"))
    obj_raw = raw.get("o", raw.get("object"))
    if pred_raw is None or obj_raw is None:
        raise YarrrmlFormatError(f"{where}: po entry needs a predicate and an object")
    if isinstance(pred_raw, list):
        raise UnsupportedFeatureError(f"{where}: multiple predicates per entry")
    predicate = _scalar(pred_raw)
    if predicate != "a":
        _check_curie(predicate, prefixes, where)

    datatype = raw.get("datatype")
    language = raw.get("language")
    term_type = None
    if "type" in raw:
        term_type = _TERMTYPE_NAMES.get(_scalar(raw["type"]))
        if term_type is None:
            raise YarrrmlFormatError(f"{where}: unknown term type {raw['type']!r}")

    if isinstance(obj_raw, dict):
        if "mapping" in obj_raw:
            unknown = set(obj_raw) - {"mapping", "condition"}
            if unknown:
                raise UnsupportedFeatureError(f"{where}: unsupported join keys {sorted(unknown)}")
            if "condition" not in obj_raw:
                raise UnsupportedFeatureError(f"{where}: mapping reference without condition")
            conditions = _parse_condition(obj_raw["condition"], where)
            return predicate, JoinSpec(parent=_scalar(obj_raw["mapping"]),
                                       conditions=tuple(conditions))
        if "function" in obj_raw:
            return predicate, _parse_function_object(
                obj_raw, prefixes, where, datatype, language, term_type
            )
        unknown = set(obj_raw) - {"value", "datatype", "language", "type"}
        if unknown:
            raise UnsupportedFeatureError(f"{where}: unsupported object keys {sorted(unknown)}")
        if "value" not in obj_raw:
            raise YarrrmlFormatError(f"{where}: object needs a value")
        datatype = obj_raw.get("datatype", datatype)
        language = obj_raw.get("language", language)
        if "type" in obj_raw:
            term_type = _TERMTYPE_NAMES.get(_scalar(obj_raw["type"]))
            if term_type is None:
                raise YarrrmlFormatError(f"{where}: unknown term type {obj_raw['type']!r}")
        obj_raw = obj_raw["value"]

    if isinstance(obj_raw, list):
        raise UnsupportedFeatureError(f"{where}: multiple objects per entry")
    obj = _term_from_text(
        obj_raw, prefixes, where,
        iri_position=(predicate == "a"),
        datatype=datatype, language=language, term_type=term_type,
    )
    return predicate, obj


def parse_yarrrml(text: str) -> YarrrmlDocument:
    """Parse YARRRML YAML text into a document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise YamlSyntaxError(f"invalid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise YarrrmlFormatError("YARRRML document must be a mapping")

    unknown = set(raw) - {"prefixes", "mappings", "mapping"}
    if unknown:
        raise UnsupportedFeatureError(
            f"unsupported document keys {sorted(unknown)} (subset: prefixes, mappings)"
        )
    prefixes_raw = raw.get("prefixes", {}) or {}
    if not isinstance(prefixes_raw, dict):
        raise YarrrmlFormatError("'prefixes' must be a mapping")
    prefixes = {_scalar(k): _scalar(v) for k, v in prefixes_raw.items()}

    mappings_raw = raw.get("mappings", raw.get("mapping", {})) or {}
    if not isinstance(mappings_raw, dict):
        raise YarrrmlFormatError("'mappings' must be a mapping of id to rules")

    mappings: dict[str, YarrrmlMapping] = {}
    for map_id_raw, body in mappings_raw.items():
        map_id = _scalar(map_id_raw)
        where = f"mappings.{map_id}"
        if not isinstance(body, dict):
            raise YarrrmlFormatError(f"{where}: mapping body must be a mapping")
        unknown = set(body) - {"sources", "s", "subject", "po", "predicateobjects"}
        if unknown:
            raise UnsupportedFeatureError(f"{where}: unsupported keys {sorted(unknown)}")

        sources_raw = body.get("sources")
        if not isinstance(sources_raw, list) or not sources_raw:
            raise YarrrmlFormatError(f"{where}: 'sources' must be a non-empty list")
        sources = tuple(_parse_source(s, f"{where}.sources") for s in sources_raw)

        subject_raw = body.get("s", body.get("subject"))
        if subject_raw is None:
            raise YarrrmlFormatError(f"{where}: missing subject")
        if isinstance(subject_raw, (dict, list)):
            raise UnsupportedFeatureError(f"{where}: structured subjects are not supported")
        subject = _term_from_text(subject_raw, prefixes, f"{where}.s", iri_position=True)

        po_raw = body.get("po", body.get("predicateobjects", [])) or []
        if not isinstance(po_raw, list):
            raise YarrrmlFormatError(f"{where}: 'po' must be a list")
        classes: list[str] = []
        po: list[PoEntry] = []
        for i, entry in enumerate(po_raw):
            predicate, obj = _parse_po_entry(entry, prefixes, f"{where}.po[{i}]")
            if predicate == "a":
                if not (isinstance(obj, TermSpec) and obj.kind == "constant"
                        and obj.term_type == IRI):
                    raise UnsupportedFeatureError(
                        f"{where}.po[{i}]: class objects must be constant IRIs"
                    )
                classes.append(obj.value)
            else:
                po.append(PoEntry(predicate=predicate, object=obj))

        mappings[map_id] = YarrrmlMapping(
            sources=sources,
            subject=subject,
            classes=tuple(classes),
            po=tuple(po),
        )
    return YarrrmlDocument(prefixes=prefixes, mappings=mappings)


# --- serialization --------------------------------------------------------------

class _FlowList(list):
    """Rendered in YAML flow style: [a, b]."""


class _YarrrmlDumper(yaml.SafeDumper):
    pass


_YarrrmlDumper.add_representer(
    _FlowList,
    lambda dumper, data: dumper.represent_sequence(
        "tag:yaml.org,2002:seq", data, flow_style=True
    ),
)


def _term_text(spec: TermSpec, *, iri_position: bool = False) -> str:
    if spec.kind == "reference":
        text = f"$({spec.value})"
    elif spec.kind == "template":
        text = spec.value
    else:
        text = spec.value
    default_tt = IRI if iri_position else LITERAL
    if spec.term_type == IRI and default_tt != IRI:
        text += "~iri"
    return text


def _po_entry_yaml(entry: PoEntry) -> object:
    obj = entry.object
    if isinstance(obj, JoinSpec):
        conditions = [
            {
                "function": "equal",
                "parameters": _FlowList([
                    _FlowList(["str1", f"$({child})"]),
                    _FlowList(["str2", f"$({parent})"]),
                ]),
            }
            for child, parent in obj.conditions
        ]
        condition = conditions[0] if len(conditions) == 1 else conditions
        return {"p": entry.predicate, "o": {"mapping": obj.parent, "condition": condition}}
    if obj.kind == "function_call":
        o: dict[str, object] = {
            "function": obj.value,
            "parameters": _FlowList([_term_text(a) for a in obj.args]),
        }
        if obj.term_type == IRI:
            o["type"] = "iri"
        if obj.datatype:
            o["datatype"] = obj.datatype
        if obj.language:
            o["language"] = obj.language
        return {"p": entry.predicate, "o": o}
    if obj.datatype or obj.language:
        o = {"value": _term_text(obj)}
        if obj.datatype:
            o["datatype"] = obj.datatype
        if obj.language:
            o["language"] = obj.language
        return {"p": entry.predicate, "o": o}
    return _FlowList([entry.predicate, _term_text(obj)])


def serialize_yarrrml(doc: YarrrmlDocument) -> str:
    """Emit YARRRML YAML with stable key order (prefixes, then mappings by id)."""
    mappings: dict[str, object] = {}
    for map_id in sorted(doc.mappings):
        m = doc.mappings[map_id]
        body: dict[str, object] = {
            "sources": [_FlowList([f"{src}~{form}"]) for src, form in m.sources],
            "s": _term_text(m.subject, iri_position=True),
        }
        po_items: list[object] = [_FlowList(["a", c]) for c in m.classes]
        po_items += [_po_entry_yaml(entry) for entry in m.po]
        if po_items:
            body["po"] = po_items
        mappings[map_id] = body
    payload: dict[str, object] = {}
    if doc.prefixes:
        payload["prefixes"] = dict(sorted(doc.prefixes.items()))
    payload["mappings"] = mappings
    return yaml.dump(
        payload,
        Dumper=_YarrrmlDumper,
        sort_keys=False,
        allow_unicode=True,
        default_flow_style=False,
        width=4096,
    )


# --- translation --------------------------------------------------------------

def _dollar_to_braces(template: str) -> str:
    return _REFERENCE_RE.sub(lambda m: "{" + m.group(1) + "}", template)


def _spec_to_term_map(
    spec: TermSpec, prefixes: dict[str, str], where: str
) -> TermMap:
    datatype = (
        expand_curie(spec.datatype, prefixes, where + " datatype")
        if spec.datatype else None
    )
    if spec.kind == "reference":
        return TermMap(kind="reference", value=spec.value, term_type=spec.term_type,
                       datatype=datatype, language=spec.language)
    if spec.kind == "template":
        return TermMap(kind="template", value=_dollar_to_braces(spec.value),
                       term_type=spec.term_type, datatype=datatype,
                       language=spec.language)
    if spec.kind == "function_call":
        return TermMap(
            kind="function",
            value=spec.value,
            args=tuple(_spec_to_term_map(a, prefixes, where + " argument") for a in spec.args),
            term_type=spec.term_type,
            datatype=datatype,
            language=spec.language,
        )
    # constant
    if spec.term_type == IRI:
        return TermMap(
            kind="constant",
            constant=Iri(expand_curie(spec.value, prefixes, where)),
            term_type=IRI,
        )
    return TermMap(
        kind="constant",
        constant=Literal(spec.value, datatype or XSD_STRING, spec.language),
        term_type=LITERAL,
    )


def to_rml(doc: YarrrmlDocument) -> RmlGraph:
    """Translate a parsed document into an executable RML graph."""
    maps = []
    for map_id, mapping in doc.mappings.items():
        where = f"mapping {map_id!r}"
        if len(mapping.sources) > 1:
            raise UnsupportedFeatureError(f"{where}: multiple sources per mapping")
        source_id = mapping.sources[0][0]
        subject = _spec_to_term_map(mapping.subject, doc.prefixes, where + " subject")
        classes = tuple(
            expand_curie(c, doc.prefixes, where + " class") for c in mapping.classes
        )
        poms = []
        for entry in mapping.po:
            predicate = TermMap(
                kind="constant",
                constant=Iri(expand_curie(entry.predicate, doc.prefixes, where + " predicate")),
                term_type=IRI,
            )
            if isinstance(entry.object, JoinSpec):
                obj: TermMap | RefObjectMap = RefObjectMap(
                    parent=entry.object.parent,
                    conditions=tuple(
                        JoinCondition(child=c, parent=p)
                        for c, p in entry.object.conditions
                    ),
                )
            else:
                obj = _spec_to_term_map(entry.object, doc.prefixes, where + " object")
            poms.append(PredicateObjectMap(predicate=predicate, object=obj))
        maps.append(TriplesMap(
            id=map_id,
            source_id=source_id,
            subject=subject,
            classes=classes,
            predicate_object_maps=tuple(poms),
        ))
    return RmlGraph(triples_maps=tuple(maps), prefixes=dict(doc.prefixes))

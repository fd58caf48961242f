"""Questionnaire definitions, exported responses, and mapping decisions.

The canonical response format is a flat JSON object mapping question codes
to answers. Raw LimeSurvey exports (an array of response records, one per
respondent) are normalized through ``parse_limesurvey_export``, which takes
the first record; this targets the "export responses as JSON, one record
per respondent" option and is the only export layout supported.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import (
    AnswerShapeError,
    DecisionFormatError,
    DuplicateCodeError,
    InvalidBaseIriError,
    JsonSyntaxError,
    MissingOptionsError,
    QuestionnaireFormatError,
    UnknownQuestionError,
)
from .tabular import normalize_name
from .terms import is_absolute_iri

KINDS = ("boolean", "single_choice", "multi_choice", "free_text")

BINDING_TARGETS = (
    "enable_function",
    "select_vocabulary",
    "set_base_iri",
    "include_column",
    "feedback_only",
)
_NAMED_TARGETS = {"enable_function", "select_vocabulary", "include_column"}

# Which question kinds may drive which binding, so derivation never has to
# guess how to coerce an answer.
_KIND_FOR_TARGET = {
    "enable_function": {"boolean"},
    "include_column": {"boolean"},
    "select_vocabulary": {"single_choice", "free_text"},
    "set_base_iri": {"single_choice", "free_text"},
    "feedback_only": set(KINDS),
}

RESERVED_RESPONSE_KEYS = ("_respondent_id", "_timestamp")


@dataclass(frozen=True)
class DecisionBinding:
    target: str
    name: str | None = None

    def __post_init__(self):
        if self.target not in BINDING_TARGETS:
            raise QuestionnaireFormatError(f"unknown binding target: {self.target!r}")
        if self.target in _NAMED_TARGETS and not self.name:
            raise QuestionnaireFormatError(f"binding {self.target!r} needs a name")


@dataclass(frozen=True)
class Question:
    code: str
    prompt: str
    kind: str
    binding: DecisionBinding
    options: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise QuestionnaireFormatError(f"unknown question kind: {self.kind!r}")
        if self.kind in ("single_choice", "multi_choice") and not self.options:
            raise MissingOptionsError(f"question {self.code!r} has no options")
        if self.kind not in _KIND_FOR_TARGET[self.binding.target]:
            raise QuestionnaireFormatError(
                f"question {self.code!r}: kind {self.kind!r} cannot drive "
                f"binding {self.binding.target!r}"
            )


@dataclass(frozen=True)
class Questionnaire:
    questions: tuple[Question, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        seen: set[str] = set()
        for q in self.questions:
            if q.code in seen:
                raise DuplicateCodeError(f"duplicate question code: {q.code!r}")
            seen.add(q.code)

    def __len__(self) -> int:
        return len(self.questions)

    def by_code(self, code: str) -> Question:
        for q in self.questions:
            if q.code == code:
                return q
        raise UnknownQuestionError(f"unknown question code: {code!r}")


@dataclass(frozen=True)
class ResponseSet:
    answers: dict[str, object]
    respondent_id: str | None = None
    timestamp: str | None = None


_BASE_IRI_END = ("/", "#")


@dataclass(frozen=True)
class DecisionSet:
    base_iri: str
    prefix_map: dict[str, str] = field(default_factory=dict)
    enabled_functions: frozenset[str] = frozenset()
    vocabulary_slots: dict[str, str] = field(default_factory=dict)
    included_columns: frozenset[str] = frozenset()
    feedback: tuple[str, ...] = ()

    def __post_init__(self):
        if not is_absolute_iri(self.base_iri):
            raise InvalidBaseIriError(f"base IRI is not absolute: {self.base_iri!r}")
        # Relative subject patterns are joined by plain concatenation, so the
        # base must end in a separator.
        if not self.base_iri.endswith(_BASE_IRI_END):
            object.__setattr__(self, "base_iri", self.base_iri + "/")
        for label, iri in self.prefix_map.items():
            if not is_absolute_iri(iri):
                raise DecisionFormatError(
                    f"namespace for prefix {label!r} is not an absolute IRI: {iri!r}"
                )
        object.__setattr__(self, "enabled_functions", frozenset(self.enabled_functions))
        object.__setattr__(self, "included_columns", frozenset(self.included_columns))
        object.__setattr__(self, "feedback", tuple(self.feedback))


# --- parsing ---------------------------------------------------------------

def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise JsonSyntaxError(f"invalid {what} JSON: {exc}") from exc


_QUESTION_FIELDS = {"code", "prompt", "kind", "options", "binding"}
_BINDING_FIELDS = {"target", "name"}


def parse_questionnaire(text: str) -> Questionnaire:
    """Parse a questionnaire definition.

    Unknown JSON fields are ignored but reported on the questionnaire's
    warnings attribute.
    """
    raw = _load_json(text, "questionnaire")
    if not isinstance(raw, dict) or not isinstance(raw.get("questions"), list):
        raise QuestionnaireFormatError("questionnaire must be an object with a 'questions' list")
    warnings = [f"ignored unknown field {k!r}" for k in raw if k != "questions"]

    questions = []
    for entry in raw["questions"]:
        if not isinstance(entry, dict):
            raise QuestionnaireFormatError(f"question entry is not an object: {entry!r}")
        code = entry.get("code")
        if not code or not isinstance(code, str):
            raise QuestionnaireFormatError(f"question without a code: {entry!r}")
        for k in set(entry) - _QUESTION_FIELDS:
            warnings.append(f"ignored unknown field {k!r} in question {code!r}")
        binding_raw = entry.get("binding")
        if not isinstance(binding_raw, dict):
            raise QuestionnaireFormatError(f"question {code!r} has no binding object")
        for k in set(binding_raw) - _BINDING_FIELDS:
            warnings.append(f"ignored unknown field {k!r} in binding of {code!r}")
        binding = DecisionBinding(
            target=binding_raw.get("target", ""),
            name=binding_raw.get("name"),
        )
        options = entry.get("options", [])
        if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
            raise QuestionnaireFormatError(f"question {code!r}: options must be strings")
        questions.append(Question(
            code=code,
            prompt=entry.get("prompt", ""),
            kind=entry.get("kind", ""),
            binding=binding,
            options=tuple(options),
        ))
    return Questionnaire(questions=tuple(questions), warnings=tuple(warnings))


def _check_shape(q: Question, value: object) -> object:
    kind = q.kind
    if kind == "boolean":
        if not isinstance(value, bool):
            raise AnswerShapeError(f"{q.code}: expected a boolean, got {value!r}")
        return value
    if kind == "free_text":
        if not isinstance(value, str):
            raise AnswerShapeError(f"{q.code}: expected text, got {value!r}")
        return value
    if kind == "single_choice":
        if not isinstance(value, str):
            raise AnswerShapeError(f"{q.code}: expected one option, got {value!r}")
        if value not in q.options:
            raise AnswerShapeError(f"{q.code}: {value!r} is not one of {list(q.options)}")
        return value
    if kind == "multi_choice":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise AnswerShapeError(f"{q.code}: expected a list of options, got {value!r}")
        bad = [v for v in value if v not in q.options]
        if bad:
            raise AnswerShapeError(f"{q.code}: {bad} not among {list(q.options)}")
        return list(value)
    raise AnswerShapeError(f"{q.code}: unhandled kind {kind!r}")


def parse_responses(text: str, questionnaire: Questionnaire) -> ResponseSet:
    """Parse a canonical response file (flat code-to-answer JSON object)."""
    raw = _load_json(text, "responses")
    if not isinstance(raw, dict):
        raise AnswerShapeError("responses must be a JSON object keyed by question code")
    answers: dict[str, object] = {}
    for code, value in raw.items():
        if code in RESERVED_RESPONSE_KEYS:
            continue
        question = questionnaire.by_code(code)
        answers[code] = _check_shape(question, value)
    return ResponseSet(
        answers=answers,
        respondent_id=_opt_str(raw.get("_respondent_id")),
        timestamp=_opt_str(raw.get("_timestamp")),
    )


def _opt_str(value: object) -> str | None:
    return str(value) if value is not None else None


_YES = {"y", "yes", "true", "1"}
_NO = {"n", "no", "false", "0"}


def parse_limesurvey_export(text: str, questionnaire: Questionnaire) -> ResponseSet:
    """Normalize a raw LimeSurvey JSON export and parse it.

    Accepts either a bare array of response records or an object with a
    'responses' array; only the first record is used. LimeSurvey encodes
    booleans as Y/N and leaves unanswered questions null.
    """
    raw = _load_json(text, "LimeSurvey export")
    if isinstance(raw, dict) and isinstance(raw.get("responses"), list):
        raw = raw["responses"]
    if not isinstance(raw, list) or not raw or not isinstance(raw[0], dict):
        raise AnswerShapeError("LimeSurvey export must contain at least one response record")
    record = raw[0]

    canonical: dict[str, object] = {}
    for code, value in record.items():
        if value is None:
            continue
        if code == "id":
            canonical["_respondent_id"] = str(value)
            continue
        if code == "submitdate":
            canonical["_timestamp"] = str(value)
            continue
        try:
            question = questionnaire.by_code(code)
        except UnknownQuestionError:
            # Exports carry bookkeeping columns (lastpage, token, ...).
            continue
        if question.kind == "boolean" and isinstance(value, str):
            low = value.strip().casefold()
            if low in _YES:
                value = True
            elif low in _NO:
                value = False
        elif question.kind == "multi_choice" and isinstance(value, str):
            value = [p.strip() for p in value.split(";") if p.strip()]
        canonical[code] = value
    return parse_responses(json.dumps(canonical), questionnaire)


# --- decision derivation ----------------------------------------------------

def _as_feedback(value: object) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, list):
        return ", ".join(str(v) for v in value)
    return str(value)


def derive_decisions(
    responses: ResponseSet,
    questionnaire: Questionnaire,
    defaults: DecisionSet,
) -> DecisionSet:
    """Fold answered questions into a copy of the default decisions.

    Each answered question mutates exactly the field its binding names;
    unanswered questions leave the default. Iterates in questionnaire order,
    so the result is independent of response key order.
    """
    base_iri = defaults.base_iri
    enabled = set(defaults.enabled_functions)
    slots = dict(defaults.vocabulary_slots)
    included = set(defaults.included_columns)
    feedback = list(defaults.feedback)

    for question in questionnaire.questions:
        if question.code not in responses.answers:
            continue
        value = responses.answers[question.code]
        target = question.binding.target
        if target == "enable_function":
            if value:
                enabled.add(question.binding.name)
            else:
                enabled.discard(question.binding.name)
        elif target == "include_column":
            if value:
                included.add(question.binding.name)
            else:
                included.discard(question.binding.name)
        elif target == "select_vocabulary":
            slots[question.binding.name] = str(value)
        elif target == "set_base_iri":
            candidate = str(value)
            if not is_absolute_iri(candidate):
                raise InvalidBaseIriError(
                    f"{question.code}: answer is not an absolute IRI: {candidate!r}"
                )
            base_iri = candidate
        elif target == "feedback_only":
            feedback.append(_as_feedback(value))

    return DecisionSet(
        base_iri=base_iri,
        prefix_map=dict(defaults.prefix_map),
        enabled_functions=frozenset(enabled),
        vocabulary_slots=slots,
        included_columns=frozenset(included),
        feedback=tuple(feedback),
    )


def feedback_report(responses: ResponseSet, questionnaire: Questionnaire) -> list[tuple[str, str]]:
    """All answered free-text questions, in questionnaire order."""
    return [
        (q.code, str(responses.answers[q.code]))
        for q in questionnaire.questions
        if q.kind == "free_text" and q.code in responses.answers
    ]


def normalized_columns(decisions: DecisionSet) -> frozenset[str]:
    """Included column names normalized like dataset headers."""
    return frozenset(normalize_name(c) for c in decisions.included_columns)


# --- decision files ----------------------------------------------------------

_DECISION_FIELDS = {
    "base_iri", "prefix_map", "enabled_functions",
    "vocabulary_slots", "included_columns", "feedback",
}


def decisions_to_json(decisions: DecisionSet) -> str:
    payload = {
        "base_iri": decisions.base_iri,
        "prefix_map": dict(sorted(decisions.prefix_map.items())),
        "enabled_functions": sorted(decisions.enabled_functions),
        "vocabulary_slots": dict(sorted(decisions.vocabulary_slots.items())),
        "included_columns": sorted(decisions.included_columns),
        "feedback": list(decisions.feedback),
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def decisions_from_json(text: str) -> DecisionSet:
    """Load and re-validate a decision file (possibly hand-edited)."""
    raw = _load_json(text, "decision set")
    if not isinstance(raw, dict):
        raise DecisionFormatError("decision set must be a JSON object")
    unknown = set(raw) - _DECISION_FIELDS
    if unknown:
        raise DecisionFormatError(f"unknown decision fields: {sorted(unknown)}")
    if "base_iri" not in raw or not isinstance(raw["base_iri"], str):
        raise DecisionFormatError("decision set needs a textual 'base_iri'")

    def str_list(key: str) -> list[str]:
        value = raw.get(key, [])
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise DecisionFormatError(f"{key!r} must be a list of strings")
        return value

    def str_map(key: str) -> dict[str, str]:
        value = raw.get(key, {})
        if not isinstance(value, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in value.items()
        ):
            raise DecisionFormatError(f"{key!r} must map strings to strings")
        return value

    return DecisionSet(
        base_iri=raw["base_iri"],
        prefix_map=str_map("prefix_map"),
        enabled_functions=frozenset(str_list("enabled_functions")),
        vocabulary_slots=str_map("vocabulary_slots"),
        included_columns=frozenset(str_list("included_columns")),
        feedback=tuple(str_list("feedback")),
    )

"""Exception types shared across the toolchain."""


class CrosswalkError(Exception):
    """Base class for every error raised by glam2rdf."""


# --- tabular ---------------------------------------------------------------

class DecodeError(CrosswalkError):
    pass


class EmptyInputError(CrosswalkError):
    pass


class RaggedRowError(CrosswalkError):
    def __init__(self, row: int, expected: int, got: int):
        super().__init__(f"row {row} has {got} cells, expected {expected}")
        self.row = row
        self.expected = expected
        self.got = got


class HeaderError(CrosswalkError):
    """Empty or duplicate column name in a header or schema."""


class UnknownColumnError(CrosswalkError):
    pass


class SchemaFormatError(CrosswalkError):
    pass


# --- survey ----------------------------------------------------------------

class JsonSyntaxError(CrosswalkError):
    pass


class DuplicateCodeError(CrosswalkError):
    pass


class MissingOptionsError(CrosswalkError):
    pass


class QuestionnaireFormatError(CrosswalkError):
    pass


class UnknownQuestionError(CrosswalkError):
    pass


class AnswerShapeError(CrosswalkError):
    pass


class InvalidBaseIriError(CrosswalkError):
    pass


class DecisionFormatError(CrosswalkError):
    pass


# --- mapgen ----------------------------------------------------------------

class PackFormatError(CrosswalkError):
    pass


class PrefixCollisionError(CrosswalkError):
    pass


# --- yarrrml / rml ---------------------------------------------------------

class YamlSyntaxError(CrosswalkError):
    pass


class YarrrmlFormatError(CrosswalkError):
    pass


class UnsupportedFeatureError(CrosswalkError):
    """A construct outside the supported YARRRML/RML subset, named with its location."""


class UnknownPrefixError(CrosswalkError):
    pass


class DanglingJoinError(CrosswalkError):
    pass


class TurtleSyntaxError(CrosswalkError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.col = col


# --- engine ----------------------------------------------------------------

class MissingSourceError(CrosswalkError):
    pass


class FunctionNotFoundError(CrosswalkError):
    pass


class IriInvalidError(CrosswalkError):
    pass


# --- cli -------------------------------------------------------------------

class PipelineConfigError(CrosswalkError):
    pass

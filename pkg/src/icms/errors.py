"""Exception hierarchy shared by every engine and the HTTP layer."""

from __future__ import annotations


class IcmsError(Exception):
    """Base class for all domain errors."""

    code = "INTERNAL"


class ConfigError(IcmsError):
    """Configuration document violates an invariant; message names the field."""

    code = "CONFIG"


class ValidationError(IcmsError):
    """A field value violates its type's invariants."""

    code = "VALIDATION"


class SchemaError(ValidationError):
    """A required field is missing or has the wrong shape; message names the field."""

    code = "VALIDATION"

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"missing required field: {field}")


class RecordParseError(IcmsError):
    """Feed line is not valid JSON; carries the byte offset of the failure."""

    code = "VALIDATION"

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class RuleSyntaxError(IcmsError):
    """Rule text rejected by the DSL parser; carries 1-based line/column."""

    code = "RULE_SYNTAX"

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} at line {line}, column {column}")


class UnknownIdentifierError(RuleSyntaxError):
    """Rule references an identifier outside the declared feature set."""

    def __init__(self, ident: str, line: int, column: int):
        self.ident = ident
        super().__init__(f"unknown identifier '{ident}'", line, column)


class InsufficientDataError(IcmsError):
    """Not enough data points for the requested computation."""

    code = "INSUFFICIENT_DATA"


class NotFoundError(IcmsError):
    """Referenced entity does not exist."""

    code = "NOT_FOUND"


class StateError(IcmsError):
    """Illegal lifecycle transition."""

    code = "STATE"


class StorageError(IcmsError):
    """Event log could not be written."""

    code = "STORAGE"


class RecoveryError(IcmsError):
    """Event log is corrupt mid-file; carries the offending sequence number."""

    code = "STORAGE"

    def __init__(self, message: str, sequence: int):
        self.sequence = sequence
        super().__init__(f"{message} (sequence {sequence})")


class DataError(IcmsError):
    """Replay dataset cannot be read; carries file and line context."""

    code = "DATA"

"""Exceptions raised inside sandboxed scripts.

Each class carries the label that prefixes its one-line diagnostic, so the
model reading ``<execution_results>`` can tell failure kinds apart.
"""


class ScriptError(Exception):
    label = "runtime error"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line

    def diagnostic(self) -> str:
        where = f" at line {self.line}" if self.line is not None else ""
        return f"{self.label}{where}: {self.message}"


class ParseError(ScriptError):
    label = "parse error"


class UndefinedName(ScriptError):
    label = "name error"


class ScriptTypeError(ScriptError):
    label = "type error"


class LimitExceeded(ScriptError):
    label = "limit exceeded"


class ToolError(ScriptError):
    label = "tool error"


class SessionClosed(Exception):
    """Raised when executing against a destroyed session."""

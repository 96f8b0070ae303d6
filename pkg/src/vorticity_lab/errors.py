from typing import Any, ClassVar, Final


class LabError(Exception):
    kind: Final[str]
    context: Final[dict[str, Any]]
    default_kind: ClassVar[str] = "lab-error"

    def __init__(self, message: str, *, kind: str | None = None, **context: Any) -> None:
        super().__init__(message)
        self.kind = kind if kind is not None else self.default_kind
        self.context = context

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "message": str(self),
            "context": {key: _jsonable(value) for key, value in self.context.items()},
        }


def _jsonable(value: Any) -> Any:
    match value:
        case bool() | int() | str() | None:
            return value
        case float():
            return value if value == value and abs(value) != float("inf") else str(value)
        case list() | tuple():
            return [_jsonable(item) for item in value]
        case _:
            return str(value)


class GridError(LabError):
    default_kind = "dimension-too-small"

class FieldError(LabError):
    default_kind = "shape-mismatch"

class SolverError(LabError):
    default_kind = "solver-nonconvergence"

class StepSizeError(LabError):
    default_kind = "cfl-violation"

class CompatibilityError(LabError):
    default_kind = "incompatible-initial-data"

class DegenerateResponseError(LabError):
    default_kind = "degenerate-response"

class InsufficientSamplesError(LabError):
    default_kind = "insufficient-samples"

class PreconditionError(LabError):
    default_kind = "precondition"


class ConfigIssue:
    line: int | None
    key: str | None
    kind: str
    message: str

    def __init__(self, kind: str, message: str, line: int | None = None, key: str | None = None) -> None:
        self.kind = kind
        self.message = message
        self.line = line
        self.key = key

    def __str__(self) -> str:
        where = f" at '{self.key}'" if self.key is not None else ""
        if self.line is not None:
            return f"[line {self.line}] Error{where}: {self.message}"
        return f"Error{where}: {self.message}"


class ConfigError(LabError):
    default_kind = "config"
    issues: Final[list[ConfigIssue]]

    def __init__(self, issues: list[ConfigIssue]) -> None:
        kind = issues[0].kind if issues else self.default_kind
        super().__init__("\n".join(str(issue) for issue in issues), kind=kind)
        self.issues = issues

    def to_json(self) -> dict[str, Any]:
        document = super().to_json()
        document["context"] = {
            "issues": [
                {"kind": issue.kind, "line": issue.line, "key": issue.key, "message": issue.message}
                for issue in self.issues
            ]
        }
        return document


class IssueLog:
    issues: list[ConfigIssue]

    def __init__(self) -> None:
        self.issues = []

    @property
    def had_error(self) -> bool:
        return bool(self.issues)

    def error(self, where: Any, message: str, kind: str = "syntax") -> None:
        # where is a line number or a token carrying one
        if isinstance(where, int):
            self.report(kind, message, line=where)
        else:
            self.report(kind, message, line=where.line, key=where.lexeme.strip() or None)

    def report(self, kind: str, message: str, line: int | None = None, key: str | None = None) -> None:
        self.issues.append(ConfigIssue(kind, message, line, key))

    def raise_if_any(self) -> None:
        if self.issues:
            raise ConfigError(self.issues)

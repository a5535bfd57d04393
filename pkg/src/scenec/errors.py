"""Exception types shared across the compiler."""

from __future__ import annotations


class ScenecError(Exception):
    """Base class for every error raised by this package."""


class PlanError(ScenecError, ValueError):
    """A plan document violates the grammar or a schema invariant.

    ``kind`` is a short machine-readable tag (``syntax``, ``enum``,
    ``duplicate_name``, ``dangling_reference``, ``type``, ``missing``).
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None, kind: str = "schema"):
        self.message = message
        self.line = line
        self.column = column
        self.kind = kind
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        return f"line {self.line}, column {self.column}: {self.message}"


class PlanSyntaxError(PlanError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message, line, column, kind="syntax")


class CatalogError(ScenecError, ValueError):
    pass


class MissingAssetError(CatalogError, KeyError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no catalog entry for {key!r}")

    def __str__(self) -> str:
        return f"no catalog entry for {self.key!r}"


class ResolveError(ScenecError):
    """Relation grounding failed for ``subject``.

    ``kind`` names the failure (``cyclic_topology``, ``missing_extent``,
    ``no_fit``, ``would_sink`` ...). ``clarify`` marks failures that the
    plan author must resolve by adding information rather than fixing a
    contradiction.
    """

    def __init__(self, kind: str, subject: str | None, message: str, clarify: bool = False):
        self.kind = kind
        self.subject = subject
        self.message = message
        self.clarify = clarify
        super().__init__(f"{subject}: {message}" if subject else message)


class ApiIndexError(ScenecError, ValueError):
    pass


class SourceParseError(ScenecError, ValueError):
    def __init__(self, message: str, line: int | None, column: int | None):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class TrajectoryFormatError(ScenecError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class JudgeInputError(ScenecError, ValueError):
    pass

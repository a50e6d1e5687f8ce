"""Exception hierarchy shared by every layer of the runtime."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class RelsimError(Exception):
    """Base class. ``kind`` is a short machine-readable tag."""

    kind = "error"

    def __init__(self, message: str, *, span: Span | None = None, field: str | None = None):
        self.message = message
        self.span = span
        self.field = field
        super().__init__(self._format())

    def _format(self) -> str:
        where = f" at {self.span}" if self.span is not None else ""
        return f"{self.kind}{where}: {self.message}"

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "field": self.field,
            "span": None if self.span is None else [self.span.line, self.span.col],
        }


class SchemaError(RelsimError, ValueError):
    kind = "schema-error"


class KeyBoundsError(RelsimError, IndexError):
    kind = "key-bounds"


class GroupingError(RelsimError):
    kind = "grouping-error"


class StaleViewError(RelsimError):
    kind = "stale-view"


class KernelSyntaxError(RelsimError, SyntaxError):
    kind = "syntax-error"


class ExpansionError(RelsimError):
    kind = "expansion-error"


class KernelTypeError(RelsimError, TypeError):
    kind = "type-error"


class PhaseError(RelsimError):
    """Raised when a field or global is used in more than one phase.

    ``sites`` holds the source spans of the conflicting accesses. When a
    kernel has several conflicts they are all kept in ``conflicts`` (one
    PhaseError each) and ``fields`` names every offending field.
    """

    kind = "phase-error"

    def __init__(self, message: str, *, field: str, sites: tuple[Span, ...] = (),
                 conflicts: tuple["PhaseError", ...] = ()):
        self.sites = sites
        self.conflicts = conflicts or (self,)
        self.fields = tuple(c.field for c in conflicts) if conflicts else (field,)
        super().__init__(message, field=field, span=sites[0] if sites else None)

    @classmethod
    def combine(cls, errors: list["PhaseError"]) -> "PhaseError":
        if len(errors) == 1:
            return errors[0]
        msg = f"{len(errors)} phase conflicts: " + " | ".join(e.message for e in errors)
        return cls(msg, field=errors[0].field, sites=errors[0].sites, conflicts=tuple(errors))

    def as_dict(self) -> dict:
        d = super().as_dict()
        d["sites"] = [[s.line, s.col] for s in self.sites]
        if len(self.conflicts) > 1:
            d["conflicts"] = [c.as_dict() for c in self.conflicts]
        return d


class ExecutionError(RelsimError):
    kind = "execution-error"


class AffineBoundsError(ExecutionError, IndexError):
    kind = "affine-bounds"

    def __init__(self, message: str, *, kernel: str, element: int, map_desc: str):
        self.kernel = kernel
        self.element = element
        self.map_desc = map_desc
        super().__init__(message)


class NaNGuardError(ExecutionError, FloatingPointError):
    kind = "nan-guard"

    def __init__(self, message: str, *, kernel: str | None = None, field: str | None = None,
                 row: int | None = None):
        self.kernel = kernel
        self.row = row
        super().__init__(message, field=field)


class FormatError(RelsimError):
    """A malformed mesh or field file. ``line`` is 1-based when known."""

    kind = "format-error"

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        elif line is not None:
            loc = f"line {line}: "
        super().__init__(loc + message)


class ConfigError(RelsimError, ValueError):
    kind = "config-error"


class TypeMismatchError(RelsimError, TypeError):
    kind = "type-mismatch"

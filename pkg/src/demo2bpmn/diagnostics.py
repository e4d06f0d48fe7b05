"""Structured validation findings shared by the model and diagram validators."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: a rule id, a message, and where it applies.

    ``locus`` is either ``line:col`` for textual inputs or an element id for
    in-memory graphs; it may be empty when the finding is global.
    """

    rule: str
    message: str
    locus: str = ""
    severity: Severity = Severity.ERROR

    def __str__(self) -> str:
        prefix = f"{self.locus}: " if self.locus else ""
        return f"{prefix}{self.rule}: {self.message}"


def render_diagnostics(diagnostics: list[Diagnostic]) -> str:
    return "\n".join(str(d) for d in diagnostics)

"""Diagnostic records shared by the parser, validator, decomposition checks
and trace conformance.

Every code any component can emit is listed in :data:`CATALOG`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"

    @property
    def rank(self) -> int:
        return _SEVERITY_RANK[self]


_SEVERITY_RANK = {Severity.ERROR: 0, Severity.WARNING: 1, Severity.INFO: 2}


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"line and column are 1-based, got {self.line}:{self.column}")
        if self.length < 0:
            raise ValueError("negative span length")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    code: str
    message: str
    subject: str = ""
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __post_init__(self):
        if self.code not in CATALOG:
            raise ValueError(f"diagnostic code {self.code!r} is not in the catalog")

    @property
    def sort_key(self):
        return (self.severity.rank, self.code, self.subject, self.message)

    def render(self) -> str:
        """``severity CODE path: message (file:line:col)``; the location is
        omitted when the diagnostic has no span."""
        text = f"{self.severity.value} {self.code} {self.subject}: {self.message}"
        if self.span is not None:
            text += f" ({self.span})"
        return text


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: d.sort_key)


def count_errors(diags: Iterable[Diagnostic]) -> int:
    return sum(1 for d in diags if d.severity is Severity.ERROR)


# code -> one-line description
CATALOG = {
    # parser
    "E-SYNTAX": "malformed source text",
    "E-DUP-NAME": "two sibling thimacs share a name",
    "E-PROFILE-KIND": "stage kind not available under the model profile",
    "E-REF-UNKNOWN": "reference to an undeclared stage or arc",
    "E-SELF-ARC": "arc source and destination are the same stage",
    "E-DUP-ARC": "two arcs share kind, source and destination",
    "E-DUP-EVENT": "two events share a name",
    "E-EVT-EMPTY": "event declares no members",
    "E-UNKNOWN-EVENT": "behavior edge names an undeclared event",
    "E-DUP-EDGE": "behavior edge declared twice",
    # structural rules
    "E-DUP-STAGE": "more than one stage of a kind in one machine",
    "E-FLOW-ILLEGAL": "flow between stage kinds outside the legality matrix",
    "E-TRIG-SRC": "trigger originates from a stage other than process or create",
    "W-TRIG-FLOW": "flow joins the same ordered stage pair as a trigger",
    "E-DANGLING": "arc endpoint or parent reference does not resolve",
    "W-ISOLATED": "stage has no incident arcs",
    "W-UNREACHABLE-CREATE-FREE": "arc component has no create stage and no open transfer",
    # decomposition
    "W-EVT-DISCONNECTED": "event sub-diagram is not weakly connected",
    "W-EVT-TRIVIAL": "event is a single non-create stage",
    "W-EVT-COVERAGE": "stage belongs to no event",
    "I-EVT-OVERLAP": "stage belongs to several events",
    # behavior graph and conformance
    "I-BEHAVIOR-CYCLE": "behavior graph contains a cycle (repetition)",
    "E-BEHAVIOR-ORDER": "event activated before its predecessor",
    "E-BEHAVIOR-SKIP": "event activated although its mandatory predecessor never did",
}

"""Error classes raised by the DSL and formula front ends.

Every error carries a short machine-readable ``code`` plus the 1-based
line/column of the offending construct (0 when no position applies).
"""

from __future__ import annotations


class FlyFastError(Exception):
    """Root of all errors raised by this package."""


class SpecError(FlyFastError):
    code = "spec-error"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class LexicalError(SpecError):
    code = "lexical-error"


class DSLSyntaxError(SpecError):
    code = "syntax-error"


class DuplicateActionError(SpecError):
    code = "duplicate-action"


class DuplicateStateError(SpecError):
    code = "duplicate-state-def"


class UndefinedStateError(SpecError):
    code = "undefined-state"


class MissingProbabilityError(SpecError):
    code = "missing-prob-def"


class DuplicateProbabilityError(SpecError):
    code = "duplicate-prob-def"


class UnusedProbabilityError(SpecError):
    code = "unused-prob-def"


class UnknownAtomError(SpecError):
    code = "unknown-atom"


class AtomClashError(SpecError):
    code = "atom-clash"


class NegativeCountError(SpecError):
    code = "negative-count"


class InitError(SpecError):
    """Missing/duplicated ``init`` or an empty population."""

    code = "init-error"


class LiteralRangeError(SpecError):
    code = "literal-range"


class BExpError(SpecError):
    """Global label expression outside the continuous sublanguage."""

    code = "bexp-error"


class ProbabilityBoundError(SpecError):
    code = "bound-range"


class HorizonError(SpecError):
    code = "negative-horizon"


# Maps a diagnostic code back to the exception class that reports it.
ERROR_CLASSES: dict[str, type[SpecError]] = {
    cls.code: cls
    for cls in (
        LexicalError,
        DSLSyntaxError,
        DuplicateActionError,
        DuplicateStateError,
        UndefinedStateError,
        MissingProbabilityError,
        DuplicateProbabilityError,
        UnusedProbabilityError,
        UnknownAtomError,
        AtomClashError,
        NegativeCountError,
        InitError,
        LiteralRangeError,
        BExpError,
        ProbabilityBoundError,
        HorizonError,
    )
}


class ModelError(FlyFastError):
    """Semantic failure while evaluating a model at some occupancy measure."""

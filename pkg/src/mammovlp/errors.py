"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: config/usage problems
exit with 2, numerical aborts with 3, data validation with 4.
"""

from __future__ import annotations


class MammoVLPError(Exception):
    """Base class for all package errors."""


class ShapeError(MammoVLPError):
    """Tensor shape does not match the configured contract."""


class VocabularyError(MammoVLPError):
    """Token id outside the tokenizer vocabulary."""


class ContractError(MammoVLPError):
    """An upstream guarantee was violated (e.g. non-unit embeddings,
    excluded labels reaching fine-tuning)."""


class ParameterError(MammoVLPError):
    """Invalid hyperparameter value (e.g. non-positive temperature)."""


class ConfigError(MammoVLPError):
    """Invalid run configuration or command usage."""


class BudgetError(MammoVLPError):
    """Requested sample budget exceeds the available data."""


class SplitError(MammoVLPError):
    """Cross-validation split cannot be constructed."""


class ExtractionError(MammoVLPError):
    """Document cannot be parsed for figure/caption extraction."""


class IntegrityError(MammoVLPError):
    """Checkpoint payload hash does not match its header."""


class DataValidationError(MammoVLPError):
    """One or more data rows failed validation.

    ``row_errors`` holds (row_number, reason) pairs so callers can report
    every offending row at once.
    """

    def __init__(self, message: str, row_errors: list[tuple[int, str]] | None = None):
        super().__init__(message)
        self.row_errors = row_errors or []

    def __str__(self) -> str:  # pragma: no cover - formatting only
        base = super().__str__()
        if not self.row_errors:
            return base
        detail = "; ".join(f"row {n}: {why}" for n, why in self.row_errors)
        return f"{base} ({detail})"


class NumericalAbortError(MammoVLPError):
    """Training hit a non-finite loss.

    Carries the offending component name and the last good checkpoint so
    callers can persist it before giving up.
    """

    def __init__(self, component: str, last_good=None):
        super().__init__(f"non-finite value in loss component '{component}'")
        self.component = component
        self.last_good = last_good

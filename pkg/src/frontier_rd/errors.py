"""Exception hierarchy.

Configuration and input-shape problems raise :class:`ConfigError` or one of
its siblings under :class:`UsageError`; numerical failures during estimation
raise subclasses of :class:`NumericalError`.  The CLI maps the former to exit
code 2 and the latter to exit code 1.
"""

from __future__ import annotations


class FrontierRDError(Exception):
    """Root of all package-specific exceptions."""


class UsageError(FrontierRDError):
    """Bad inputs: malformed files, unknown options, invalid parameters."""


class ConfigError(UsageError):
    """Invalid configuration value or malformed config file."""


class SchemaError(UsageError):
    """Schema file is malformed or does not match the CSV header."""


class ParseError(UsageError):
    """CSV could not be tokenized."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class DuplicateIdError(UsageError):
    """Two rows share a settlement id."""


class InputError(UsageError):
    """Array or frame arguments have the wrong shape or content."""


class NumericalError(FrontierRDError):
    """Estimation failed for numerical reasons."""


class CollinearityError(NumericalError):
    """Design matrix is rank deficient."""

    def __init__(self, columns: list[str]):
        self.columns = list(columns)
        super().__init__(
            "collinear columns in design matrix: " + ", ".join(self.columns)
        )


class DegenerateInstrumentError(NumericalError):
    """Instrument carries no signal for the endogenous regressor."""


class InferenceError(NumericalError):
    """Variance estimation is not possible (for example a single cluster)."""

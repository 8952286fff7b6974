"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: validation problems exit with 2,
estimation problems with 1, and I/O problems (plain OSError) with 3.
"""


class IndustrySpaceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(IndustrySpaceError):
    """Input data violates a schema or an invariant."""


class ParseError(ValidationError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CoverageError(ValidationError):
    """Codes present in the flow data are missing from the crosswalk."""

    def __init__(self, orphans):
        self.orphans = tuple(sorted(orphans))
        super().__init__(
            "crosswalk does not cover flow code(s): " + ", ".join(self.orphans)
        )


class EstimationError(IndustrySpaceError):
    """A model could not be estimated on the given sample."""

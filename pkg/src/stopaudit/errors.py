"""Exception types shared across the package."""


class StopAuditError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(StopAuditError):
    """Raised when a file or config does not match the declared schema."""


class BinningError(StopAuditError):
    """Raised for unbinnable values: NA input, kind mismatch, out-of-range."""


class ConstantInputError(StopAuditError):
    """Raised when a correlation input vector has zero variance."""


class ExclusionError(StopAuditError):
    """Raised when a group cannot enter an analysis (e.g. zero searched drivers).

    The ``reason`` attribute carries a machine-readable explanation so callers
    can report exclusions instead of aborting a whole run.
    """

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason

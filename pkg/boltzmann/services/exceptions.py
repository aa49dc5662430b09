"""
Error types raised by the RBM services.

Every error carries a machine-readable code and renders as "CODE: message",
which is what the trial task stores on failed TrialRun rows.
"""


class RbmError(Exception):
    code = 'PROCESSING_ERROR'

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self):
        return f"{self.code}: {self.message}"


class ShapeError(RbmError, ValueError):
    code = 'SHAPE_MISMATCH'


class IntractableSizeError(RbmError):
    """Raised when exact enumeration is requested beyond the size cap."""
    code = 'INTRACTABLE_SIZE'


class ContractViolation(RbmError, ValueError):
    code = 'CONTRACT_VIOLATION'


class ConfigError(RbmError, ValueError):
    code = 'INVALID_CONFIG'


class DataFormatError(RbmError):
    code = 'BAD_FORMAT'


class EvaluationError(RbmError):
    code = 'AIS_DIVERGED'

    def __init__(self, message: str, diagnostics: dict = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# Codes that are deterministic and never worth retrying
NON_RETRYABLE_CODES = frozenset(
    cls.code for cls in (
        ShapeError, IntractableSizeError, ContractViolation,
        ConfigError, DataFormatError, EvaluationError,
    )
)

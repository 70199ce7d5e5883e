"""
Error hierarchy for the embedding size search pipeline.

Every error carries the process exit code the CLI maps it to:
0 success, 1 runtime failure, 2 input error, 3 state error.
"""

from typing import List, Optional


class CIESSError(Exception):
    """Base class for all pipeline errors"""

    exit_code = 1


# ========== Input errors (exit 2) ==========

class InputError(CIESSError):
    """Bad input supplied by the user"""

    exit_code = 2


class DataParseError(InputError):
    """Interaction file could not be parsed"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConfigValidationError(InputError):
    """Configuration failed validation; carries every error found"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in self.errors))


class MaskValidationError(InputError):
    """Illegal per-entity dimension assignment"""


# ========== State errors (exit 3) ==========

class StateError(CIESSError):
    """Run directory state is missing or conflicting"""

    exit_code = 3


class NoCandidatesError(StateError):
    """No candidate masks exist for a requested sparsity"""


class ArtifactExistsError(StateError):
    """An output artifact exists and overwriting was not requested"""


# ========== Runtime errors (exit 1) ==========

class NonFiniteError(CIESSError):
    """A loss or gradient became NaN or infinite"""


class SamplingError(CIESSError):
    """Negative sampling could not find a valid triple"""


class ShapeError(CIESSError):
    """Array shapes, cached activations or architectures do not match"""

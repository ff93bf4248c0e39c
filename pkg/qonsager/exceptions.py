"""Error hierarchy shared by the library modules and the command line.

Every error carries a human readable ``detail`` plus free-form context that ends
up in the result file when a command fails.
"""

from typing import Any, Dict


class QOnsagerError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when this escapes a command."""

    exit_code = 1

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "detail": self.detail,
            "context": {k: _jsonable(v) for k, v in self.context.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, complex):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class RejectedInputError(QOnsagerError, ValueError):
    """Shape or range violation in the arguments of an operation."""


class UnsupportedFamilyError(QOnsagerError):
    pass


class FamilyConstraintError(QOnsagerError):
    """The family parameters do not satisfy the tridiagonal constraints."""


class DomainError(QOnsagerError):
    """Evaluation point too close to a pole, or a guarded factor underflowed."""


class DegenerateParameterError(QOnsagerError):
    pass


class ConvergenceError(QOnsagerError):
    def __init__(self, detail: str, best_residual: float = float("nan"), **context: Any):
        super().__init__(detail, best_residual=best_residual, **context)
        self.best_residual = best_residual


class DefectiveMatrixError(QOnsagerError):
    pass


class InterpolationError(QOnsagerError):
    pass


class PreconditionError(QOnsagerError):
    pass


class SpectralMismatchError(QOnsagerError):
    pass


class ConfigError(QOnsagerError):
    exit_code = 2

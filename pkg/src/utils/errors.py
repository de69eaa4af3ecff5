"""
Exception hierarchy for the hypcross toolkit
Every error can be turned into a machine-readable record for the CLI
"""

from typing import Any, Dict, Optional


class HypcrossError(Exception):
    """Base class for all toolkit errors"""

    kind = 'error'

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_record(self) -> Dict[str, Any]:
        record = {'error': self.kind, 'message': self.message}
        record.update({k: v for k, v in self.details.items() if v is not None})
        return record


class ParameterError(HypcrossError):
    """A parameter precondition does not hold; `inequality` names it"""

    kind = 'parameter'

    def __init__(self, message: str, inequality: Optional[str] = None, **details: Any):
        super().__init__(message, inequality=inequality, **details)
        self.inequality = inequality


class CapExceededError(HypcrossError):
    """Predicted size of an enumeration exceeds the configured cap"""

    kind = 'cap_exceeded'

    def __init__(self, message: str, predicted: int, cap: int):
        super().__init__(message, predicted=predicted, cap=cap)
        self.predicted = predicted
        self.cap = cap


class IndexOverflowError(HypcrossError):
    """Exact integer quantity does not fit the representable range"""

    kind = 'overflow'


class GridError(HypcrossError):
    """Evaluation grid too small for a polynomial, or too large for the cap"""

    kind = 'grid'


class SolverError(HypcrossError):
    """Recovery solver failure"""

    kind = 'solver'

    def __init__(self, message: str, condition: Optional[float] = None,
                 objective_gap: Optional[float] = None, **details: Any):
        super().__init__(message, condition=condition, objective_gap=objective_gap, **details)
        self.condition = condition
        self.objective_gap = objective_gap


class FitError(HypcrossError):
    """Rate fit is not identifiable from the given rows"""

    kind = 'fit'


def require(condition: bool, inequality: str, message: Optional[str] = None, **details: Any) -> None:
    """Raise ParameterError naming `inequality` unless `condition` holds"""
    if not condition:
        raise ParameterError(message or f"parameter precondition violated: {inequality}",
                             inequality=inequality, **details)

"""Domain errors.

Every error carries a human readable ``detail`` and the process exit code the
command line maps it to. Extra keyword context ends up in the JSON payload.
"""

from typing import Any, Dict


class SubFinslerError(Exception):
    """Base class for all validation failures."""

    exit_code = 1

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        payload = {"error": type(self).__name__, "detail": self.detail}
        payload.update(self.context)
        return payload


# Convex bodies
class NotConvexPlus(SubFinslerError):
    pass


class OriginOutside(SubFinslerError):
    pass


class ZeroVector(SubFinslerError):
    pass


class OutOfRange(SubFinslerError):
    pass


# Curves
class NonMonotoneParam(SubFinslerError):
    pass


class TooFewSamples(SubFinslerError):
    pass


# Graphs
class OutOfDomain(SubFinslerError):
    pass


class QuadratureFailure(SubFinslerError):
    pass


class SupportViolation(SubFinslerError):
    pass


class ZeroVolumeVariation(SubFinslerError):
    pass


class NotHRegular(SubFinslerError):
    pass


class GridMismatch(SubFinslerError):
    pass


# Characteristics
class StartOutOfDomain(SubFinslerError):
    pass


class StepTooLarge(SubFinslerError):
    pass


class OrderingViolation(SubFinslerError):
    pass


class SupportOutsideChart(SubFinslerError):
    pass


class RangeEscape(SubFinslerError):
    """M left the range of F; ``xi`` is where the tangent turns vertical."""

    def __init__(self, detail: str, xi: float, **context: Any):
        super().__init__(detail, xi=xi, **context)
        self.xi = xi


class LeafCrossing(SubFinslerError):
    pass


class CoverageGap(SubFinslerError):
    pass


# Curvature
class NotUnitSpeed(SubFinslerError):
    pass


class NotUnit(SubFinslerError):
    pass


# Expressions
class ExpressionSyntaxError(SubFinslerError):
    def __init__(self, detail: str, offset: int, expected=(), **context: Any):
        super().__init__(detail, offset=offset, expected=sorted(expected), **context)
        self.offset = offset
        self.expected = sorted(expected)


class ExpressionEvaluationError(SubFinslerError):
    def __init__(self, detail: str, offset: int, **context: Any):
        super().__init__(detail, offset=offset, **context)
        self.offset = offset

"""
Exception hierarchy for the engine.

Every error carries a short stable ``code`` that the command line front end
prints as ``error[<code>]: <message>``.
"""


class EngineError(Exception):
    """Base class for all engine errors."""

    code = "engine"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    def one_line(self) -> str:
        return f"error[{self.code}]: {self.message}"


class PoleError(EngineError, ValueError):
    """Gamma evaluated at zero or a negative integer."""

    code = "pole"


class ArgumentRangeError(EngineError, ValueError):
    """Argument outside the supported evaluation range."""

    code = "range"


class NonEvaluableKernelError(EngineError, ValueError):
    """Pointwise evaluation requested for the h0 marker."""

    code = "h0-pointwise"


class OrderOverflowError(EngineError, ValueError):
    code = "order-overflow"


class ZeroLeadingCoefficientError(EngineError, ValueError):
    code = "zero-leading"


class NotRepresentableError(EngineError, ValueError):
    """Kernel has no single power-series form."""

    code = "series-unavailable"


class DivergenceError(EngineError):
    """Numeric Laplace tail did not fall below tolerance."""

    code = "divergence"


class NonIntegrableError(EngineError, ValueError):
    code = "non-integrable"


class GridTooCoarseError(EngineError, ValueError):
    code = "grid-coarse"


class MissingInitialValueError(EngineError, ValueError):
    code = "missing-f0"


class MissingDerivativeError(EngineError, ValueError):
    code = "missing-derivative"


class ParameterRangeError(EngineError, ValueError):
    code = "parameter"


class ExtrapolationError(EngineError):
    """Limit at t = 0 could not be estimated stably."""

    code = "extrapolation"


class ExpressionSyntaxError(EngineError, ValueError):
    code = "syntax"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(EngineError, ValueError):
    code = "identifier"

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier '{name}' at offset {offset}")
        self.name = name
        self.offset = offset


class UnsupportedDerivativeError(EngineError, ValueError):
    code = "derivative"


class KernelSpecError(EngineError, ValueError):
    """Malformed kernel spec file or shorthand."""

    code = "spec"

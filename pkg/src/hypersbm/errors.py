"""Exception hierarchy shared by every module."""


class HypersbmError(Exception):
    """Base class for all errors raised by the package."""


class DuplicateNode(HypersbmError, ValueError):
    pass


class NodeOutOfRange(HypersbmError, ValueError):
    pass


class BadEdgeSize(HypersbmError, ValueError):
    pass


class ParseError(HypersbmError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WeightOutOfRange(HypersbmError, ValueError):
    pass


class InvalidParams(HypersbmError, ValueError):
    pass


class InvalidPartition(HypersbmError, ValueError):
    pass


class InvalidWeights(HypersbmError, ValueError):
    pass


class ShapeMismatch(HypersbmError, ValueError):
    pass


class BudgetExceeded(HypersbmError, RuntimeError):
    pass


class EigenNoConvergence(HypersbmError, RuntimeError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)

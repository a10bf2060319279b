"""
Exception hierarchy for schwinger_adapt.

Every error raised deliberately by the library derives from
SchwingerAdaptError so the CLI can map it to a single exit code.
"""


class SchwingerAdaptError(Exception):
    """Base exception for all library errors"""
    pass


class DimensionError(SchwingerAdaptError):
    """Raised when operands act on different qubit counts or parameter lengths differ"""
    pass


class CapacityError(SchwingerAdaptError):
    """Raised when a request exceeds a configured size guard"""
    pass


class NonHermitianError(SchwingerAdaptError):
    """Raised when a Hermitian operator is required"""
    pass


class ConvergenceError(SchwingerAdaptError):
    """Raised when an iterative solver does not reach its tolerance"""
    pass


class PoolConstructionError(SchwingerAdaptError):
    """Raised when an operator pool cannot be built"""
    pass


class TilingError(SchwingerAdaptError):
    """Raised when tile selection fails"""
    pass


class ReplayError(SchwingerAdaptError):
    """Raised when a trajectory cannot be replayed against a model or pool"""
    pass


class SerializationError(SchwingerAdaptError):
    """Raised when a dump file cannot be parsed"""
    pass

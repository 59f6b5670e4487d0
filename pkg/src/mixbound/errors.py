"""Exception hierarchy shared by all mixbound modules."""


class MixboundError(Exception):
    """Base class for all library errors."""


class ShapeError(MixboundError):
    """Dimension or length mismatch between inputs."""


class SupportViolationError(MixboundError):
    """An atom or base measure falls outside the admissible location ball."""


class DegenerateMeasureError(MixboundError):
    """Weights are all zero or otherwise cannot form a probability measure."""


class EigenvalueBoxError(MixboundError):
    """A scale matrix has an eigenvalue outside [lambda_min, lambda_max]."""


class DomainError(MixboundError):
    """Scalar argument outside the mathematical domain of a function."""


class SizeError(MixboundError):
    """Problem instance exceeds the supported size."""


class UnsupportedDimensionError(MixboundError):
    """Operation restricted to specific ambient dimensions."""


class UnsupportedKernelError(MixboundError):
    """Operation not defined for the requested kernel family."""


class InsufficientBudgetError(MixboundError):
    """Evaluation budget below the minimum required for the estimator."""


class NoKnownRateError(MixboundError):
    """No explicit posterior contraction rate exists for this kernel."""


class PreconditionError(MixboundError):
    """A caller-facing precondition was violated."""


class ConvergenceError(MixboundError):
    """An iterative solver failed to converge within its iteration cap."""

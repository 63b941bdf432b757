"""Exception and warning types shared across the package."""


class OpticsError(Exception):
    """Base class for all errors raised by xpcomm."""


class InvalidArgumentError(OpticsError, ValueError):
    pass


class TruncationRiskError(OpticsError, ValueError):
    pass


class ZeroNormError(OpticsError, ValueError):
    pass


class IncompatibleGridError(OpticsError, ValueError):
    pass


class InvalidRegionError(OpticsError, ValueError):
    pass


class FourierPlaneCoverageError(OpticsError, ValueError):
    pass


class PreconditionError(OpticsError, ValueError):
    pass


class IncompatibleAxesError(OpticsError, ValueError):
    pass


class PipelineError(OpticsError):
    """An element failed inside a pipeline; ``index`` locates it."""

    def __init__(self, index, element, cause):
        self.index = index
        self.element = element
        self.cause = cause
        super().__init__(f"element {index} ({element!r}) failed: {cause}")


class ArmError(OpticsError):
    """A pipeline failed inside one interferometer arm."""

    def __init__(self, arm, cause):
        self.arm = arm
        self.cause = cause
        super().__init__(f"{arm} arm failed: {cause}")


class ClippingWarning(UserWarning):
    """Non-negligible power fell outside an element's operating region."""

"""Exception types shared across the simulator."""


class SpinSNNError(Exception):
    """Base class for all simulator errors."""


class ConfigError(SpinSNNError, ValueError):
    pass


class NumericalDivergenceError(SpinSNNError, FloatingPointError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class StabilityError(SpinSNNError, ValueError):
    def __init__(self, message, bound):
        super().__init__(message)
        self.bound = bound


class NonConvergenceError(SpinSNNError, RuntimeError):
    def __init__(self, message, torque):
        super().__init__(message)
        self.torque = torque


class AmbiguousStateError(SpinSNNError, ValueError):
    pass


class CalibrationError(SpinSNNError, ValueError):
    pass


class ProgrammingOverdriveError(SpinSNNError, ValueError):
    pass


class PulseMisuseError(SpinSNNError, ValueError):
    pass


class BiasRangeError(SpinSNNError, ValueError):
    pass


class ParseError(SpinSNNError, ValueError):
    """Malformed binary input; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CheckpointError(SpinSNNError, ValueError):
    pass

"""Exception hierarchy shared by every module.

Each class maps to one CLI exit code (see :mod:`gastereo.cli`).
"""


class StereoError(Exception):
    """Base class for all errors raised by gastereo."""


class DimensionError(StereoError, ValueError):
    pass


class ConfigError(StereoError, ValueError):
    pass


class NumericError(StereoError, ArithmeticError):
    pass


class EmptyGroundTruthError(StereoError, ValueError):
    pass


class ParseError(StereoError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class WriteError(StereoError):
    pass


class TrainingError(StereoError):
    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step

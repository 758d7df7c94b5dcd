"""Exception types. ``NumericalError`` subclasses map to CLI exit code 2."""


class DimensionError(ValueError):
    def __init__(self, what, expected, actual):
        super().__init__(f"{what}: expected size {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class NonInvertibleMapError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class UnstableTimeStepError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class NotSPDError(NumericalError):
    pass

"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad shapes, out-of-range labels, malformed configs or files."""


class NumericError(ArithmeticError):
    """A computation produced or received non-finite values."""


class DivergenceError(NumericError):
    """Training loss became non-finite."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch

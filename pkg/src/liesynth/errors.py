"""Exception types. CLI exit codes key off the two base classes."""


class ValidationError(ValueError):
    """Bad input: wrong shape, out-of-domain value, malformed file."""


class NumericFailure(ArithmeticError):
    """A numerical procedure could not meet its contract."""


class DimensionError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class NotInSpanError(ValidationError):
    pass


class DegenerateBasisError(NumericFailure):
    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class SamplePointError(NumericFailure):
    pass


class WeiNormanBreakdown(NumericFailure):
    def __init__(self, message, time=None, trace=None):
        super().__init__(message)
        self.time = time
        self.trace = trace


class UnrealizableStageError(NumericFailure):
    def __init__(self, message, schedule=None):
        super().__init__(message)
        self.schedule = schedule

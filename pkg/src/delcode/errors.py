"""Exception hierarchy shared by all modules."""


class DelcodeError(Exception):
    """Base class for library errors."""


class WeightNotDivisibleError(DelcodeError, ValueError):
    """A differential sequence whose L1-weight is not a multiple of q."""


class InvalidPatternError(DelcodeError, ValueError):
    pass


class NotAGoodTripleError(DelcodeError, ValueError):
    pass


class BudgetExceededError(DelcodeError):
    """An exhaustive job would enumerate more words than allowed."""


class DecodeError(DelcodeError):
    pass


class NoCandidateError(DecodeError):
    pass


class AmbiguousDecodeError(DecodeError):
    def __init__(self, message, survivors=()):
        super().__init__(message)
        self.survivors = tuple(survivors)


class MalformedCodewordError(DecodeError):
    pass


class InfeasibleParamsError(DelcodeError, ValueError):
    pass

"""q-ary codes correcting a burst of deletions or a localized deletion."""
from .errors import (AmbiguousDecodeError, BudgetExceededError, DecodeError, DelcodeError,
                     InfeasibleParamsError, InvalidPatternError, MalformedCodewordError,
                     NoCandidateError, NotAGoodTripleError, WeightNotDivisibleError)
from .seqcore import LocalizedPattern, Word, psi, psi_inverse

__all__ = [
    "AmbiguousDecodeError", "BudgetExceededError", "DecodeError", "DelcodeError",
    "InfeasibleParamsError", "InvalidPatternError", "LocalizedPattern",
    "MalformedCodewordError", "NoCandidateError", "NotAGoodTripleError",
    "WeightNotDivisibleError", "Word", "psi", "psi_inverse",
]

"""Exception hierarchy shared by every ranklab module."""


class RanklabError(Exception):
    """Base class for all ranklab errors."""


class NotABijection(RanklabError, ValueError):
    pass


class CutoffOutOfRange(RanklabError, ValueError):
    pass


class DimensionMismatch(RanklabError, ValueError):
    pass


class NonFiniteScore(RanklabError, ValueError):
    pass


class BinaryRelevanceRequired(RanklabError, ValueError):
    pass


class IndexOutOfRange(RanklabError, IndexError):
    pass


class PointOutOfRange(RanklabError, IndexError):
    pass


class EmptySample(RanklabError, ValueError):
    pass


class NotRealizable(RanklabError):
    """No hypothesis attains zero empirical loss on the given sample."""


class FamilyCutoffMismatch(RanklabError, ValueError):
    pass


class FamilyMismatch(RanklabError, ValueError):
    pass


class NoPositiveLoss(RanklabError):
    """The loss is identically zero on the enumerated space."""


class VersionSpaceEmpty(RanklabError):
    """An update removed every hypothesis from a version space."""


class NoExperts(RanklabError, ValueError):
    pass


class TooManyHypotheses(RanklabError, ValueError):
    pass


class ConfigError(RanklabError, ValueError):
    pass


class BudgetError(RanklabError):
    """Base for errors raised before an enumeration that would be too large."""


class SearchSpaceTooLarge(BudgetError):
    pass


class BudgetExceeded(BudgetError):
    pass


class ExpertBudgetExceeded(BudgetError):
    def __init__(self, required: int, cap: int):
        super().__init__(f"expert pool needs {required} experts, cap is {cap}")
        self.required = required
        self.cap = cap

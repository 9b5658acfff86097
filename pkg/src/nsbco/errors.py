"""Exception hierarchy shared by every module."""


class BcoError(Exception):
    """Base class for all errors raised by nsbco."""


class InvalidArgument(BcoError, ValueError):
    pass


class ProtocolViolation(BcoError):
    """Rounds were started out of order."""


class BudgetExceeded(BcoError):
    """More oracle queries than the feedback model allows in one round.

    Seeing this from any algorithm is a defect in that algorithm.
    """


class InfeasibleQuery(BcoError):
    pass


class EstimatorBoundViolation(BcoError):
    """A gradient estimate exceeded the norm bound used to scale a surrogate."""


class HorizonTooSmall(InvalidArgument):
    pass


class UnsupportedScenario(BcoError):
    pass


class IncompleteLedger(BcoError):
    pass

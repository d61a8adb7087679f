"""Exception types raised across the package."""


class PeriodFnError(Exception):
    """Base class for all package errors."""


class TrajectoryLeftDomain(PeriodFnError):
    pass


class IntegratorStalled(PeriodFnError):
    pass


class NotDifferentiable(PeriodFnError):
    pass


class NotC1(PeriodFnError):
    pass


class FDNonConvergent(PeriodFnError):
    pass


class IllConditioned(PeriodFnError):
    pass


class InconsistentRepair(PeriodFnError):
    """Two neighbours demand different multipliers at one grid point."""

    def __init__(self, message, edge=None):
        super().__init__(message)
        self.edge = edge


class NotInSaturation(PeriodFnError):
    pass


class FieldVanishesOffFix(PeriodFnError):
    pass


class QuadratureNonConverged(PeriodFnError):
    pass


class TrivialAction(PeriodFnError):
    pass


class UnknownName(PeriodFnError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidParam(PeriodFnError, ValueError):
    pass


class ConfigError(PeriodFnError, ValueError):
    pass


class ExprSyntaxError(PeriodFnError, SyntaxError):
    """Parse failure; ``offset`` is the byte offset into the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class NonIntegerExponent(ExprSyntaxError):
    pass

"""Exception types raised across the package."""


class BIEError(Exception):
    """Base class for all solver errors."""


class DegenerateSpeed(BIEError):
    pass


class InvalidCurve(BIEError):
    pass


class IntersectingCurves(BIEError):
    pass


class NotNested(BIEError):
    pass


class BadSigma(BIEError):
    pass


class DegenerateInterface(BIEError):
    """Neighbouring regions have equal conductivity, so the interface carries no jump."""


class EmptyPanel(BIEError):
    pass


class CoincidentPoints(BIEError):
    pass


class IndexMismatch(BIEError):
    pass


class CompatibilityViolation(BIEError):
    """Boundary data whose integral over an interface does not vanish."""


class DegenerateSegment(BIEError):
    pass


class RankFailure(BIEError):
    pass


class OutOfDomain(BIEError):
    pass


class OutOfRange(BIEError):
    pass


class ConfigError(BIEError):
    pass

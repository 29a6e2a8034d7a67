"""Exception types shared across the package."""


class BCGError(Exception):
    """Base class for all package errors."""


class FieldMismatch(BCGError):
    pass


class DimensionMismatch(BCGError):
    pass


class DivisionByZero(BCGError):
    pass


class NotPositiveDefinite(BCGError):
    pass


class SingularTransform(BCGError):
    pass


class OriginNotInterior(BCGError):
    pass


class UnsupportedKind(BCGError):
    pass


class UnsupportedBodyForProjection(BCGError):
    pass


class NotUnimodular(BCGError):
    pass


class NotUnitScalarInvariant(BCGError):
    pass


class RejectionBudgetExceeded(BCGError):
    pass


class RetryExhausted(BCGError):
    pass


class SchemaError(BCGError):
    pass

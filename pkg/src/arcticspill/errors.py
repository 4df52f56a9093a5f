"""Exception hierarchy shared across the package."""


class ArcticSpillError(Exception):
    """Base class for all package errors."""


class ValidationError(ArcticSpillError):
    """Input data failed a structural or semantic check."""


class EmptySet(ValidationError):
    pass


class ProbabilityMassError(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NegativeParameter(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, path, line, column, message):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{self.path}:{line}:{column}: {message}")


class SchemaError(ValidationError):
    pass


class CrossRefError(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class NonPositiveVolume(ValidationError):
    pass


class InfeasibleDataWarning(UserWarning):
    """Some spill-scenario pair cannot be reached within the response window."""


class SolverError(ArcticSpillError):
    """The solver could not produce a usable answer."""


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


class TooLarge(SolverError):
    pass


class IntegralityError(SolverError):
    pass


class ObjectiveMismatch(SolverError):
    pass


class OrderingViolation(SolverError):
    """Value-of-information ordering EWS >= RP >= EEV was broken."""


class AllRunsFailed(SolverError):
    pass

"""Exception hierarchy shared by every module."""


class TypeKError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(TypeKError, ValueError):
    pass


class EvaluationError(TypeKError, ArithmeticError):
    """A growth function produced a non-finite or non-positive value."""


class DomainError(EvaluationError):
    pass


class MapSyntaxError(TypeKError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class UnknownIdentifierError(MapSyntaxError):
    def __init__(self, name, line=None, column=None):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", line, column)


class MapDefinitionError(TypeKError, ValueError):
    """Map file is syntactically fine but semantically invalid."""


class UnsupportedDimensionError(DimensionError):
    pass


class HypothesisViolation(TypeKError):
    """A standing assumption needed by an algorithm does not hold numerically."""


class NotInImageError(TypeKError):
    """Newton inversion found no preimage of the target point."""

    def __init__(self, y, message="no Newton start converged"):
        self.y = y
        super().__init__(f"{message}: y={list(map(float, y))}")


class NumericalError(TypeKError, ArithmeticError):
    pass


class DegenerateNullclinesError(TypeKError):
    """Nullclines overlap along an arc; fixed points form a continuum."""


class ResolutionError(TypeKError):
    """A geometric construction did not resolve at the requested tolerance."""

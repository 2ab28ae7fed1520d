"""Exception hierarchy shared by all modules."""


class CentroaffineError(Exception):
    """Base class for every error raised by this package."""


class SingularJetError(CentroaffineError, ZeroDivisionError):
    """Division by a jet whose constant term vanishes."""


class DomainError(CentroaffineError, ValueError):
    """An elementary function was evaluated outside its domain."""

    def __init__(self, message, expr=None):
        if expr is not None:
            message = f"{message} in '{expr}'"
        super().__init__(message)
        self.expr = expr


class SingularSystemError(CentroaffineError, ArithmeticError):
    """The constant-term matrix of a jet linear system is singular."""


class NotCentroaffineError(CentroaffineError):
    """The position vector is not transversal to the tangent space."""


class NotConvexError(CentroaffineError):
    """The centroaffine metric is indefinite or degenerate."""


class OptimizerError(CentroaffineError):
    """No start of the cubic-form maximizer converged."""


class ParseError(CentroaffineError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}, column {column}: "
        super().__init__(loc + message)
        self.line = line
        self.column = column


class UnknownSurfaceError(CentroaffineError, LookupError):
    pass

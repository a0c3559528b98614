"""Exception hierarchy shared by every module.

Each error carries a stable ``code`` string and the process exit status the
CLI maps it to (2 = input error, 3 = numeric failure).
"""


class MultisymError(Exception):
    code = "error"
    exit_status = 2


class ParseError(MultisymError):
    code = "parse-error"

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class UnknownIdentifierError(ParseError):
    code = "unknown-identifier"


class IndexOutOfRangeError(ParseError):
    code = "index-out-of-range"


class DomainError(MultisymError):
    code = "domain-error"
    exit_status = 3


class UnassignedSymbolError(MultisymError):
    code = "unassigned-symbol"


class ChartMismatchError(MultisymError):
    code = "chart-mismatch"


class DimensionError(MultisymError):
    code = "dimension-error"


class InvalidConnectionError(MultisymError):
    """Connection components depending on jet or momentum coordinates."""

    code = "invalid-connection"


class ScopeError(MultisymError):
    """Input outside the supported class (e.g. momenta not affine in v)."""

    code = "out-of-scope"


class NotInvertibleError(MultisymError):
    code = "not-invertible"
    exit_status = 3


class ConvergenceError(MultisymError):
    code = "newton-nonconvergence"
    exit_status = 3


class CFLError(MultisymError):
    code = "cfl-violation"
    exit_status = 3


class SchemaError(MultisymError):
    code = "schema-error"

    def __init__(self, message, path=""):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path

"""Exception hierarchy shared by all modules."""


class EddyMsfemError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(EddyMsfemError, ValueError):
    pass


class InvalidArgumentError(EddyMsfemError, ValueError):
    pass


class DomainError(EddyMsfemError, ValueError):
    """A point or coordinate lies outside the region where a quantity is defined."""


class ConfigurationError(EddyMsfemError, ValueError):
    """Problem setup or configuration file is inconsistent.

    ``field`` names the offending configuration key and ``line`` its line
    in the source file when known.
    """

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)


class SingularSystemError(EddyMsfemError, ArithmeticError):
    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message if pivot is None else f"{message} (pivot {pivot})")


class InternalConsistencyError(EddyMsfemError, RuntimeError):
    pass

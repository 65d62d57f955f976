"""Exception hierarchy.

Every error raised by the package derives from :class:`AuditError`, so callers
can catch one type. The CLI maps the classes below to exit codes.
"""


class AuditError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class DistributionError(AuditError, ValueError):
    """A finite-support distribution is malformed."""


class DomainError(AuditError, ValueError):
    """An input lies outside the domain of a hypothesis or concept class."""


class SpecError(AuditError, ValueError):
    """A strategic-class, property or family specification is invalid."""


class DataError(AuditError, ValueError):
    """Feature arrays have inconsistent shapes or non-finite entries."""


class GroupError(AuditError, ValueError):
    """A statistical-parity computation needs both groups to be non-empty."""


class QueryError(AuditError, ValueError):
    """A bound query is missing fields or has out-of-range values."""


class SizeError(AuditError, ValueError):
    """An exhaustive computation exceeds its configured size cap."""

    exit_code = 4


class ConfigError(AuditError, ValueError):
    """An experiment configuration is inconsistent."""


class ParseError(AuditError, ValueError):
    """A dataset or concept-class file could not be parsed.

    ``row`` is 1-based and counts the header as row 1; ``column`` is the
    column name (or ``None`` for whole-row problems).
    """

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ReportVersionError(AuditError, ValueError):
    """A report file carries an unsupported schema major version."""


class IOFailure(AuditError, OSError):
    """Filesystem failure, carrying the offending path."""

    exit_code = 3

    def __init__(self, message, path):
        self.path = path
        super().__init__(f"{message}: {path}")

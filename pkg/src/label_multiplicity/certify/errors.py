"""
Exception hierarchy for the certifier and its loaders.

Every error raised on purpose by this package derives from one of three
roots so the CLI can map them to exit codes without catching unrelated
failures.

Classes
-------
MultiplicityError : Root for numerical and perturbation-set errors.
DataError : Root for dataset ingestion errors.
ConfigError : Root for configuration file errors.
"""

from __future__ import annotations


class MultiplicityError(Exception):
    """Base class for errors raised by the certification core."""


class DimensionMismatch(MultiplicityError, ValueError):
    """Array lengths or shapes disagree."""


class InvalidInterval(MultiplicityError, ValueError):
    """An interval with ``lo > hi`` or a non-finite endpoint."""


class SingularSystem(MultiplicityError):
    """The regularized normal equations cannot be factored reliably."""


class InvalidRule(MultiplicityError):
    """A bias rule is malformed (e.g. its delta template excludes 0)."""


class BadFraction(MultiplicityError):
    """A fractional budget outside ``[0, 1]``."""


class InvalidSpec(MultiplicityError):
    """A perturbation set violates its invariants."""


class NotBinary(MultiplicityError):
    """A classification-only operation was applied to regression labels."""


class NegativeEpsilon(MultiplicityError):
    """A robustness radius below zero."""


class BudgetExceeded(MultiplicityError):
    """An exhaustive enumeration would exceed its evaluation budget."""


class NotSquare(MultiplicityError):
    """Theta membership needs a square coefficient map."""


class Singular(MultiplicityError):
    """A coefficient map could not be inverted."""


class DataError(Exception):
    """Base class for dataset ingestion errors."""


class ParseError(DataError):
    """
    A value could not be parsed.

    Parameters
    ----------
    message : str
        Description of the problem.
    path : str
        File being read.
    row : int or None
        1-based line number in the file (header is line 1).
    column : str or None
        Column name.
    """

    def __init__(
        self,
        message: str,
        path: str = "",
        row: int | None = None,
        column: str | None = None,
    ) -> None:
        location = path
        if row is not None:
            location += f":{row}"
        if column is not None:
            location += f" [{column}]"
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.row = row
        self.column = column


class SchemaMismatch(DataError):
    """The file does not match its declared schema."""


class BadMagic(DataError):
    """An IDX file starts with the wrong magic number."""


class TruncatedFile(DataError):
    """A binary file ends before its declared payload."""


class EmptyDataset(DataError):
    """A dataset with no rows or no feature columns."""


class ConfigError(Exception):
    """A configuration file or flag value is invalid."""

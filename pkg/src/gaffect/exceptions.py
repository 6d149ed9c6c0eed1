"""Error taxonomy.

The CLI maps these onto exit codes: usage problems exit 1, ``DataError``
(including bad inputs) exits 2, ``ModelError`` exits 3.
"""


class GaffectError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(GaffectError, ValueError):
    """An argument violates an operation's preconditions."""


class EmptyInputError(InvalidInputError):
    """An aggregate or evaluation was asked to run on zero items."""


class DegenerateGeometryError(InvalidInputError):
    """All landmark distances are zero, so max-normalization is undefined."""


class DataError(GaffectError):
    """An on-disk input (feature file, score file, manifest) is invalid."""


class ParseError(DataError):
    """A file failed to parse; carries the path and 1-based line number."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class UnclassifiableRecordError(DataError):
    """A record has no faces and no full-image score, so nothing can score it."""


class ModelError(GaffectError):
    """A model artifact is missing, corrupt, or inconsistent with the data."""


class NoUsablePredictorError(ModelError):
    """Every slot that scored a record carries zero weight."""

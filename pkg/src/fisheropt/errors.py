"""Exception types shared across the package."""


class FisheroptError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(FisheroptError, ValueError):
    """An argument violates a documented precondition."""


class ShapeError(InvalidInputError):
    """Array dimensions are inconsistent with the declared layout."""


class DomainError(InvalidInputError):
    """A value lies outside its admissible domain (e.g. selection weights)."""


class DuplicateItemError(InvalidInputError):
    """Two catalog entries share a name."""


class NumericFailureError(FisheroptError, RuntimeError):
    """An iterative numerical procedure failed to converge.

    Carries ``iterations``, the count reached before giving up.
    """

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NotPositiveDefiniteError(FisheroptError, ValueError):
    """Cholesky factorization hit a non-positive pivot.

    ``pivot_index`` is the 0-based index of the failing pivot; ``context``
    optionally names the covariance block (e.g. its time point).
    """

    def __init__(self, message, pivot_index=None, context=None):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.context = context


class IncompleteDataError(FisheroptError, ValueError):
    """An ingested file is missing required cells.

    ``missing`` lists up to the first 10 missing (channel, time) keys.
    """

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class InvalidValueError(FisheroptError, ValueError):
    """An ingested file contains a non-finite value.

    ``row`` and ``column`` identify the offending cell.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NoDataError(FisheroptError, ValueError):
    """A results directory or record set is empty."""


class ConfigError(FisheroptError, ValueError):
    """A run configuration violates its schema.

    ``pointer`` is a JSON-pointer path to the offending field.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer

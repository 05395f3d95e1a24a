"""Exception hierarchy shared by the engine modules.

Errors fall into two buckets that the CLI maps to exit codes: operation
syntax problems (usage, exit 2) and everything data-related (exit 1).
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class OpSyntaxError(EngineError):
    """Operation text does not parse; carries the offending token position."""

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at token {position})")
        self.position = position


class DataError(EngineError):
    """Base class for data-level failures (bad files, bad columns, bad types)."""


class InputFileError(DataError):
    """CSV file missing or unreadable."""


class ParseError(DataError):
    """Malformed CSV content (ragged rows, duplicate headers)."""


class EmptyInputError(DataError):
    """CSV contained zero data rows."""


class IndexOutOfRangeError(DataError):
    """Row index set refers to positions outside its frame."""


class AllNullError(DataError):
    """A column holds no non-null values where at least one is required."""


class UnknownColumnError(DataError):
    """Referenced column does not exist in the frame."""


class TypeMismatchError(DataError):
    """Operation applied to a column of an incompatible dtype."""


class SchemaMismatchError(DataError):
    """Union inputs do not share an identical schema."""


class ArityError(DataError):
    """Number of input frames does not match the operation."""


class EmptyDistributionError(DataError):
    """A distribution with an empty support was passed where mass is required."""


class AttributeNotInInputError(DataError):
    """Output attribute cannot be traced back to any input frame."""


class SingleGroupError(DataError):
    """Diversity needs at least two groups."""


class ZeroMeanError(DataError):
    """Coefficient of variation is undefined for a zero-mean column."""


class NotNumericError(DataError):
    """Numeric partitioning requested on a non-numeric column."""


class NotManyToOneError(DataError):
    """Mapping column does not stand in a many-to-one relation to the keyed one."""


class DegeneratePartitionError(DataError):
    """All bins of a partition scored identically; standardization undefined."""


class UndefinedContributionError(DataError):
    """Interestingness is undefined on the reduced step, so contribution is too."""


class MismatchedAttributeSetsError(DataError):
    """Ranking comparison received score lists over different attribute sets."""

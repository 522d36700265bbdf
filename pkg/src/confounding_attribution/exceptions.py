"""Exception hierarchy.

Argument and data-contract violations subclass :obj:`ValueError`
so callers that only care about bad input can catch that.
"""
from typing import Optional


class ConfoundingAttributionError(Exception):
    """Base class of every error raised by this package."""


###############################
##### Data model / ingest #####
###############################
class InvalidDataset(ConfoundingAttributionError, ValueError):
    pass


class MissingColumn(InvalidDataset):
    def __init__(self, column: str):
        super().__init__(f'Column "{column}" not found in header.')
        self.column = column


class NonNumericCell(InvalidDataset):
    def __init__(self, row: int, col: str, value: Optional[str] = None):
        super().__init__(f"Non-numeric or missing cell at row {row}, column {col!r}: {value!r}")
        self.row = row
        self.col = col


class NonBinaryTreatment(InvalidDataset):
    pass


class EmptyArm(InvalidDataset):
    pass


class WidthMismatch(ConfoundingAttributionError, ValueError):
    pass


class LengthMismatch(ConfoundingAttributionError, ValueError):
    pass


class InvalidSpec(ConfoundingAttributionError, ValueError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"Invalid value for `{field}`: {reason}")
        self.field = field


class InvalidConfig(ConfoundingAttributionError, ValueError):
    pass


######################
##### Regression #####
######################
class EmptyTrainingSet(ConfoundingAttributionError, ValueError):
    pass


class CellCardinalityExceeded(ConfoundingAttributionError, ValueError):
    pass


###################
##### Shapley #####
###################
class DimensionTooLarge(ConfoundingAttributionError, ValueError):
    pass


class BudgetTooSmall(ConfoundingAttributionError, ValueError):
    pass


class SingularSystem(RuntimeWarning):
    """Emitted when a least-squares system needed ridge regularization."""


##################
##### Oracle #####
##################
class ZeroMassSubgroup(ConfoundingAttributionError, ValueError):
    pass


class DegenerateArm(ConfoundingAttributionError, ValueError):
    pass


class IncompleteTable(ConfoundingAttributionError, ValueError):
    pass


###################
##### Metrics #####
###################
class ZeroTotalMass(ConfoundingAttributionError, ValueError):
    pass


class EmptyConfounderSet(ConfoundingAttributionError, ValueError):
    pass


class InconsistentWidth(ConfoundingAttributionError, ValueError):
    pass


class NoGroundTruth(ConfoundingAttributionError, ValueError):
    pass


class MissingRuns(ConfoundingAttributionError, FileNotFoundError):
    pass

"""Exception hierarchy.

Three families map onto the CLI exit codes: configuration problems (2),
data problems (3) and estimation failures (4).
"""


class ProgAdjustError(Exception):
    exit_code = 4


class ConfigError(ProgAdjustError):
    exit_code = 2


class DataError(ProgAdjustError, ValueError):
    exit_code = 3


class EstimationError(ProgAdjustError, ValueError):
    exit_code = 4


# --- data -----------------------------------------------------------------

class MissingColumn(DataError):
    pass


class NonBinaryTreatment(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class DegenerateArm(DataError, EstimationError):
    pass


class EmptyCovariateOverlap(DataError):
    pass


class BadFoldCount(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DuplicateName(DataError):
    pass


class CovariateNameMismatch(DataError):
    pass


class ModelCovariateMismatch(CovariateNameMismatch):
    pass


class SchemaError(DataError):
    pass


# --- learners / estimation ------------------------------------------------

class EmptyData(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class FeatureCountMismatch(DataError):
    pass


class TooFewRows(EstimationError):
    pass


class RankDeficientDesign(EstimationError):
    pass


class TooFewReps(EstimationError):
    pass


class ScenarioFailed(EstimationError):
    pass

"""
Errors - exception hierarchy shared by every module, plus CLI exit codes
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


class FairBniError(Exception):
    """Base class for all library errors"""

    exit_code = EXIT_FAILURE


class ValidationError(FairBniError):
    """Input data or arguments violate a documented invariant"""

    exit_code = EXIT_VALIDATION


class DimensionError(ValidationError):
    """Vector or matrix shapes do not agree"""


class ParseError(ValidationError):
    """
    A data file could not be parsed

    Args:
        path (str): File being parsed
        row (int or None): 1-based data row (header excluded)
        column (str or None): Column name
        message (str): What went wrong
    """

    def __init__(self, path, row, column, message):
        self.path = str(path)
        self.row = row
        self.column = column
        location = self.path
        if row is not None:
            location += f", row {row}"
        if column is not None:
            location += f", column '{column}'"
        super().__init__(f"{location}: {message}")


class DegenerateDataError(ValidationError):
    """Data cannot support the requested fit (empty subgroup, constant treatment, ...)"""


class SingularityError(FairBniError):
    """Propensity fit diverged, usually from perfect separation"""


class RankDeficiencyError(FairBniError):
    """
    Linear system too ill-conditioned to solve

    Args:
        message (str): Description
        columns (list): Names of the columns implicated in the collinearity
    """

    def __init__(self, message, columns=()):
        self.columns = list(columns)
        if self.columns:
            message = f"{message} (collinear columns: {', '.join(self.columns)})"
        super().__init__(message)


class InfeasibleError(FairBniError):
    """No policy satisfies the fixed-coordinate and budget constraints"""

    exit_code = EXIT_INFEASIBLE


class CalibrationError(FairBniError):
    """Intercept calibration could not bracket its target"""


class SimulationError(FairBniError):
    """Too many Monte Carlo replications failed"""


class SolverError(FairBniError):
    """Internal LP failure (iteration cap, unboundedness on a boxed program)"""

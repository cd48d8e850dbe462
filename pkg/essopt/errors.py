"""
Exception hierarchy for essopt.

Every error raised on purpose by the package derives from EssoptError and
carries the process exit code the command line reports for it.
"""

from typing import Optional

from .status import (
    EXIT_CONFIG_ERROR, EXIT_INFEASIBLE, EXIT_INTERNAL_ERROR, EXIT_SOLVER_LIMIT
)


class EssoptError(Exception):
    """Base class for essopt errors."""

    exit_code = EXIT_INTERNAL_ERROR


# ---------------- INPUT / CONFIG ---------------
class ConfigError(EssoptError, ValueError):
    """Invalid user input: configuration, parameters or data files."""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, field: Optional[str] = None):
        """
        Initialize a new configuration error.

        Args:
            message: Human readable description
            field: Dotted path of the offending field, if known
        """
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class HorizonError(ConfigError):
    """Invalid optimization horizon."""


class ProfileError(ConfigError):
    """Invalid PV/load profile data."""

    def __init__(self, message: str, row: Optional[int] = None, field: Optional[str] = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        if field is not None:
            prefix += f"field {field}: "
        ConfigError.__init__(self, prefix + message)
        self.field = field


class TariffError(ConfigError):
    """Invalid tariff, feed-in policy or carbon model."""


class ParameterError(ConfigError):
    """Invalid battery or grid parameters."""


class WeightsError(ConfigError):
    """Objective weights that are negative or do not sum to one."""


# ---------------- MODEL / SOLVER ---------------
class ModelError(EssoptError, ValueError):
    """Invalid MILP model construction or usage."""


class LPParseError(ModelError):
    """Malformed LP text."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class InfeasibleError(EssoptError):
    """The model or schedule has no feasible point."""

    exit_code = EXIT_INFEASIBLE


class SolverLimitError(EssoptError):
    """The solver stopped on a node or time limit without proving optimality."""

    exit_code = EXIT_SOLVER_LIMIT


class ScheduleError(EssoptError):
    """A schedule cannot be built or evaluated."""

    exit_code = EXIT_INFEASIBLE


# ---------------- ORACLE -----------------------
class OracleSizeError(EssoptError, ValueError):
    """The instance is too large to enumerate."""


class CertificationError(EssoptError):
    """The MILP solver disagrees with the brute-force oracle."""

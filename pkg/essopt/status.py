"""
Process exit codes and solver status names for essopt.
"""

from enum import Enum

# ---------------- EXIT CODES -------------------
EXIT_OK = 0
EXIT_INTERNAL_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER_LIMIT = 4

EXIT_STATUS_NAMES = {
    EXIT_OK: "OK", EXIT_INTERNAL_ERROR: "Internal Error", EXIT_CONFIG_ERROR: "Config Error",
    EXIT_INFEASIBLE: "Infeasible", EXIT_SOLVER_LIMIT: "Solver Limit"
}


# ---------------- SOLVER STATUS ----------------
class SolutionStatus(str, Enum):
    """Outcome of an LP or MILP solve."""
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NODE_LIMIT = "NodeLimit"
    GAP_LIMIT = "GapLimit"

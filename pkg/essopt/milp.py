"""
Mixed-integer linear programming model for essopt.

This module provides the Model container (variables, linear constraints and
a minimization objective), the solver configuration and the Solution record.
The engines live in simplex.py (LP relaxation) and branch_and_bound.py.
"""

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .errors import ModelError
from .status import SolutionStatus

# Names must be LP-format identifiers
NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\[\]]*$")

Expr = Union[Mapping[int, float], Iterable[Tuple[int, float]]]


class VarKind(str, Enum):
    """Variable domain."""
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Sense(str, Enum):
    """Constraint sense."""
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    id: int
    kind: VarKind
    lb: float
    ub: float
    name: str


@dataclass(frozen=True)
class Constraint:
    id: int
    terms: Tuple[Tuple[int, float], ...]
    sense: Sense
    rhs: float
    name: str


class Model:
    """A minimization MILP with continuous and binary variables."""

    def __init__(self, name: str = "model"):
        """
        Initialize an empty model.

        Args:
            name: Model name, written as a comment in LP exports
        """
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self._names: Dict[str, int] = {}
        self._constraint_names: Dict[str, int] = {}

    def add_variable(self, kind: VarKind, lb: float, ub: float, name: str) -> int:
        """
        Add a variable and return its id (ids follow insertion order).

        Raises:
            ModelError: on inverted bounds, binary bounds outside [0, 1],
                an invalid name or a duplicate name
        """
        kind = VarKind(kind)
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub):
            raise ModelError(f"variable {name}: NaN bound")
        if lb > ub:
            raise ModelError(f"variable {name}: inverted bounds [{lb}, {ub}]")
        if kind is VarKind.BINARY and (lb < 0.0 or ub > 1.0):
            raise ModelError(f"binary variable {name}: bounds [{lb}, {ub}] not within [0, 1]")
        if not NAME_PATTERN.match(name):
            raise ModelError(f"invalid variable name {name!r}")
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        var_id = len(self.variables)
        self.variables.append(Variable(var_id, kind, lb, ub, name))
        self._names[name] = var_id
        return var_id

    def _normalize(self, expr: Expr) -> Tuple[Tuple[int, float], ...]:
        items = expr.items() if isinstance(expr, Mapping) else expr
        merged: Dict[int, float] = {}
        for var_id, coef in items:
            if not isinstance(var_id, (int, np.integer)) or not 0 <= var_id < len(self.variables):
                raise ModelError(f"unknown variable id {var_id!r}")
            coef = float(coef)
            if not math.isfinite(coef):
                raise ModelError(f"non-finite coefficient {coef!r} on {self.variables[var_id].name}")
            merged[int(var_id)] = merged.get(int(var_id), 0.0) + coef
        return tuple((v, c) for v, c in merged.items() if c != 0.0)

    def add_constraint(self, expr: Expr, sense: Union[Sense, str], rhs: float,
                       name: Optional[str] = None) -> int:
        """
        Add `expr sense rhs` and return the constraint id.

        Zero coefficients are dropped; repeated variables are summed.

        Raises:
            ModelError: on an unknown variable, a non-finite number or a
                duplicate constraint name
        """
        terms = self._normalize(expr)
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ModelError(f"non-finite right-hand side {rhs!r}")
        con_id = len(self.constraints)
        if name is None:
            name = f"c{con_id}"
        if not NAME_PATTERN.match(name):
            raise ModelError(f"invalid constraint name {name!r}")
        if name in self._constraint_names:
            raise ModelError(f"duplicate constraint name {name!r}")
        self.constraints.append(Constraint(con_id, terms, Sense(sense), rhs, name))
        self._constraint_names[name] = con_id
        return con_id

    def set_objective(self, expr: Expr) -> None:
        """Replace the objective (always minimized)."""
        self.objective = dict(self._normalize(expr))

    def variable_id(self, name: str) -> int:
        return self._names[name]

    @property
    def binary_ids(self) -> List[int]:
        return [v.id for v in self.variables if v.kind is VarKind.BINARY]

    def check_bounded(self) -> None:
        """
        Raises:
            ModelError: if any variable has an infinite bound
        """
        for v in self.variables:
            if not (math.isfinite(v.lb) and math.isfinite(v.ub)):
                raise ModelError(f"variable {v.name} is unbounded; every variable needs finite bounds")

    def to_arrays(self):
        """
        Arrays (c, A, senses, b, lb, ub) for the simplex engine.

        A is a scipy.sparse CSR matrix with one row per constraint and
        senses holds one Sense per row.
        """
        n = len(self.variables)
        m = len(self.constraints)
        c = np.zeros(n)
        for var_id, coef in self.objective.items():
            c[var_id] = coef
        rows: List[int] = []
        cols: List[int] = []
        data: List[float] = []
        b = np.zeros(m)
        senses = []
        for i, con in enumerate(self.constraints):
            for var_id, coef in con.terms:
                rows.append(i)
                cols.append(var_id)
                data.append(coef)
            b[i] = con.rhs
            senses.append(con.sense)
        A = sp.csr_matrix((data, (rows, cols)), shape=(m, n))
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return c, A, senses, b, lb, ub

    def objective_value(self, values: np.ndarray) -> float:
        return float(sum(coef * values[var_id] for var_id, coef in self.objective.items()))

    def max_violation(self, values: np.ndarray) -> float:
        """Largest constraint or bound violation of a point (absolute units)."""
        worst = 0.0
        for v in self.variables:
            worst = max(worst, v.lb - values[v.id], values[v.id] - v.ub)
        for con in self.constraints:
            lhs = sum(coef * values[var_id] for var_id, coef in con.terms)
            if con.sense is Sense.LE:
                worst = max(worst, lhs - con.rhs)
            elif con.sense is Sense.GE:
                worst = max(worst, con.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - con.rhs))
        return worst

    def __repr__(self) -> str:
        return (f"Model({self.name!r}, {len(self.variables)} variables, "
                f"{len(self.binary_ids)} binary, {len(self.constraints)} constraints)")


@dataclass(frozen=True)
class SolverConfig:
    """
    Tolerances and limits for the LP and MILP engines.

    Attributes:
        feasibility_tol: Primal feasibility tolerance (row-scaled units)
        integrality_tol: Distance from 0/1 accepted as integral
        relative_gap: Relative optimality gap that closes the search
        absolute_gap: Absolute optimality gap that closes the search
        node_limit: Maximum branch-and-bound nodes
        time_limit_seconds: Optional wall-clock limit
        optimality_tol: Reduced-cost tolerance of the simplex method
        degenerate_threshold: Degenerate pivots in a row before Bland's rule takes over
        max_simplex_iterations: Iteration cap per LP
        refactor_interval: Pivots between basis refactorizations
    """

    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    relative_gap: float = 1e-6
    absolute_gap: float = 1e-9
    node_limit: int = 1_000_000
    time_limit_seconds: Optional[float] = None
    branching_rule: str = "most-fractional"
    node_order: str = "best-bound"
    optimality_tol: float = 1e-9
    degenerate_threshold: int = 50
    max_simplex_iterations: int = 200_000
    refactor_interval: int = 100

    def __post_init__(self):
        for name in ("feasibility_tol", "integrality_tol", "relative_gap", "absolute_gap", "optimality_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ModelError(f"solver.{name} must be positive, got {value!r}")
        if self.node_limit < 1:
            raise ModelError(f"solver.node_limit must be at least 1, got {self.node_limit}")
        if self.time_limit_seconds is not None and self.time_limit_seconds <= 0:
            raise ModelError(f"solver.time_limit_seconds must be positive, got {self.time_limit_seconds}")
        if self.branching_rule != "most-fractional":
            raise ModelError(f"unsupported branching rule {self.branching_rule!r}")
        if self.node_order != "best-bound":
            raise ModelError(f"unsupported node order {self.node_order!r}")


@dataclass(frozen=True)
class SolveStats:
    nodes: int = 0
    simplex_iterations: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class Solution:
    """
    Result of an LP or MILP solve.

    values is indexed by variable id and is None when no feasible point is
    known. bound is the best proven lower bound on the optimum.
    """

    status: SolutionStatus
    values: Optional[np.ndarray]
    objective_value: Optional[float]
    bound: Optional[float]
    gap: Optional[float]
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def is_optimal(self) -> bool:
        return self.status is SolutionStatus.OPTIMAL

    def value(self, var_id: int) -> float:
        if self.values is None:
            raise ModelError(f"solution has no values (status {self.status.value})")
        return float(self.values[var_id])


def relative_gap(incumbent: float, bound: float) -> float:
    """(incumbent - bound) / max(|incumbent|, 1), never negative."""
    return max(0.0, incumbent - bound) / max(abs(incumbent), 1.0)


# Free-function spellings of the model API
def add_variable(model: Model, kind: VarKind, lb: float, ub: float, name: str) -> int:
    return model.add_variable(kind, lb, ub, name)


def add_constraint(model: Model, expr: Expr, sense: Union[Sense, str], rhs: float,
                   name: Optional[str] = None) -> int:
    return model.add_constraint(expr, sense, rhs, name)

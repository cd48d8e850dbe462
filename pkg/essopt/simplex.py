"""
Bounded-variable dual simplex method for essopt.

Solves min c.x subject to A x {<=,=,>=} b, lb <= x <= ub. Rows are
equilibrated (each divided by its largest absolute coefficient) and every
row gets a logical variable s = b - A x whose bounds encode the sense, so
the working system is [A | I] (x, s) = b with only bounds left to satisfy.

A cold start puts every structural variable at the bound its cost prefers,
which is dual feasible for any cost vector; an infinite bound is replaced
by a wide box, and an optimum resting on that box reports an unbounded LP.
A warm start reuses the basis of an earlier solve of the same LP after
bounds change, so a branch-and-bound child is usually a few pivots away
from its parent's optimum.

The basis is held as a sparse LU factorization (SuperLU through scipy)
followed by product-form eta updates; small bases keep a dense explicit
inverse instead. Leaving rows are priced by largest scaled infeasibility
and the entering column comes from a Harris two-pass ratio test. After a
run of degenerate pivots both choices fall back to Bland's smallest-index
rule until progress resumes.
"""

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import EssoptError
from .logging import get_logger
from .milp import Model, Sense, SolveStats, Solution, SolverConfig
from .status import SolutionStatus

logger = get_logger("essopt.simplex")

LOWER, UPPER, BASIC = 0, 1, 2

# Pivot elements smaller than this are treated as zero in the ratio test
PIVOT_TOL = 1e-9

# Stand-in for an infinite bound of a structural variable
BOX = 1e9

# Bases with at most this many rows keep a dense inverse
DENSE_BASIS_ROWS = 300


class SimplexError(EssoptError):
    """Numerical failure or iteration limit inside the simplex method."""


class SimplexTimeLimit(SimplexError):
    """The wall-clock deadline passed in the middle of a solve."""


@dataclass(frozen=True)
class Basis:
    """Basic column of every row and LOWER/UPPER/BASIC status of every column."""

    indices: np.ndarray
    status: np.ndarray


@dataclass
class LPResult:
    status: SolutionStatus
    x: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int
    basis: Optional[Basis] = None


# ---------------- FACTORIZATIONS --------------
class _DenseInverse:
    """Explicit inverse of a small basis, updated by rank-one pivots."""

    def __init__(self, B: sp.spmatrix):
        try:
            self.inv = np.linalg.inv(B.toarray())
        except np.linalg.LinAlgError:
            raise SimplexError("singular basis") from None
        self.updates = 0

    def ftran(self, a: np.ndarray) -> np.ndarray:
        return self.inv @ a

    def btran(self, c: np.ndarray) -> np.ndarray:
        return c @ self.inv

    def update(self, r: int, w: np.ndarray) -> None:
        row = self.inv[r] / w[r]
        self.inv -= np.outer(w, row)
        self.inv[r] = row
        self.updates += 1


class _SparseLU:
    """SuperLU factors of a basis followed by product-form eta updates."""

    def __init__(self, B: sp.spmatrix):
        try:
            self.lu = splu(sp.csc_matrix(B))
        except RuntimeError:
            # SuperLU reports an exactly singular factor this way
            raise SimplexError("singular basis") from None
        self.etas: List[Tuple[int, np.ndarray]] = []

    @property
    def updates(self) -> int:
        return len(self.etas)

    def ftran(self, a: np.ndarray) -> np.ndarray:
        v = self.lu.solve(a)
        for r, w in self.etas:
            vr = v[r] / w[r]
            v -= vr * w
            v[r] = vr
        return v

    def btran(self, c: np.ndarray) -> np.ndarray:
        u = np.array(c, dtype=float)
        for r, w in reversed(self.etas):
            u[r] -= (w @ u - u[r]) / w[r]
        return self.lu.solve(u, trans="T")

    def update(self, r: int, w: np.ndarray) -> None:
        self.etas.append((r, w))


# ---------------- LINEAR PROGRAM ---------------
class LinearProgram:
    """A row-scaled LP whose variable bounds can be changed between solves."""

    def __init__(self, c: np.ndarray, A, senses: Sequence[Sense], b: np.ndarray,
                 config: Optional[SolverConfig] = None):
        """
        Prepare an LP for repeated solves.

        Args:
            c: Objective coefficients (minimized)
            A: Constraint matrix, dense or scipy.sparse, one row per constraint
            senses: Sense of each row
            b: Right-hand sides
            config: Solver tolerances and limits
        """
        self.config = config or SolverConfig()
        self.c = np.asarray(c, dtype=float)
        b = np.asarray(b, dtype=float)
        if sp.issparse(A):
            A = sp.csr_matrix(A, dtype=float)
        else:
            A = sp.csr_matrix(np.asarray(A, dtype=float).reshape(len(b), len(self.c)))
        senses = [Sense(s) for s in senses]

        if A.nnz:
            row_max = abs(A).max(axis=1).toarray().ravel()
        else:
            row_max = np.zeros(len(b))
        keep = row_max > 0.0
        # Rows without coefficients are satisfied or not regardless of x
        self.trivially_infeasible = False
        tol = self.config.feasibility_tol
        for i in np.flatnonzero(~keep):
            if senses[i] is Sense.LE and b[i] < -tol:
                self.trivially_infeasible = True
            elif senses[i] is Sense.GE and b[i] > tol:
                self.trivially_infeasible = True
            elif senses[i] is Sense.EQ and abs(b[i]) > tol:
                self.trivially_infeasible = True

        rows = np.flatnonzero(keep)
        scale = 1.0 / row_max[rows]
        A = sp.csr_matrix(sp.diags(scale) @ A[rows]) if rows.size else sp.csr_matrix((0, len(self.c)))
        self.b = b[rows] * scale
        self.senses = [senses[i] for i in rows]
        self.m, self.n = A.shape
        self.slack_lb = np.array([-np.inf if s is Sense.GE else 0.0 for s in self.senses])
        self.slack_ub = np.array([0.0 if s is not Sense.LE else np.inf for s in self.senses])
        self.cost_scale = max(1.0, float(np.abs(self.c).max())) if self.n else 1.0
        self.cost = np.concatenate([self.c / self.cost_scale, np.zeros(self.m)])
        if self.m:
            # Working matrix [A | I] by columns, and its transpose by rows for pricing
            self.K = sp.hstack([A, sp.identity(self.m)], format="csc")
            self.K.sort_indices()
            self.KT = sp.csr_matrix(self.K.T)

    def solve(self, lb: np.ndarray, ub: np.ndarray, warm: Optional[Basis] = None,
              deadline: Optional[float] = None) -> LPResult:
        """
        Solve with structural bounds lb <= x <= ub.

        Args:
            lb: Lower bounds of the structural variables
            ub: Upper bounds of the structural variables
            warm: A basis returned by an earlier solve of this LP
            deadline: time.perf_counter() value after which the solve stops

        Returns:
            An LPResult with status Optimal or Infeasible; an Optimal result
            carries the final basis for later warm starts

        Raises:
            SimplexTimeLimit: when the deadline passes
            SimplexError: on the iteration limit, a singular basis or an
                unbounded LP
        """
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if self.trivially_infeasible or np.any(lb > ub + self.config.feasibility_tol):
            return LPResult(SolutionStatus.INFEASIBLE, None, None, 0)
        if self.m == 0:
            x = np.where(self.c >= 0.0, lb, ub)
            if not np.all(np.isfinite(x[self.c != 0.0])):
                raise SimplexError("LP relaxation is unbounded")
            x = np.where(np.isfinite(x), x, 0.0)
            return LPResult(SolutionStatus.OPTIMAL, x, float(self.c @ x), 0)
        if warm is not None:
            try:
                return _DualSimplex(self, lb, ub, deadline).solve(warm)
            except SimplexTimeLimit:
                raise
            except SimplexError as e:
                logger.debug(f"warm start failed ({e}); solving from the slack basis")
        return _DualSimplex(self, lb, ub, deadline).solve(None)


class _DualSimplex:
    """State of one dual simplex solve."""

    def __init__(self, lp: LinearProgram, lb: np.ndarray, ub: np.ndarray, deadline: Optional[float]):
        self.lp = lp
        self.config = lp.config
        self.deadline = deadline
        self.n, self.m = lp.n, lp.m
        self.boxed_lb = ~np.isfinite(lb)
        self.boxed_ub = ~np.isfinite(ub)
        self.original_lb, self.original_ub = lb, ub
        self.lb = np.concatenate([np.where(self.boxed_lb, -BOX, lb), lp.slack_lb])
        self.ub = np.concatenate([np.where(self.boxed_ub, BOX, ub), lp.slack_ub])
        self.movable = self.ub - self.lb > 0.0
        self.iterations = 0

    # ---------------- SETUP ------------------------
    def _start(self, warm: Optional[Basis]) -> None:
        n, m = self.n, self.m
        if warm is None:
            self.basis = np.arange(n, n + m)
            self.status = np.full(n + m, BASIC, dtype=np.int8)
            self.status[:n] = np.where(self.lp.cost[:n] >= 0.0, LOWER, UPPER)
        else:
            self.basis = warm.indices.copy()
            self.status = warm.status.copy()
        self.x = np.where(self.status == UPPER, self.ub, self.lb)
        self._refactor()
        if warm is not None:
            self._restore_dual_feasibility()

    def _column(self, j: int) -> np.ndarray:
        K = self.lp.K
        col = np.zeros(self.m)
        start, end = K.indptr[j], K.indptr[j + 1]
        col[K.indices[start:end]] = K.data[start:end]
        return col

    def _refactor(self) -> None:
        B = self.lp.K[:, self.basis]
        self.factor = _DenseInverse(B) if self.m <= DENSE_BASIS_ROWS else _SparseLU(B)
        self._recompute_primal()
        y = self.factor.btran(self.lp.cost[self.basis])
        self.d = self.lp.cost - self.lp.KT @ y
        self.d[self.basis] = 0.0

    def _recompute_primal(self) -> None:
        self.x[self.basis] = 0.0
        xb = self.factor.ftran(self.lp.b - self.lp.K @ self.x)
        if not np.all(np.isfinite(xb)):
            raise SimplexError("non-finite basic solution after refactorization")
        self.x[self.basis] = xb

    def _restore_dual_feasibility(self) -> None:
        """Move wrongly signed nonbasic columns to their other bound."""
        tol = self.config.optimality_tol
        nonbasic = (self.status != BASIC) & self.movable
        wrong_low = nonbasic & (self.status == LOWER) & (self.d < -tol)
        wrong_up = nonbasic & (self.status == UPPER) & (self.d > tol)
        if not (wrong_low.any() or wrong_up.any()):
            return
        if not (np.all(np.isfinite(self.ub[wrong_low])) and np.all(np.isfinite(self.lb[wrong_up]))):
            raise SimplexError("warm basis is not dual feasible")
        self.status[wrong_low] = UPPER
        self.status[wrong_up] = LOWER
        self.x[wrong_low] = self.ub[wrong_low]
        self.x[wrong_up] = self.lb[wrong_up]
        self._recompute_primal()

    # ---------------- PRICING ----------------------
    def _leaving_row(self, bland: bool) -> Tuple[int, bool]:
        """Most infeasible basic row and whether it sits above its upper bound."""
        xb = self.x[self.basis]
        lo = self.lb[self.basis]
        hi = self.ub[self.basis]
        with np.errstate(invalid="ignore"):
            below = np.where(xb < lo, (lo - xb) / (1.0 + np.abs(lo)), 0.0)
            above = np.where(xb > hi, (xb - hi) / (1.0 + np.abs(hi)), 0.0)
        infeasibility = np.maximum(below, above)
        rows = np.flatnonzero(infeasibility > self.config.feasibility_tol)
        if rows.size == 0:
            return -1, False
        if bland:
            r = int(rows[np.argmin(self.basis[rows])])
        else:
            r = int(rows[np.argmax(infeasibility[rows])])
        return r, bool(above[r] > 0.0)

    def _entering(self, alpha: np.ndarray, leaving_up: bool, bland: bool) -> int:
        """Harris ratio test over the nonbasic columns; -1 when the row is a proof of infeasibility."""
        signed = alpha if leaving_up else -alpha
        status = self.status
        candidates = self.movable & (((status == LOWER) & (signed > PIVOT_TOL))
                                     | ((status == UPPER) & (signed < -PIVOT_TOL)))
        idx = np.flatnonzero(candidates)
        if idx.size == 0:
            return -1
        magnitude = np.abs(alpha[idx])
        d = self.d[idx]
        slack = np.where(status[idx] == LOWER, np.maximum(d, 0.0), np.maximum(-d, 0.0))
        ratios = slack / magnitude
        if bland:
            ties = idx[ratios <= ratios.min() + 1e-12]
            return int(ties.min())
        limit = ((slack + self.config.optimality_tol) / magnitude).min()
        within = ratios <= limit
        return int(idx[within][np.argmax(magnitude[within])])

    # ---------------- ITERATION --------------------
    def _iterate(self) -> SolutionStatus:
        config = self.config
        bland = False
        degenerate = 0
        unit = np.zeros(self.m)
        while True:
            if self.iterations >= config.max_simplex_iterations:
                raise SimplexError(f"simplex iteration limit {config.max_simplex_iterations} reached")
            if self.deadline is not None and time.perf_counter() > self.deadline:
                raise SimplexTimeLimit("time limit reached during an LP solve")
            if self.factor.updates >= config.refactor_interval:
                self._refactor()

            r, leaving_up = self._leaving_row(bland)
            if r < 0:
                return SolutionStatus.OPTIMAL
            unit[r] = 1.0
            rho = self.factor.btran(unit)
            unit[r] = 0.0
            alpha = self.lp.KT @ rho
            q = self._entering(alpha, leaving_up, bland)
            if q < 0:
                return SolutionStatus.INFEASIBLE

            w = self.factor.ftran(self._column(q))
            if abs(w[r] - alpha[q]) > 1e-6 * (1.0 + abs(w[r])) or abs(w[r]) < PIVOT_TOL:
                if self.factor.updates == 0:
                    raise SimplexError(f"unstable pivot {w[r]!r} on a fresh factorization")
                logger.debug(f"pivot mismatch {w[r]!r} vs {alpha[q]!r}, refactoring")
                self._refactor()
                continue

            p = int(self.basis[r])
            theta = self.d[q] / alpha[q]
            if (leaving_up and theta < 0.0) or (not leaving_up and theta > 0.0):
                theta = 0.0
            target = self.ub[p] if leaving_up else self.lb[p]
            step = (self.x[p] - target) / w[r]

            self.d -= theta * alpha
            self.x[self.basis] -= step * w
            self.x[q] += step
            self.x[p] = target
            self.basis[r] = q
            self.status[q] = BASIC
            self.status[p] = UPPER if leaving_up else LOWER
            self.d[self.basis] = 0.0
            self.d[p] = -theta
            self.factor.update(r, w)
            self.iterations += 1

            if abs(theta) <= 1e-12:
                degenerate += 1
                if degenerate > config.degenerate_threshold and not bland:
                    logger.debug(f"{degenerate} degenerate pivots, switching to Bland's rule")
                    bland = True
            else:
                degenerate = 0
                bland = False

    def solve(self, warm: Optional[Basis]) -> LPResult:
        self._start(warm)
        if self._iterate() is SolutionStatus.INFEASIBLE:
            return LPResult(SolutionStatus.INFEASIBLE, None, None, self.iterations)
        self._refactor()

        n = self.n
        status, d = self.status[:n], self.d[:n]
        on_box = ((status == LOWER) & self.boxed_lb) | ((status == UPPER) & self.boxed_ub)
        if np.any(on_box & (np.abs(d) > self.config.optimality_tol)):
            raise SimplexError("LP relaxation is unbounded")

        x = np.clip(self.x[:n], self.original_lb, self.original_ub)
        basis = Basis(self.basis.copy(), self.status.copy())
        return LPResult(SolutionStatus.OPTIMAL, x, float(self.lp.c @ x), self.iterations, basis)


def solve_lp_relaxation(model: Model, config: Optional[SolverConfig] = None) -> Solution:
    """
    Solve the continuous relaxation of `model` (binaries relaxed to [0, 1]).

    Raises:
        ModelError: if a variable has an infinite bound
    """
    config = config or SolverConfig()
    model.check_bounded()
    started = time.perf_counter()
    c, A, senses, b, lb, ub = model.to_arrays()
    result = LinearProgram(c, A, senses, b, config).solve(lb, ub)
    stats = SolveStats(nodes=1, simplex_iterations=result.iterations,
                       wall_time=time.perf_counter() - started)
    logger.debug(f"LP relaxation of {model.name}: {result.status.value} after {result.iterations} iterations")
    if result.status is not SolutionStatus.OPTIMAL:
        return Solution(result.status, None, None, None, None, stats)
    return Solution(SolutionStatus.OPTIMAL, result.x, result.objective, result.objective, 0.0, stats)

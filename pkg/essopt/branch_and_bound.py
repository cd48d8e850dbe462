"""
Best-bound branch-and-bound over the binary variables of a Model.

The root relaxation is solved from the slack basis; every child starts
from its parent's optimal basis with one more binary fixed, so the dual
simplex usually needs only a few pivots per node. Nodes are ordered by LP
bound. Bounds closer than the closing gap count as equal, and equal bounds
go to the deepest node first, then by creation order. The branching
variable is the most fractional binary with ties going to the lowest id.
The search is sequential and deterministic.
"""

import heapq
import itertools
import math
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .logging import get_logger
from .milp import Model, SolveStats, Solution, SolverConfig, relative_gap
from .simplex import Basis, LinearProgram, LPResult, SimplexTimeLimit, solve_lp_relaxation
from .status import SolutionStatus

logger = get_logger("essopt.milp")


@dataclass
class _Node:
    lb: np.ndarray
    ub: np.ndarray
    basis: Basis
    branch_var: int
    bound: float
    depth: int


def _prune_tolerance(incumbent: float, config: SolverConfig) -> float:
    return max(config.absolute_gap, config.relative_gap * max(abs(incumbent), 1.0))


def _most_fractional(x: np.ndarray, binaries: np.ndarray, tol: float) -> Optional[int]:
    """Binary id farthest from {0, 1}, or None when all are integral within tol."""
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    k = int(np.argmax(frac))
    if frac[k] <= tol:
        return None
    return int(binaries[k])


class _Search:
    """Open nodes, incumbent and counters of one solve."""

    def __init__(self, model: Model, config: SolverConfig, binaries: np.ndarray, root_bound: float):
        self.model = model
        self.config = config
        self.binaries = binaries
        # Width of the bound buckets inside which nodes count as tied
        self.quantum = max(config.absolute_gap, config.relative_gap * max(abs(root_bound), 1.0))
        self.heap: List[Tuple[float, int, int, _Node]] = []
        self.counter = itertools.count()
        self.incumbent = math.inf
        self.incumbent_x: Optional[np.ndarray] = None
        self.nodes = 1
        self.iterations = 0

    @property
    def tolerance(self) -> float:
        return _prune_tolerance(self.incumbent, self.config)

    def prunable(self, bound: float) -> bool:
        return self.incumbent_x is not None and bound >= self.incumbent - self.tolerance

    def offer(self, result: LPResult, lb: np.ndarray, ub: np.ndarray, depth: int) -> None:
        """Take an optimal relaxation as incumbent or queue it as an open node."""
        if self.prunable(result.objective):
            return
        branch_var = _most_fractional(result.x, self.binaries, self.config.integrality_tol)
        if branch_var is None:
            if result.objective < self.incumbent:
                self.incumbent, self.incumbent_x = result.objective, result.x
                logger.debug(f"new incumbent {self.incumbent:.6f} at depth {depth}, {self.nodes} nodes")
            return
        key = math.floor(result.objective / self.quantum)
        node = _Node(lb, ub, result.basis, branch_var, result.objective, depth)
        heapq.heappush(self.heap, (key, -depth, next(self.counter), node))

    def closed(self) -> bool:
        """True when every open node is within the gap of the incumbent."""
        if self.incumbent_x is None or not self.heap:
            return self.incumbent_x is not None
        return self.heap[0][0] * self.quantum >= self.incumbent - self.tolerance

    def open_bound(self) -> float:
        return min((entry[3].bound for entry in self.heap), default=math.inf)


def solve(model: Model, config: Optional[SolverConfig] = None) -> Solution:
    """
    Solve a MILP to proven optimality within the configured gap.

    Args:
        model: A bounded model
        config: Tolerances and limits

    Returns:
        A Solution; on a node or time limit the status is NodeLimit or
        GapLimit and values hold the incumbent if one was found

    Raises:
        ModelError: if a variable has an infinite bound
    """
    config = config or SolverConfig()
    binaries = np.array(model.binary_ids, dtype=int)
    if binaries.size == 0:
        return solve_lp_relaxation(model, config)

    model.check_bounded()
    started = time.perf_counter()
    deadline = None if config.time_limit_seconds is None else started + config.time_limit_seconds
    c, A, senses, b, lb, ub = model.to_arrays()
    lp = LinearProgram(c, A, senses, b, config)

    try:
        root = lp.solve(lb, ub, deadline=deadline)
    except SimplexTimeLimit:
        logger.warning(f"{model.name}: time limit reached in the root relaxation")
        stats = SolveStats(1, 0, time.perf_counter() - started)
        return Solution(SolutionStatus.GAP_LIMIT, None, None, None, None, stats)
    if root.status is not SolutionStatus.OPTIMAL:
        logger.info(f"{model.name}: root relaxation infeasible")
        stats = SolveStats(1, root.iterations, time.perf_counter() - started)
        return Solution(SolutionStatus.INFEASIBLE, None, None, None, None, stats)

    search = _Search(model, config, binaries, root.objective)
    search.iterations = root.iterations
    search.offer(root, lb, ub, 0)
    limit_status: Optional[SolutionStatus] = None

    while search.heap and not search.closed():
        if search.nodes >= config.node_limit:
            limit_status = SolutionStatus.NODE_LIMIT
            break
        _, _, _, node = heapq.heappop(search.heap)
        if search.prunable(node.bound):
            continue
        try:
            for value in (0.0, 1.0):
                child_lb, child_ub = node.lb.copy(), node.ub.copy()
                child_lb[node.branch_var] = child_ub[node.branch_var] = value
                result = lp.solve(child_lb, child_ub, warm=node.basis, deadline=deadline)
                search.nodes += 1
                search.iterations += result.iterations
                if result.status is SolutionStatus.OPTIMAL:
                    search.offer(result, child_lb, child_ub, node.depth + 1)
        except SimplexTimeLimit:
            # The node stays open so its bound still counts
            heapq.heappush(search.heap, (math.floor(node.bound / search.quantum), -node.depth,
                                         next(search.counter), node))
            limit_status = SolutionStatus.GAP_LIMIT
            break

    incumbent, incumbent_x = search.incumbent, search.incumbent_x
    open_bound = search.open_bound()
    best_bound = min(open_bound, incumbent)
    stats = SolveStats(search.nodes, search.iterations, time.perf_counter() - started)

    if limit_status is not None:
        logger.warning(f"{model.name}: stopped on {limit_status.value} after {search.nodes} nodes")
        if incumbent_x is None:
            return Solution(limit_status, None, None, open_bound, None, stats)
        return Solution(limit_status, incumbent_x, incumbent, best_bound,
                        relative_gap(incumbent, best_bound), stats)

    if incumbent_x is None:
        logger.info(f"{model.name}: no integral point, {search.nodes} nodes")
        return Solution(SolutionStatus.INFEASIBLE, None, None, None, None, stats)

    gap = relative_gap(incumbent, best_bound)
    logger.info(f"{model.name}: optimal {incumbent:.6f}, {search.nodes} nodes, "
                f"{search.iterations} simplex iterations, {stats.wall_time:.2f}s")
    return Solution(SolutionStatus.OPTIMAL, incumbent_x, incumbent, best_bound, gap, stats)

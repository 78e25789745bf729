from collections import deque
from typing import Optional, Sequence

import numpy as np

from loopflow.logger import get_logger
from loopflow.roadmap import Roadmap
from loopflow.schemas import LogLevel, PlannerParams
from loopflow.workspace import Workspace

from ._budget import SearchBudget
from ._duplicates import ConfigurationIndex
from ._successors import CandidateTable, build_candidates, generate_configuration
from ._types import MOVE_TOL, ProblemQuery

# Safety distance added to every clearance test of the search.
SAFETY_EPS = 1e-9


class SearchNode:
    """
    One configuration in the search tree.

    `constraints` holds the lazily generated constraint sequences; each one
    binds a prefix of `order` to candidate slots. The empty constraint comes
    first and children of a constraint are only generated once it is popped.
    """

    __slots__ = ("config", "parent", "depth", "order", "constraints", "settled", "g", "table")

    def __init__(self, config: np.ndarray, parent: Optional["SearchNode"], order: np.ndarray):
        self.config = config
        self.parent = parent
        self.depth = 0 if parent is None else parent.depth + 1
        self.order = order
        self.constraints: deque = deque([()])
        if parent is None:
            self.settled = np.zeros(len(config), dtype=int)
        else:
            moved = np.linalg.norm(config - parent.config, axis=1) > MOVE_TOL
            self.settled = np.where(moved, self.depth, parent.settled)
        self.g = int(self.settled.sum())
        self.table: Optional[CandidateTable] = None

    def path(self) -> np.ndarray:
        steps = []
        node = self
        while node is not None:
            steps.append(node.config)
            node = node.parent
        return np.stack(steps[::-1])


class ConfigurationSearch:
    """
    Depth-first search over joint configurations with lazy successor generation.

    Used for the first solution (`run(stop_at_first=True)`) and, with the
    incumbent flowtime as bound, as branch-and-bound refinement over the same
    open stack and visited set. `randomized` re-draws agent orders at random
    (Monte-Carlo restarts); otherwise agents farther from their goal go first.
    """

    def __init__(
        self,
        query: ProblemQuery,
        ws: Workspace,
        rms: Sequence[Roadmap],
        params: PlannerParams,
        rng: np.random.Generator,
        randomized: bool = False,
        verbose: bool = False,
    ):
        self.query = query
        self.ws = ws
        self.rms = list(rms)
        self.params = params
        self.rng = rng
        self.randomized = randomized
        self.verbose = verbose
        self.logger = get_logger("loopflow.planner")
        self.r_plan = query.r_agent + SAFETY_EPS
        self.visited: dict[bytes, ConfigurationIndex] = {}
        self.stack: list[SearchNode] = []
        self.expansions = 0
        self.max_depth = 0
        self.best: Optional[SearchNode] = None
        self.bound: Optional[int] = None
        self._fixed_horizon = query.fixed_horizon
        self._push(self._node(query.starts, None))

    def _log(self, message: str, level: LogLevel = LogLevel.INFO):
        if self.verbose:
            if level == LogLevel.INFO:
                self.logger.info(message)
            elif level == LogLevel.ERROR:
                self.logger.error(message)
            else:
                self.logger.warning(message)

    # ---------- Nodes ---------- #
    def _order(self, cost: np.ndarray) -> np.ndarray:
        n = len(cost)
        if self.randomized:
            return self.rng.permutation(n)
        return np.lexsort((np.arange(n), -cost))

    def _node(self, config: np.ndarray, parent: Optional[SearchNode]) -> SearchNode:
        table = build_candidates(config, self.rms, self.query, self.ws, self.r_plan, self.rng)
        node = SearchNode(config, parent, self._order(table.cost))
        node.table = table
        return node

    def _visited_for(self, config: np.ndarray) -> ConfigurationIndex:
        # Keyed by the at-goal mask: configurations only merge when the same agents are at their targets.
        key = np.packbits(self.query.at_goal(config)).tobytes()
        index = self.visited.get(key)
        if index is None:
            index = self.visited[key] = ConfigurationIndex(self.query.n, self.params.eps_dup)
        return index

    def seen(self, config: np.ndarray) -> bool:
        return self._visited_for(config).contains(config)

    def _push(self, node: SearchNode) -> None:
        self._visited_for(node.config).add(node.config, node)
        self.stack.append(node)
        self.max_depth = max(self.max_depth, node.depth)

    def seed(self, steps: np.ndarray) -> None:
        """Insert a known step sequence as a chain of nodes; the deepest becomes the top of the stack."""
        steps = np.asarray(steps, dtype=float)
        if not np.allclose(steps[0], self.stack[0].config, atol=1e-12):
            raise ValueError("seed steps must start at the query configuration")
        node = self.stack[0]
        for config in steps[1:]:
            node = self._node(np.array(config), node)
            self._push(node)
            if self.is_goal(node):
                self._accept(node)
                break

    # ---------- Goal and bound ---------- #
    def is_goal(self, node: SearchNode) -> bool:
        if node.depth < self._fixed_horizon:
            return False
        return bool(self.query.at_goal(node.config).all())

    def lower_bound(self, node: SearchNode) -> int:
        """Admissible flowtime bound: agents off-goal need at least their straight-line step count."""
        q = self.query
        gap = np.linalg.norm(node.config - q.targets, axis=1)
        off = gap > q.r_target
        need = np.ceil((gap - q.r_target) / q.d_travel - 1e-9).astype(int)
        est = np.where(off, node.depth + np.maximum(need, 1), node.settled)
        return int(est.sum())

    def tighten(self, flowtime: int) -> None:
        """Only accept goals strictly cheaper than flowtime from now on."""
        self.bound = flowtime if self.bound is None else min(self.bound, flowtime)

    def _accept(self, node: SearchNode) -> None:
        if self.bound is None or node.g < self.bound:
            self.best = node
            self.bound = node.g
            self._log(f"[SEARCH] incumbent flowtime {node.g} at depth {node.depth} after {self.expansions} expansions")

    # ---------- Main loop ---------- #
    def run(self, budget: SearchBudget, stop_at_first: bool = True) -> Optional[SearchNode]:
        """
        Continue the search until a goal is found (first-solution mode), the
        stack empties or the budget runs out. Returns the incumbent goal node.
        """
        found_before = self.best
        fixed = self.query.fixed_paths is not None
        while self.stack:
            if budget.exhausted():
                break
            node = self.stack[-1]

            if self.is_goal(node) and (self.bound is None or node.g < self.bound):
                self._accept(node)
                self.stack.pop()
                if stop_at_first and self.best is not found_before:
                    return self.best
                continue
            if self.bound is not None and self.lower_bound(node) >= self.bound:
                self.stack.pop()
                continue
            if not node.constraints:
                self.stack.pop()
                continue

            constraint = node.constraints.popleft()
            depth = len(constraint)
            if depth < len(node.order):
                agent = int(node.order[depth])
                slots = self.rng.permutation(node.table.prefs[agent])
                for slot in slots:
                    node.constraints.append(constraint + ((agent, int(slot)),))

            budget.tick()
            self.expansions += 1
            fixed_from = self.query.fixed_at(node.depth) if fixed else None
            fixed_to = self.query.fixed_at(node.depth + 1) if fixed else None
            config = generate_configuration(node.table, node.order, constraint, self.r_plan, fixed_from, fixed_to)
            if config is None or self.seen(config):
                continue
            self._push(self._node(config, node))
        return self.best

    @property
    def exhausted(self) -> bool:
        return not self.stack

from typing import Optional, Sequence

import numpy as np

from loopflow.logger import get_logger
from loopflow.roadmap import Roadmap
from loopflow.schemas import LogLevel, PlannerParams
from loopflow.workspace import Workspace, swept_pair_distances

from ._budget import SearchBudget
from ._checker import check_plan
from ._search import SAFETY_EPS, ConfigurationSearch
from ._types import Plan, ProblemQuery, SolveStats

logger = get_logger("loopflow.planner")


def _hold(steps: np.ndarray, length: int) -> np.ndarray:
    """Extend a step sequence to `length` rows by repeating its last row."""
    if len(steps) >= length:
        return steps
    tail = np.repeat(steps[-1:], length - len(steps), axis=0)
    return np.concatenate([steps, tail])


def smooth_path(
    plan: Plan,
    agent: int,
    ws: Workspace,
    query: ProblemQuery,
    rng: np.random.Generator,
    p_skip: float = 0.2,
) -> Plan:
    """
    Shortcut one agent's moving prefix.

    Interior waypoints of steps [0, settled] are dropped independently with
    probability p_skip; the same number of points is then resampled at
    uniform arc length along the remaining polyline. The result replaces
    the path only if every step stays within d_travel, every swept segment
    is free and the swept distance to every other agent stays at least
    2 * r_agent. Otherwise the input plan is returned unchanged.
    """
    s = int(plan.settled[agent])
    if s < 2:
        return plan
    path = plan.steps[: s + 1, agent]
    keep = np.ones(s + 1, dtype=bool)
    keep[1:-1] = rng.random(s - 1) >= p_skip
    pts = path[keep]

    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    if arc[-1] <= 0.0:
        return plan
    u = np.linspace(0.0, arc[-1], s + 1)
    fresh = np.stack([np.interp(u, arc, pts[:, k]) for k in range(3)], axis=1)
    fresh[0] = path[0]
    fresh[-1] = path[-1]

    steps_len = np.linalg.norm(np.diff(fresh, axis=0), axis=1)
    if np.any(steps_len > query.d_travel * (1.0 + 1e-9)):
        return plan
    r_plan = query.r_agent + SAFETY_EPS
    if not ws.segments_free(fresh[:-1], fresh[1:], r_plan).all():
        return plan
    others = np.array([j for j in range(plan.n) if j != agent], dtype=int)
    if len(others):
        b = plan.steps[: s + 1][:, others]
        d = swept_pair_distances(fresh[:-1, None, :], fresh[1:, None, :], b[:-1], b[1:])
        if np.any(d < 2.0 * r_plan):
            return plan
    if query.fixed_paths is not None:
        f = _hold(query.fixed_paths, s + 1)[: s + 1]
        d = swept_pair_distances(fresh[:-1, None, :], fresh[1:, None, :], f[:-1], f[1:])
        if np.any(d < 2.0 * r_plan):
            return plan

    steps = np.array(plan.steps)
    steps[: s + 1, agent] = fresh
    return Plan(steps, plan.query, plan.feasible, plan.stats)


class Refiner:
    """
    Anytime improvement of a feasible plan until the budget runs out.

    Cycles through four strategies, each on a slice of the remaining budget:
    branch-and-bound continuation of the main search, Monte-Carlo restarts
    with random agent orders, large-neighbourhood search over a few agents
    with the others held as moving obstacles, and path smoothing. A new plan
    is accepted only when the independent checker passes; flowtime never
    increases and every strict improvement is appended to the trace.
    """

    def __init__(
        self,
        query: ProblemQuery,
        ws: Workspace,
        rms: Sequence[Roadmap],
        params: PlannerParams,
        rng: np.random.Generator,
        search: Optional[ConfigurationSearch] = None,
        stats: Optional[SolveStats] = None,
        verbose: bool = False,
    ):
        self.query = query
        self.ws = ws
        self.rms = list(rms)
        self.params = params
        self.rng = rng
        self.search = search
        self.stats = stats or SolveStats()
        self.verbose = verbose
        self.restarts = 0
        self.incumbent: Optional[Plan] = None
        self._clock: Optional[SearchBudget] = None

    def _log(self, message: str, level: LogLevel = LogLevel.INFO):
        if self.verbose:
            if level == LogLevel.INFO:
                logger.info(message)
            elif level == LogLevel.ERROR:
                logger.error(message)
            else:
                logger.warning(message)

    # ---------- Acceptance ---------- #
    def _consider(self, steps: np.ndarray, source: str) -> bool:
        candidate = Plan(steps, self.query, stats=self.stats).trimmed()
        if candidate.flowtime >= self.incumbent.flowtime:
            return False
        violations = check_plan(candidate, self.query, self.ws)
        if violations:
            self._log(f"[REFINE] {source} candidate rejected by checker: {violations[0].condition.value}", LogLevel.WARNING)
            return False
        candidate.feasible = True
        self.incumbent = candidate
        if self.search is not None:
            self.search.tighten(candidate.flowtime)
        self.stats.record(self._clock.elapsed_ms(), self._clock.expansions, candidate.flowtime)
        self._log(f"[REFINE] {source} improved flowtime to {candidate.flowtime}")
        return True

    # ---------- Strategies ---------- #
    def _branch_and_bound(self, budget: SearchBudget) -> bool:
        if self.search is None:
            self.search = ConfigurationSearch(self.query, self.ws, self.rms, self.params, self.rng)
            self.search.seed(self.incumbent.steps)
        if self.search.exhausted:
            return False
        self.search.tighten(self.incumbent.flowtime)
        before = self.search.best
        node = self.search.run(budget, stop_at_first=True)
        if node is not None and node is not before:
            self._consider(node.path(), "branch_and_bound")
        return True

    def _monte_carlo(self, budget: SearchBudget) -> bool:
        if self.restarts >= self.params.mc_restarts:
            return False
        self.restarts += 1
        search = ConfigurationSearch(self.query, self.ws, self.rms, self.params, self.rng, randomized=True)
        search.tighten(self.incumbent.flowtime)
        node = search.run(budget, stop_at_first=True)
        if node is not None:
            self._consider(node.path(), "monte_carlo")
        return True

    def _neighbourhood(self, budget: SearchBudget) -> bool:
        n = self.query.n
        k = min(self.params.lns_size, n - 1)
        if k < 1 or self.query.fixed_paths is not None:
            return False
        # A sub-search pruned at its root expands nothing; charge one node so the loop ends.
        budget.tick()
        plan = self.incumbent
        lengths = np.linalg.norm(np.diff(plan.steps, axis=0), axis=2).sum(axis=0) + 1e-6
        chosen = np.sort(self.rng.choice(n, size=k, replace=False, p=lengths / lengths.sum()))
        others = np.setdiff1d(np.arange(n), chosen)

        sub_query = ProblemQuery(
            starts=plan.steps[0, chosen],
            targets=self.query.targets[chosen],
            r_agent=self.query.r_agent,
            r_target=self.query.r_target,
            d_travel=self.query.d_travel,
            t=self.query.t,
            seed=self.query.seed,
            fixed_paths=plan.steps[:, others],
        )
        sub = ConfigurationSearch(sub_query, self.ws, [self.rms[i] for i in chosen], self.params, self.rng)
        sub.tighten(int(plan.settled[chosen].sum()))
        node = sub.run(budget, stop_at_first=True)
        if node is None:
            return True
        part = node.path()
        length = max(len(part), len(plan.steps))
        merged = np.empty((length, n, 3))
        merged[:, chosen] = _hold(part, length)
        merged[:, others] = _hold(plan.steps[:, others], length)
        self._consider(merged, "neighbourhood")
        return True

    def _smooth(self, budget: SearchBudget) -> bool:
        if not self.params.smoothing:
            return False
        budget.tick()
        agent = int(self.rng.integers(self.query.n))
        smoothed = smooth_path(self.incumbent, agent, self.ws, self.query, self.rng, self.params.p_skip)
        if smoothed is self.incumbent:
            return True
        if not check_plan(smoothed, self.query, self.ws):
            smoothed.feasible = True
            self.incumbent = smoothed
        return True

    # ---------- Loop ---------- #
    def run(self, plan: Plan, budget: SearchBudget) -> Plan:
        self.incumbent = plan
        self._clock = budget
        strategies = [self._branch_and_bound, self._monte_carlo, self._neighbourhood, self._smooth]
        active = list(strategies)
        while active and not budget.exhausted():
            for strategy in list(active):
                if budget.exhausted():
                    break
                if not strategy(budget.slice(0.25)):
                    active.remove(strategy)
        return self.incumbent


def refine(
    plan: Plan,
    query: ProblemQuery,
    ws: Workspace,
    params: PlannerParams,
    budget: SearchBudget,
    rng: np.random.Generator,
    rms: Optional[Sequence[Roadmap]] = None,
    search: Optional[ConfigurationSearch] = None,
    stats: Optional[SolveStats] = None,
    roadmap_params=None,
) -> Plan:
    """Improve a feasible plan until the budget runs out; the result is never worse."""
    if rms is None:
        from ._solve import build_roadmaps

        rms = build_roadmaps(query, ws, roadmap_params)
    if not budget.started:
        budget.start()
    refiner = Refiner(query, ws, rms, params, rng, search=search, stats=stats, verbose=params.verbose)
    return refiner.run(plan, budget)

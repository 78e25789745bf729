from typing import Optional, Sequence

import numpy as np

from loopflow._utils.exception import NoSolutionWithinDeadline
from loopflow.logger import get_logger
from loopflow.roadmap import Roadmap, RoadmapBuilder
from loopflow.schemas import PlannerParams, RoadmapParams
from loopflow.workspace import Workspace

from ._budget import CancelToken, SearchBudget
from ._checker import check_plan
from ._refine import Refiner
from ._search import ConfigurationSearch
from ._types import Plan, ProblemQuery, SolveStats

logger = get_logger("loopflow.planner")


def build_roadmaps(
    query: ProblemQuery,
    ws: Workspace,
    roadmap_params: Optional[RoadmapParams] = None,
    builder: Optional[RoadmapBuilder] = None,
    margin: float = 0.0,
) -> list[Roadmap]:
    """One roadmap per agent target, sharing a single lattice."""
    if builder is None:
        builder = RoadmapBuilder(ws, query.r_agent, roadmap_params)
    return [builder.build(target, query.t, margin) for target in query.targets]


def make_budget(query: ProblemQuery, params: PlannerParams, cancel: Optional[CancelToken] = None) -> SearchBudget:
    deadline = query.deadline_ms if query.deadline_ms is not None else params.deadline_ms
    nodes = query.node_budget if query.node_budget is not None else params.node_budget
    return SearchBudget(deadline_ms=deadline, node_budget=nodes, cancel=cancel)


def solve(
    query: ProblemQuery,
    ws: Workspace,
    params: Optional[PlannerParams] = None,
    rms: Optional[Sequence[Roadmap]] = None,
    roadmap_params: Optional[RoadmapParams] = None,
    rng: Optional[np.random.Generator] = None,
    budget: Optional[SearchBudget] = None,
    cancel: Optional[CancelToken] = None,
) -> Plan:
    """
    Find a plan that brings every agent within r_target of its target, then
    refine it until the budget runs out.

    Moving obstacles are frozen at `query.t`. With `query.seed_steps` the
    search starts from that step sequence (solution reuse) and goes straight
    to refinement when it already reaches the targets.

    Raises:
        NoSolutionWithinDeadline: When no goal configuration is found in budget.
        TargetBlocked: When a target is not collision-free.
    """
    params = params or PlannerParams()
    if ws.dynamic_obstacles:
        ws = ws.frozen(query.t)
    rng = rng if rng is not None else np.random.default_rng(query.seed)
    if budget is None:
        budget = make_budget(query, params, cancel)
    if not budget.started:
        budget.start()
    if rms is None:
        rms = build_roadmaps(query, ws, roadmap_params)

    stats = SolveStats()
    search = ConfigurationSearch(query, ws, rms, params, rng, verbose=params.verbose)
    if query.seed_steps is not None and len(query.seed_steps) > 0:
        search.seed(query.seed_steps)
        stats.reused = True
    node = search.best or search.run(budget, stop_at_first=True)

    stats.nodes_expanded = search.expansions
    stats.max_depth = search.max_depth
    if node is None:
        raise NoSolutionWithinDeadline(
            f"No plan for {query.n} agent(s) within budget "
            f"({search.expansions} expansions, depth {search.max_depth}).",
            nodes_expanded=search.expansions,
            max_depth=search.max_depth,
        )

    plan = Plan(node.path(), query, stats=stats)
    stats.t_first_ms = budget.elapsed_ms()
    stats.expansions_first = budget.expansions
    stats.record(stats.t_first_ms, budget.expansions, plan.flowtime)

    violations = check_plan(plan, query, ws)
    if violations:
        first = violations[0]
        logger.error(f"initial plan failed the checker: {first.condition.value} at step {first.step}")
        raise NoSolutionWithinDeadline(
            f"Search result rejected by the checker: {first.condition.value} at step {first.step}, agents {first.agents}.",
            nodes_expanded=budget.expansions,
            max_depth=search.max_depth,
            violations=violations,
        )
    plan.feasible = True

    if params.refine and not budget.exhausted():
        refiner = Refiner(query, ws, rms, params, rng, search=search, stats=stats, verbose=params.verbose)
        plan = refiner.run(plan, budget)

    stats.nodes_expanded = budget.expansions
    stats.max_depth = max(stats.max_depth, search.max_depth)
    plan.stats = stats
    return plan

from typing import Iterable, Optional

import numpy as np

from loopflow.schemas import Violation, ViolationKind
from loopflow.workspace import Workspace, pair_min_distance

from ._types import ProblemQuery

_TOL = 1e-9

ALL_CONDITIONS = frozenset(ViolationKind)


def _bounds_excess(p: np.ndarray, ws: Workspace, r: float) -> float:
    lo = ws.bounds_min + r
    hi = ws.bounds_max - r
    excess = np.maximum(lo - p, p - hi)
    if ws.planar:
        excess = excess[:2]
    return float(np.max(excess))


def check_plan(
    steps,
    query: ProblemQuery,
    ws: Workspace,
    conditions: Optional[Iterable[ViolationKind]] = None,
) -> list[Violation]:
    """
    Independent validator of a step sequence against the solution conditions.

    Checks, with exact per-shape distances evaluated at the query time:
    the start configuration, the goal radius, the per-step travel, static
    clearance of every swept agent and pairwise swept distance. Returns an
    empty list iff the plan is feasible. `steps` may be a Plan or an array
    of shape (T + 1, n, 3); an empty sequence stands for the zero-length plan
    at the query configuration.
    """
    if hasattr(steps, "steps"):
        steps = steps.steps
    steps = np.asarray(steps, dtype=float)
    if steps.size == 0:
        steps = query.starts[None, :, :]
    wanted = ALL_CONDITIONS if conditions is None else frozenset(conditions)
    r = query.r_agent
    t = query.t
    n = steps.shape[1]
    T = len(steps) - 1
    out: list[Violation] = []

    if n != query.n:
        return [
            Violation(
                condition=ViolationKind.START,
                step=0,
                agents=list(range(max(n, query.n))),
                margin=float(abs(n - query.n)),
                detail=f"plan has {n} agents, query has {query.n}",
            )
        ]

    if ViolationKind.START in wanted:
        for i in range(n):
            dev = float(np.linalg.norm(steps[0, i] - query.starts[i]))
            if dev > _TOL:
                out.append(Violation(condition=ViolationKind.START, step=0, agents=[i], margin=dev))

    if ViolationKind.GOAL in wanted:
        for i in range(n):
            gap = float(np.linalg.norm(steps[T, i] - query.targets[i])) - query.r_target
            if gap > _TOL:
                out.append(Violation(condition=ViolationKind.GOAL, step=T, agents=[i], margin=gap))

    if ViolationKind.STEP_LENGTH in wanted:
        for k in range(T):
            for i in range(n):
                length = float(np.linalg.norm(steps[k + 1, i] - steps[k, i]))
                if length > query.d_travel * (1.0 + _TOL):
                    out.append(
                        Violation(
                            condition=ViolationKind.STEP_LENGTH,
                            step=k,
                            agents=[i],
                            margin=length - query.d_travel,
                        )
                    )

    if ViolationKind.STATIC_CLEARANCE in wanted:
        for k in range(max(T, 1)):
            for i in range(n):
                a = steps[k, i]
                b = steps[min(k + 1, T), i]
                excess = max(_bounds_excess(a, ws, r), _bounds_excess(b, ws, r))
                if excess > _TOL:
                    out.append(
                        Violation(
                            condition=ViolationKind.STATIC_CLEARANCE,
                            step=k,
                            agents=[i],
                            margin=excess,
                            detail="outside workspace bounds",
                        )
                    )
                    continue
                clearance = ws.segment_clearance(a, b, t)
                if clearance <= r:
                    out.append(
                        Violation(
                            condition=ViolationKind.STATIC_CLEARANCE,
                            step=k,
                            agents=[i],
                            margin=r - clearance,
                        )
                    )

    if ViolationKind.PAIRWISE_CLEARANCE in wanted and n > 1:
        limit = 2.0 * r
        iu, ju = np.triu_indices(n, k=1)
        for k in range(max(T, 1)):
            a0 = steps[k]
            a1 = steps[min(k + 1, T)]
            # Pairs whose start gap exceeds the limit plus both step lengths cannot touch.
            gap = np.linalg.norm(a0[iu] - a0[ju], axis=1)
            reach = np.linalg.norm(a1 - a0, axis=1)
            maybe = gap - reach[iu] - reach[ju] < limit + _TOL
            for i, j in zip(iu[maybe].tolist(), ju[maybe].tolist()):
                d = pair_min_distance(a0[i], a1[i], a0[j], a1[j])
                if d < limit:
                    out.append(
                        Violation(
                            condition=ViolationKind.PAIRWISE_CLEARANCE,
                            step=k,
                            agents=[i, j],
                            margin=limit - d,
                        )
                    )

    order = {kind: idx for idx, kind in enumerate(ViolationKind)}
    out.sort(key=lambda v: (v.step, order[v.condition], v.agents))
    return out

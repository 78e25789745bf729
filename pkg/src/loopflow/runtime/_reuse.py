from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from loopflow._utils.exception import RepairFailed
from loopflow.planner import Plan, ProblemQuery, check_plan
from loopflow.schemas import ViolationKind
from loopflow.workspace import Workspace

# Start configurations must clear each other by this much on top of 2 * r.
PAIR_SLACK = 1e-6
REPAIR_DOUBLING_ROUNDS = 10

_REUSE_CONDITIONS = frozenset(ViolationKind) - {ViolationKind.GOAL}


def offending_agents(q: np.ndarray, ws: Workspace, r_agent: float, t: float = 0.0) -> np.ndarray:
    """Indices of agents that collide with an obstacle or with another agent."""
    bad = ~ws.points_free(q, r_agent, t)
    if len(q) > 1:
        close = squareform(pdist(q)) < 2.0 * r_agent + PAIR_SLACK
        np.fill_diagonal(close, False)
        bad |= close.any(axis=1)
    return np.flatnonzero(bad)


def repair_query(
    q,
    ws: Workspace,
    r_agent: float,
    sigma: float,
    rng: np.random.Generator,
    d_travel: float,
    rounds: int = 200,
    t: float = 0.0,
) -> tuple[np.ndarray, bool]:
    """
    Nudge a query configuration until it is collision-free.

    Only offending agents move. Each of them is redrawn around its original
    position with Gaussian noise whose scale doubles every few failed rounds
    (capped at d_travel); the offset is clipped to d_travel so no agent moves
    further than one step.

    Returns:
        (configuration, repaired): repaired is False when q was already feasible.

    Raises:
        RepairFailed: If the configuration is still infeasible after `rounds` rounds.
    """
    original = ws.project_plane(np.asarray(q, dtype=float))
    bad = offending_agents(original, ws, r_agent, t)
    if bad.size == 0:
        return original, False

    current = original.copy()
    scale = float(sigma)
    for round_ in range(1, rounds + 1):
        noise = rng.normal(0.0, scale, (len(bad), 3))
        if ws.planar:
            noise[:, 2] = 0.0
        norms = np.linalg.norm(noise, axis=1, keepdims=True)
        noise *= np.minimum(1.0, d_travel / np.maximum(norms, 1e-12))
        current[bad] = original[bad] + noise
        bad = offending_agents(current, ws, r_agent, t)
        if bad.size == 0:
            return current, True
        if round_ % REPAIR_DOUBLING_ROUNDS == 0:
            scale = min(2.0 * scale, d_travel)

    raise RepairFailed(
        f"Query still infeasible after {rounds} repair rounds; agents {bad.tolist()} overlap.",
        offending=bad.tolist(),
    )


@dataclass(frozen=True)
class ReuseHit:
    k: int
    seed: np.ndarray


def try_reuse(
    q_new,
    prev: Optional[Plan],
    delta: float,
    ws: Optional[Workspace] = None,
    t: Optional[float] = None,
) -> Optional[ReuseHit]:
    """
    Smallest k such that step k of `prev` lies within `delta` (max-norm over
    agents) of q_new and the suffix from k is still collision-free in `ws`.

    The goal condition is not re-checked so that a plan toward an outdated
    goal still seeds the next search.
    """
    if prev is None or len(prev.steps) == 0:
        return None
    q_new = np.asarray(q_new, dtype=float)
    if q_new.shape != prev.steps.shape[1:]:
        return None
    deviation = np.max(np.linalg.norm(prev.steps - q_new[None, :, :], axis=2), axis=1)
    base = prev.query
    for k in np.flatnonzero(deviation <= delta):
        suffix = np.array(prev.suffix(int(k)))
        if ws is not None:
            suffix_query = ProblemQuery(
                starts=suffix[0],
                targets=base.targets,
                r_agent=base.r_agent,
                r_target=base.r_target,
                d_travel=base.d_travel,
                t=base.t if t is None else t,
            )
            if check_plan(suffix, suffix_query, ws, conditions=_REUSE_CONDITIONS):
                continue
        return ReuseHit(int(k), suffix)
    return None

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from loopflow.roadmap import Roadmap, rotation_to
from loopflow.workspace import Workspace, swept_pair_distances

from ._types import ProblemQuery

# Signed unit axes followed by stay-still; rows are rotated into the heading frame.
PRIMITIVES = np.array(
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [0.0, 0.0, 0.0],
    ]
)
PLANAR_PRIMITIVES = PRIMITIVES[[0, 1, 2, 3, 6]]

# Candidate slots per agent: six axis moves, stay, and the optional goal-reaching move.
SLOTS = len(PRIMITIVES) + 1
STAY_SLOT = SLOTS - 2
GOAL_SLOT = SLOTS - 1


def _heading(rm: Roadmap, p: np.ndarray, planar: bool) -> Optional[np.ndarray]:
    d = rm.heading(p)
    if d is None:
        return None
    if planar:
        d = np.array([d[0], d[1], 0.0])
        norm = float(np.linalg.norm(d))
        if norm < 1e-9:
            return None
        d = d / norm
    return d


def successor_set(p, rm: Roadmap, d_travel: float, planar: bool = False) -> np.ndarray:
    """
    The motion primitives at p: signed unit axes rotated so that +x points
    down the cost-to-go gradient, scaled by d_travel, plus staying at p.

    Returns a (7, 3) array, or (5, 3) in planar mode (no vertical pair).
    Candidates are not collision-filtered.
    """
    p = np.asarray(p, dtype=float)
    heading = _heading(rm, p, planar)
    frame = np.eye(3) if heading is None else rotation_to(heading)
    prims = PLANAR_PRIMITIVES if planar else PRIMITIVES
    return p + d_travel * prims @ frame.T


@dataclass
class CandidateTable:
    """Per-node candidate moves of every agent, with static validity and greedy preference order."""

    origin: np.ndarray  # (n, 3)
    moves: np.ndarray  # (n, SLOTS, 3); stay at STAY_SLOT, goal move at GOAL_SLOT
    valid: np.ndarray  # (n, SLOTS) statically collision-free and present
    score: np.ndarray  # (n, SLOTS)
    prefs: list  # per agent, valid slot indices ordered by score then rng
    cost: np.ndarray  # (n,) cost estimate at the current positions

    def count(self, agent: int) -> int:
        return len(self.prefs[agent])


def build_candidates(
    config: np.ndarray,
    rms: Sequence[Roadmap],
    query: ProblemQuery,
    ws: Workspace,
    r_plan: float,
    rng: np.random.Generator,
) -> CandidateTable:
    n = len(config)
    planar = ws.planar
    k_prim = len(PLANAR_PRIMITIVES) if planar else len(PRIMITIVES)
    moves = np.repeat(config[:, None, :], SLOTS, axis=1)
    present = np.zeros((n, SLOTS), dtype=bool)
    score = np.full((n, SLOTS), np.inf)
    cost = np.empty(n)
    at_goal = query.at_goal(config)

    for i in range(n):
        succ = successor_set(config[i], rms[i], query.d_travel, planar)
        # Axis moves fill the first slots.
        moves[i, : k_prim - 1] = succ[:-1]
        moves[i, STAY_SLOT] = succ[-1]
        present[i, : k_prim - 1] = True
        present[i, STAY_SLOT] = True
        gap = float(np.linalg.norm(query.targets[i] - config[i]))
        if not at_goal[i] and gap <= query.d_travel:
            moves[i, GOAL_SLOT] = query.targets[i]
            present[i, GOAL_SLOT] = True

        est = rms[i].cost_estimates(moves[i])
        cost[i] = est[STAY_SLOT]
        score[i] = np.where(present[i], est, np.inf)
        score[i, STAY_SLOT] = 0.0 if at_goal[i] else est[STAY_SLOT] + 0.5 * query.d_travel

    flat_from = np.repeat(config, SLOTS, axis=0)
    flat_to = moves.reshape(-1, 3)
    valid = present & ws.segments_free(flat_from, flat_to, r_plan).reshape(n, SLOTS)
    # The current pose was accepted when it was generated; staying is always allowed.
    valid[:, STAY_SLOT] = True

    prefs = []
    for i in range(n):
        slots = np.flatnonzero(valid[i])
        order = np.lexsort((rng.random(len(slots)), score[i, slots]))
        prefs.append(slots[order])
    return CandidateTable(config, moves, valid, score, prefs, cost)



def generate_configuration(
    table: CandidateTable,
    order: Sequence[int],
    constraint: Sequence[tuple[int, int]],
    r_pair: float,
    fixed_from: Optional[np.ndarray] = None,
    fixed_to: Optional[np.ndarray] = None,
) -> Optional[np.ndarray]:
    """
    Greedy joint move under a constraint.

    Constrained agents take their forced slot; the rest pick, in `order`,
    their best-scoring slot whose swept distance to every assigned move
    (and to every fixed agent) is at least 2 * r_pair. An agent with no
    choice may ask a single unconstrained blocker to re-choose once.
    Returns the next configuration or None when the constraint is stuck.
    """
    n = len(table.origin)
    limit = 2.0 * r_pair
    origin = table.origin
    chosen = -np.ones(n, dtype=int)
    forced = np.zeros(n, dtype=bool)

    def clear_of(agent: int, slots: np.ndarray, exclude: int = -1) -> np.ndarray:
        """(len(slots), k) swept distances against assigned agents; also returns who they are."""
        others = np.flatnonzero(chosen >= 0)
        if exclude >= 0:
            others = others[others != exclude]
        a0 = origin[agent][None, None, :]
        a1 = table.moves[agent, slots][:, None, :]
        dists = []
        if len(others):
            b0 = origin[others][None, :, :]
            b1 = table.moves[others, chosen[others]][None, :, :]
            dists.append(swept_pair_distances(a0, a1, b0, b1))
        if fixed_from is not None and len(fixed_from):
            dists.append(swept_pair_distances(a0, a1, fixed_from[None, :, :], fixed_to[None, :, :]))
        if not dists:
            return np.zeros((len(slots), 0)), others
        return np.concatenate(dists, axis=1), others

    for agent, slot in constraint:
        if not table.valid[agent, slot]:
            return None
        d, _ = clear_of(agent, np.array([slot]))
        if d.size and d.min() < limit:
            return None
        chosen[agent] = slot
        forced[agent] = True

    for agent in order:
        if chosen[agent] >= 0:
            continue
        prefs = table.prefs[agent]
        d, others = clear_of(agent, prefs)
        ok = np.all(d >= limit, axis=1) if d.shape[1] else np.ones(len(prefs), dtype=bool)
        if ok.any():
            chosen[agent] = prefs[int(np.argmax(ok))]
            continue

        # One level of priority inheritance: a lone movable blocker re-chooses.
        n_assigned = len(others)
        resolved = False
        for row, slot in enumerate(prefs):
            blocking = np.flatnonzero(d[row, :n_assigned] < limit)
            if len(blocking) != 1 or np.any(d[row, n_assigned:] < limit):
                continue
            blocker = int(others[blocking[0]])
            if forced[blocker]:
                continue
            previous = chosen[blocker]
            chosen[agent] = slot
            alt = table.prefs[blocker]
            alt = alt[alt != previous]
            if len(alt):
                d_b, _ = clear_of(blocker, alt, exclude=blocker)
                ok_b = np.all(d_b >= limit, axis=1) if d_b.shape[1] else np.ones(len(alt), dtype=bool)
                if ok_b.any():
                    chosen[blocker] = alt[int(np.argmax(ok_b))]
                    resolved = True
                    break
            chosen[agent] = -1
        if not resolved:
            return None

    return table.moves[np.arange(n), chosen]

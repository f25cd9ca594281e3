"""Collision-free coupled planning in the joint configuration space.

`plan` runs a bounded-suboptimal best-first search (priority f = g + eps*h,
h = sum of per-agent BFS distances) and returns solutions that replay with
zero conflicts. `brute_force_optimal` is an independent uniform-cost oracle
for small agent counts, used to certify optimality in tests.

Cost model is sum-of-costs: every move or off-goal wait costs 1; waits at
the goal are banked for free and charged retroactively if the agent moves
again, so only the rest after an agent's final arrival is free.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from enum import Enum

from .core import (
    ACTION_CHARS,
    Action,
    CHAR_ACTIONS,
    Coord,
    Instance,
    MOVE_ACTIONS,
    Plan,
    Solution,
    apply_action,
)


class PlanOutcome(Enum):
    SOLVED = "solved"
    TIMEOUT = "timeout"
    UNSOLVABLE = "unsolvable"


@dataclass
class PlannerConfig:
    epsilon: float = 2.0
    timeout_ms: float = 12_000.0
    objective: str = "sum_of_costs"

    def __post_init__(self):
        if self.epsilon < 1.0:
            raise ValueError("epsilon must be >= 1")
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        if self.objective != "sum_of_costs":
            raise ValueError(f"unsupported objective {self.objective!r}")


@dataclass
class PlannerResult:
    outcome: PlanOutcome
    solution: Solution | None
    cost: int | None
    expanded_nodes: int
    elapsed: float


def _charge(at_goal: bool, rest: int, action: Action) -> tuple[int, int]:
    """(cost, new_rest) for one agent action under lazy goal-rest accounting."""
    if action == Action.WAIT:
        if at_goal:
            return 0, rest + 1
        return 1, 0
    if at_goal:
        return 1 + rest, 0
    return 1, 0


def _trimmed_plans(joint_actions: list[tuple[Action, ...]], n: int) -> list[Plan]:
    """Per-agent plans from a joint action sequence, trailing waits removed."""
    plans = []
    for i in range(n):
        actions = [step[i] for step in joint_actions]
        while actions and actions[-1] == Action.WAIT:
            actions.pop()
        plans.append(Plan(i, actions))
    return plans


def plan(instance: Instance, config: PlannerConfig) -> PlannerResult:
    """Best-first search over joint states with inflated priority f = g + eps*h.

    Joint successors enumerate {move to free neighbor, wait} per agent,
    pruned by vertex and swap constraints; the enumeration assigns one agent
    at a time through intermediate heap nodes so the open list never
    materializes the full 5^N product at once. Ties break on lower h, then
    FIFO. `expanded_nodes` counts full joint states.
    """
    grid = instance.grid
    n = instance.n_agents
    w = grid.width

    def idx(pos: Coord) -> int:
        return pos[1] * w + pos[0]

    moves: list[list[tuple[Action, int]]] = [[] for _ in range(w * grid.height)]
    for y in range(grid.height):
        for x in range(w):
            if grid.obstacles[y, x]:
                continue
            for a in MOVE_ACTIONS:
                q = apply_action((x, y), a)
                if grid.is_free(q):
                    moves[y * w + x].append((a, idx(q)))

    dists = [grid.distance_field(g).reshape(-1) for g in instance.goals]
    starts = tuple(idx(s) for s in instance.starts)
    goals = tuple(idx(g) for g in instance.goals)
    h0 = int(sum(dists[i][starts[i]] for i in range(n)))

    t0 = time.monotonic()
    deadline = t0 + config.timeout_ms / 1000.0
    eps = config.epsilon

    # Heap entries: (f, h, seq, kind, payload). kind 0 = full joint state
    # (positions, rests) with payload (state, g); kind 1 = partial assignment
    # with payload (origin state, g, h, actions, targets, new_rests).
    heap: list = []
    seq = itertools.count()
    best_g: dict[tuple, int] = {}
    expanded_set: set[tuple] = set()
    parents: dict[tuple, tuple] = {}
    expanded = 0

    root = (starts, (0,) * n)
    best_g[root] = 0
    heapq.heappush(heap, (eps * h0, h0, next(seq), 0, (root, 0)))

    def finish(outcome: PlanOutcome, solution=None, cost=None) -> PlannerResult:
        return PlannerResult(outcome, solution, cost, expanded, time.monotonic() - t0)

    pops = 0
    while heap:
        pops += 1
        if pops % 1024 == 0 and time.monotonic() > deadline:
            return finish(PlanOutcome.TIMEOUT)
        f, h, _, kind, payload = heapq.heappop(heap)

        if kind == 0:
            state, g = payload
            if state in expanded_set or g > best_g.get(state, g):
                continue
            expanded_set.add(state)
            expanded += 1
            positions, rests = state
            if positions == goals:
                joint_actions = []
                cur = state
                while cur != root:
                    prev, action = parents[cur]
                    joint_actions.append(action)
                    cur = prev
                joint_actions.reverse()
                return finish(PlanOutcome.SOLVED, Solution(_trimmed_plans(joint_actions, n)), g)
            heapq.heappush(heap, (f, h, next(seq), 1, (state, g, h, (), (), ())))
            continue

        state, g, h_part, actions, targets, new_rests = payload
        positions, rests = state
        k = len(actions)

        if k == n:
            child = (targets, new_rests)
            if child in expanded_set:
                continue
            if best_g.get(child, g + 1) <= g:
                continue
            best_g[child] = g
            parents[child] = (state, actions)
            heapq.heappush(heap, (g + eps * h_part, h_part, next(seq), 0, (child, g)))
            continue

        # Assign agent k: wait plus moves to free neighbors, pruned against
        # agents already assigned within this joint action.
        cur = positions[k]
        at_goal = cur == goals[k]
        for action, target in [(Action.WAIT, cur)] + moves[cur]:
            ok = True
            for j in range(k):
                if targets[j] == target or (target == positions[j] and targets[j] == cur):
                    ok = False
                    break
            if not ok:
                continue
            cost, rest = _charge(at_goal, rests[k], action)
            g_next = g + cost
            h_next = h_part - int(dists[k][cur]) + int(dists[k][target])
            heapq.heappush(
                heap,
                (g_next + eps * h_next, h_next, next(seq), 1,
                 (state, g_next, h_next, actions + (action,),
                  targets + (target,), new_rests + (rest,))),
            )

    return finish(PlanOutcome.UNSOLVABLE)


def brute_force_optimal(instance: Instance, cost_cap: int = 256) -> PlannerResult:
    """Provably minimum sum-of-costs by exhaustive uniform-cost joint search.

    Guarded to at most 4 agents. Written independently of `plan` (full
    cartesian successor products, no heuristic) so the two can certify each
    other. Exceeding `cost_cap` everywhere yields a timeout-like outcome.
    """
    n = instance.n_agents
    if n > 4:
        raise ValueError("brute force oracle is limited to 4 agents")
    grid = instance.grid
    goals = tuple(instance.goals)

    def options(pos: Coord) -> list[tuple[Action, Coord]]:
        out = [(Action.WAIT, pos)]
        for a in MOVE_ACTIONS:
            q = apply_action(pos, a)
            if grid.is_free(q):
                out.append((a, q))
        return out

    t0 = time.monotonic()
    root = (tuple(instance.starts), (0,) * n)
    heap: list = [(0, 0, root)]
    seq = itertools.count(1)
    best_g = {root: 0}
    done: set = set()
    parents: dict = {}
    expanded = 0
    capped = False

    while heap:
        g, _, state = heapq.heappop(heap)
        if state in done or g > best_g.get(state, g):
            continue
        done.add(state)
        expanded += 1
        positions, rests = state

        if positions == goals:
            joint_actions = []
            cur = state
            while cur != root:
                prev, action = parents[cur]
                joint_actions.append(action)
                cur = prev
            joint_actions.reverse()
            solution = Solution(_trimmed_plans(joint_actions, n))
            return PlannerResult(PlanOutcome.SOLVED, solution, g, expanded,
                                 time.monotonic() - t0)

        per_agent = [options(p) for p in positions]
        for combo in itertools.product(*per_agent):
            targets = tuple(t for _, t in combo)
            if len(set(targets)) != n:
                continue
            swap = False
            for i in range(n):
                for j in range(i + 1, n):
                    if targets[i] == positions[j] and targets[j] == positions[i]:
                        swap = True
                        break
                if swap:
                    break
            if swap:
                continue
            g_new = g
            new_rests = []
            for i, (action, _) in enumerate(combo):
                cost, rest = _charge(positions[i] == goals[i], rests[i], action)
                g_new += cost
                new_rests.append(rest)
            if g_new > cost_cap:
                capped = True
                continue
            child = (targets, tuple(new_rests))
            if child in done or best_g.get(child, g_new + 1) <= g_new:
                continue
            best_g[child] = g_new
            parents[child] = (state, tuple(a for a, _ in combo))
            heapq.heappush(heap, (g_new, next(seq), child))

    outcome = PlanOutcome.TIMEOUT if capped else PlanOutcome.UNSOLVABLE
    return PlannerResult(outcome, None, None, expanded, time.monotonic() - t0)


# --- solution text format ----------------------------------------------------
#
# One line per agent: the agent id, a space, then its actions as a string
# over {N, S, E, W, .} with '.' = wait. Agents with empty plans write a bare
# id line.

def write_solution(solution: Solution, path) -> None:
    with open(path, "w", newline="\n") as f:
        for p in solution.plans:
            chars = "".join(ACTION_CHARS[a] for a in p.actions)
            f.write(f"{p.agent_id} {chars}".rstrip() + "\n")


def read_solution(path) -> Solution:
    plans = []
    with open(path, "r") as f:
        for lineno, line in enumerate(f):
            parts = line.split()
            if not parts:
                continue
            if int(parts[0]) != len(plans):
                raise ValueError(f"{path}:{lineno + 1}: agent ids must be consecutive")
            chars = parts[1] if len(parts) > 1 else ""
            plans.append(Plan(len(plans), [CHAR_ACTIONS[c] for c in chars]))
    return Solution(plans)

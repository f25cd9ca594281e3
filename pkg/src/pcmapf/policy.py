"""Prioritized one-step planning over the dynamic cluster topology.

Each timestep: score every agent with the goal-progress priority
-mh_t / mh_0 (Manhattan distances, 0 for agents born on their goal), elect
clusters with those scores as weights, exchange structured messages through
the topology, then let each cluster decide actions in priority order under a
shared reservation set. Coordination never crosses cluster boundaries, so
residual conflicts between clusters surface in the execution engine.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .clusters import (
    AgentWeight,
    ClusterTopology,
    Message,
    MessagePayload,
    form_clusters,
    route,
)
from .core import (
    ACTION_ORDER,
    Action,
    Coord,
    Instance,
    SimState,
    apply_action,
    manhattan,
    valid_actions,
)


def heuristic_priority(mh_t: int, mh0: int) -> float:
    """Priority -mh_t/mh0, or 0 for agents whose initial goal distance is 0.

    Higher value means higher priority; every agent starts an episode at -1
    and rises toward 0 as it approaches its goal.
    """
    if mh_t < 0 or mh0 < 0:
        raise ValueError("distances must be non-negative")
    if mh0 == 0:
        return 0.0
    return -mh_t / mh0


def secondary_order(mh0_i: int, mh0_j: int, rng: random.Random) -> int:
    """Tie-break between equal primary priorities: +1 ranks i first, -1 ranks j.

    The agent with the larger initial goal distance ranks higher; exact ties
    fall to a coin flip from the caller's rng.
    """
    if mh0_i > mh0_j:
        return 1
    if mh0_i < mh0_j:
        return -1
    return 1 if rng.random() < 0.5 else -1


@dataclass
class DecisionInfo:
    """Diagnostics for one joint decision (used by tests and traces)."""

    topology: ClusterTopology
    priorities: list[float]
    targets: list[Coord]
    inboxes: list[list[Message]]


_WAIT_RANK = {a: i for i, a in enumerate(ACTION_ORDER)}


def _goal_direction(pos: Coord, goal: Coord) -> tuple[float, float]:
    dx, dy = goal[0] - pos[0], goal[1] - pos[1]
    if dx == 0 and dy == 0:
        return (0.0, 0.0)
    norm = float(np.hypot(dx, dy))
    return (dx / norm, dy / norm)


def decide_joint_action_with_info(
    state: SimState,
    instance: Instance,
    radius: float,
    seed: int,
    relief_agents: frozenset[int] = frozenset(),
    relief_rng: random.Random | None = None,
) -> tuple[list[Action], DecisionInfo]:
    """Full decision pipeline returning the joint action plus diagnostics.

    Agents in `relief_agents` pick uniformly among their allowed actions
    instead of greedily (used by the wait-relief escape); reservations still
    apply to them, so the intra-cluster no-shared-target property holds.
    """
    n = instance.n_agents
    grid = instance.grid
    pos = state.positions
    goals = instance.goals

    mh_t = [manhattan(pos[i], goals[i]) for i in range(n)]
    mh0 = [manhattan(instance.starts[i], goals[i]) for i in range(n)]
    priorities = [heuristic_priority(mh_t[i], mh0[i]) for i in range(n)]

    weights = [AgentWeight(i, priorities[i]) for i in range(n)]
    topology = form_clusters(list(pos), weights, radius, tie_seed=seed)

    dist_fields = [grid.distance_field(g) for g in goals]

    def dist_at(i: int, cell: Coord) -> int:
        return int(dist_fields[i][cell[1], cell[0]])

    def greedy(i: int, allowed: set[Action]) -> Action:
        return min(
            allowed,
            key=lambda a: (
                dist_at(i, apply_action(pos[i], a)),
                a == Action.WAIT,
                _WAIT_RANK[a],
            ),
        )

    outboxes = [
        Message(i, MessagePayload(pos[i], _goal_direction(pos[i], goals[i]),
                                  priorities[i], greedy(i, valid_actions(state, instance, i))))
        for i in range(n)
    ]
    inboxes = route(topology, outboxes)

    jitter = list(range(n))
    random.Random(seed).shuffle(jitter)

    def member_key(i: int):
        # Off-goal agents outrank agents already on their goal; then higher
        # priority, larger initial distance, and the seeded jitter.
        return (pos[i] == goals[i], -priorities[i], -mh0[i], jitter[i])

    actions: list[Action] = [Action.WAIT] * n
    targets: list[Coord] = list(pos)
    for central, members in topology.clusters().items():
        ordered = [central] + sorted(members, key=member_key)
        reserved: set[Coord] = set()
        for i in ordered:
            if pos[i] == goals[i]:
                choice = Action.WAIT
            else:
                allowed = {
                    a for a in valid_actions(state, instance, i)
                    if apply_action(pos[i], a) not in reserved
                }
                if not allowed:
                    choice = Action.WAIT
                elif i in relief_agents and relief_rng is not None:
                    pool = sorted(allowed - {Action.WAIT}, key=lambda a: _WAIT_RANK[a])
                    choice = relief_rng.choice(pool) if pool else Action.WAIT
                else:
                    choice = greedy(i, allowed)
            actions[i] = choice
            targets[i] = apply_action(pos[i], choice)
            reserved.add(targets[i])
            reserved.add(pos[i])
    return actions, DecisionInfo(topology, priorities, targets, inboxes)


def decide_joint_action(state: SimState, instance: Instance,
                        radius: float, seed: int) -> list[Action]:
    """One-step joint decision; deterministic pure function of (state, seed)."""
    actions, _ = decide_joint_action_with_info(state, instance, radius, seed)
    return actions


class PrioritizedPolicy:
    """Stateful episode policy: the decision pipeline plus wait-relief.

    An agent that has effectively waited off its goal for `wait_relief`
    consecutive steps (no new progress: its obstacle-aware goal distance
    never improved on the best of the current watch window) escapes with a
    burst of `relief_duration` uniformly random non-wait actions, then
    resumes greedy decisions on a fresh window. A single random step cannot
    exit the basin the deterministic tie-breaking forms around a blocked
    cell, so the escape is a short burst rather than one action. Pass
    wait_relief=None to disable. Deterministic given the seed. The last
    DecisionInfo is kept for inspection.
    """

    def __init__(self, instance: Instance, radius: float = 5.0, seed: int = 0,
                 wait_relief: int | None = 8, relief_duration: int = 4):
        if wait_relief is not None and wait_relief < 1:
            raise ValueError("wait_relief must be >= 1 or None")
        if relief_duration < 1:
            raise ValueError("relief_duration must be >= 1")
        self.instance = instance
        self.radius = radius
        self.seed = seed
        self.wait_relief = wait_relief
        self.relief_duration = relief_duration
        self.last_info: DecisionInfo | None = None
        n = instance.n_agents
        self._stuck = [0] * n
        self._burst = [0] * n
        self._window_best = [
            int(instance.grid.distance_field(g)[s[1], s[0]])
            for s, g in zip(instance.starts, instance.goals)
        ]
        self._rng = random.Random(seed ^ 0x9E3779B9)

    def _update_relief(self, state: SimState) -> frozenset[int]:
        if self.wait_relief is None:
            return frozenset()
        grid = self.instance.grid
        active = set()
        for i in range(self.instance.n_agents):
            x, y = state.positions[i]
            d = int(grid.distance_field(self.instance.goals[i])[y, x])
            if self._burst[i] > 0:
                self._burst[i] -= 1
                if self._burst[i] == 0:
                    self._window_best[i] = d
                    self._stuck[i] = 0
                if d > 0:
                    active.add(i)
                continue
            if d < self._window_best[i]:
                self._window_best[i] = d
                self._stuck[i] = 0
            elif d > 0 and state.timestep > 0:
                self._stuck[i] += 1
            if self._stuck[i] >= self.wait_relief:
                self._burst[i] = self.relief_duration
                active.add(i)
        return frozenset(active)

    def __call__(self, state: SimState) -> list[Action]:
        relief = self._update_relief(state)
        actions, info = decide_joint_action_with_info(
            state, self.instance, self.radius, self.seed, relief, self._rng
        )
        self.last_info = info
        return actions

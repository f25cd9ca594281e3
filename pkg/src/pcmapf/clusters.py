"""Weight-driven cluster election over agent positions, and message routing.

Agents within a Chebyshev radius of each other compete for the central role:
locally weight-dominant agents become centrals, everyone else joins the
highest-weight central in range, and agents left uncovered promote to
singleton centrals. Members talk only to their central; the central hears
all its members and broadcasts one message back.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .core import Action, Coord


@dataclass(frozen=True)
class AgentWeight:
    agent_id: int
    weight: float


class Role(Enum):
    CENTRAL = "central"
    MEMBER = "member"


@dataclass
class ClusterTopology:
    """Per-agent roles and cluster assignment; centrals point to themselves."""

    roles: list[Role]
    central_of: list[int]
    radius: float
    rounds_used: int

    @property
    def n_agents(self) -> int:
        return len(self.roles)

    def clusters(self) -> dict[int, list[int]]:
        """central_id -> sorted member ids (central excluded)."""
        out: dict[int, list[int]] = {
            i: [] for i in range(self.n_agents) if self.roles[i] == Role.CENTRAL
        }
        for i in range(self.n_agents):
            if self.roles[i] == Role.MEMBER:
                out[self.central_of[i]].append(i)
        for members in out.values():
            members.sort()
        return out

    def dump(self) -> str:
        """Diagnostic text: one `central: m1,m2,...` line per cluster."""
        lines = []
        for central, members in sorted(self.clusters().items()):
            tail = " " + ",".join(str(m) for m in members) if members else ""
            lines.append(f"{central}:{tail}")
        return "\n".join(lines)


@dataclass(frozen=True)
class MessagePayload:
    position: Coord
    goal_direction: tuple[float, float]
    weight: float
    intended_action: Action


@dataclass(frozen=True)
class Message:
    sender: int
    payload: MessagePayload


def distance(a: Coord, b: Coord) -> float:
    """Chebyshev distance: radius d covers the (2d+1)-sided square around a cell."""
    return float(max(abs(a[0] - b[0]), abs(a[1] - b[1])))


def _tie_ranks(n: int, tie_seed: int) -> list[int]:
    # Seed 0 keeps ascending agent ids, so the lower id wins weight ties;
    # any other seed draws a reproducible random tie order.
    order = list(range(n))
    if tie_seed:
        random.Random(tie_seed).shuffle(order)
    ranks = [0] * n
    for r, agent in enumerate(order):
        ranks[agent] = r
    return ranks


def form_clusters(positions: list[Coord], weights: list[AgentWeight],
                  radius: float, tie_seed: int = 0) -> ClusterTopology:
    """Elect centrals and assign every agent to exactly one cluster.

    Synchronous election rounds run to a fixed point (capped at n rounds): a
    member with neither a heavier agent nor a central in radius becomes
    central; a central downgrades when a weight-dominant central is in
    radius. Members left without any central in radius are then promoted to
    singleton centrals in weight order, and each remaining member attaches
    to the heaviest central it can reach.
    """
    n = len(positions)
    if n == 0 or len(weights) != n:
        raise ValueError("need one weight per agent")
    if radius <= 0:
        raise ValueError("radius must be positive")
    w: list[float | None] = [None] * n
    for aw in weights:
        w[aw.agent_id] = aw.weight
    if any(v is None for v in w):
        raise ValueError("weights must cover agent ids 0..n-1")

    ranks = _tie_ranks(n, tie_seed)

    def key(i: int) -> tuple[float, int]:
        return (w[i], -ranks[i])

    nbrs = [
        [j for j in range(n) if j != i and distance(positions[i], positions[j]) <= radius]
        for i in range(n)
    ]

    roles = [Role.MEMBER] * n
    rounds_used = 0
    for _ in range(n):
        rounds_used += 1
        new_roles = list(roles)
        for i in range(n):
            if roles[i] == Role.MEMBER:
                blocked = any(
                    roles[j] == Role.CENTRAL or key(j) > key(i) for j in nbrs[i]
                )
                if not blocked:
                    new_roles[i] = Role.CENTRAL
            else:
                dominated = any(
                    roles[j] == Role.CENTRAL and key(j) > key(i) for j in nbrs[i]
                )
                if dominated:
                    new_roles[i] = Role.MEMBER
        if new_roles == roles:
            break
        roles = new_roles

    # Cover stragglers: members that can reach no central become singleton
    # centrals, heaviest first so the no-adjacent-centrals invariant holds.
    for i in sorted(range(n), key=key, reverse=True):
        if roles[i] == Role.MEMBER and not any(roles[j] == Role.CENTRAL for j in nbrs[i]):
            roles[i] = Role.CENTRAL

    central_of = list(range(n))
    for i in range(n):
        if roles[i] == Role.MEMBER:
            candidates = [j for j in nbrs[i] if roles[j] == Role.CENTRAL]
            central_of[i] = max(candidates, key=key)

    return ClusterTopology(roles, central_of, radius, rounds_used)


def route(topology: ClusterTopology, outboxes: list[Message]) -> list[list[Message]]:
    """Deliver every member's message to its central and broadcast back.

    Central inboxes hold their members' messages in agent-id order; each
    member's inbox holds exactly its central's message; singleton centrals
    receive nothing.
    """
    n = topology.n_agents
    if len(outboxes) != n:
        raise ValueError("need one outbox per agent")
    inboxes: list[list[Message]] = [[] for _ in range(n)]
    for i in range(n):
        if topology.roles[i] == Role.MEMBER:
            central = topology.central_of[i]
            inboxes[central].append(outboxes[i])
            inboxes[i].append(outboxes[central])
    return inboxes

"""Gridworld world model and simultaneous-move execution for multi-agent pathfinding.

Coordinates are (x, y) with x = column and y = row; North is y + 1.
Agents move on the 4-connected graph of free cells or wait in place.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Iterable, Sequence

import numpy as np

Coord = tuple[int, int]


class Action(IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3
    WAIT = 4


# Deterministic action order used for tie-breaking throughout.
ACTION_ORDER = (Action.NORTH, Action.EAST, Action.SOUTH, Action.WEST, Action.WAIT)
MOVE_ACTIONS = (Action.NORTH, Action.EAST, Action.SOUTH, Action.WEST)

DELTAS: dict[Action, Coord] = {
    Action.NORTH: (0, 1),
    Action.EAST: (1, 0),
    Action.SOUTH: (0, -1),
    Action.WEST: (-1, 0),
    Action.WAIT: (0, 0),
}

ACTION_CHARS = {
    Action.NORTH: "N",
    Action.SOUTH: "S",
    Action.EAST: "E",
    Action.WEST: "W",
    Action.WAIT: ".",
}
CHAR_ACTIONS = {c: a for a, c in ACTION_CHARS.items()}


def apply_action(pos: Coord, action: Action) -> Coord:
    dx, dy = DELTAS[action]
    return pos[0] + dx, pos[1] + dy


def manhattan(a: Coord, b: Coord) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


@dataclass
class GridMap:
    """Static world: a width x height grid of Free/Obstacle cells.

    `obstacles[y, x]` is True for blocked cells. Grids are treated as
    immutable after construction (BFS distance fields are cached).
    """

    width: int
    height: int
    obstacles: np.ndarray
    _dist_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        self.obstacles = np.asarray(self.obstacles, dtype=bool)
        if self.obstacles.shape != (self.height, self.width):
            raise ValueError(
                f"obstacle array shape {self.obstacles.shape} does not match "
                f"(height, width) = ({self.height}, {self.width})"
            )

    @classmethod
    def empty(cls, width: int, height: int) -> "GridMap":
        return cls(width, height, np.zeros((height, width), dtype=bool))

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "GridMap":
        """Build from strings of '.' (free) and '@' (obstacle); rows[0] is y = 0."""
        height = len(rows)
        width = len(rows[0])
        obstacles = np.zeros((height, width), dtype=bool)
        for y, row in enumerate(rows):
            if len(row) != width:
                raise ValueError("ragged map rows")
            for x, ch in enumerate(row):
                if ch == "@":
                    obstacles[y, x] = True
                elif ch != ".":
                    raise ValueError(f"unknown map character {ch!r}")
        return cls(width, height, obstacles)

    def in_bounds(self, pos: Coord) -> bool:
        x, y = pos
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, pos: Coord) -> bool:
        return self.in_bounds(pos) and not self.obstacles[pos[1], pos[0]]

    def free_cells(self) -> list[Coord]:
        ys, xs = np.nonzero(~self.obstacles)
        return [(int(x), int(y)) for y, x in zip(ys, xs)]

    def neighbors(self, pos: Coord) -> list[Coord]:
        out = []
        for a in MOVE_ACTIONS:
            q = apply_action(pos, a)
            if self.is_free(q):
                out.append(q)
        return out

    def distance_field(self, source: Coord) -> np.ndarray:
        """BFS distance (in steps) from `source` to every free cell; -1 if unreachable."""
        cached = self._dist_cache.get(source)
        if cached is not None:
            return cached
        if not self.is_free(source):
            raise ValueError(f"source cell {source} is not free")
        dist = np.full((self.height, self.width), -1, dtype=np.int32)
        dist[source[1], source[0]] = 0
        queue = collections.deque([source])
        while queue:
            x, y = queue.popleft()
            d = dist[y, x] + 1
            for nx, ny in ((x, y + 1), (x + 1, y), (x, y - 1), (x - 1, y)):
                if 0 <= nx < self.width and 0 <= ny < self.height \
                        and not self.obstacles[ny, nx] and dist[ny, nx] < 0:
                    dist[ny, nx] = d
                    queue.append((nx, ny))
        self._dist_cache[source] = dist
        return dist


def shortest_path_distance(grid: GridMap, start: Coord, goal: Coord) -> int | None:
    """Length of the shortest 4-connected path through free cells, or None if unreachable."""
    if not grid.is_free(start) or not grid.is_free(goal):
        raise ValueError("start and goal must be free cells")
    d = int(grid.distance_field(goal)[start[1], start[0]])
    return None if d < 0 else d


@dataclass
class Instance:
    """A problem instance: grid plus one start and one goal cell per agent."""

    grid: GridMap
    starts: list[Coord]
    goals: list[Coord]

    def __post_init__(self):
        self.starts = [tuple(p) for p in self.starts]
        self.goals = [tuple(p) for p in self.goals]
        if not self.starts or len(self.starts) != len(self.goals):
            raise ValueError("need equal, nonzero numbers of starts and goals")
        if len(set(self.starts)) != len(self.starts):
            raise ValueError("starts must be distinct")
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("goals must be distinct")
        for i, (s, g) in enumerate(zip(self.starts, self.goals)):
            if not self.grid.is_free(s) or not self.grid.is_free(g):
                raise ValueError(f"agent {i} start/goal not on a free cell")
            if shortest_path_distance(self.grid, s, g) is None:
                raise ValueError(f"agent {i} goal unreachable from start")

    @property
    def n_agents(self) -> int:
        return len(self.starts)


@dataclass
class Plan:
    """A single-agent action sequence."""

    agent_id: int
    actions: list[Action]

    def __len__(self) -> int:
        return len(self.actions)


@dataclass
class Solution:
    """One plan per agent; executing plan i from starts[i] ends at goals[i]."""

    plans: list[Plan]

    @property
    def makespan(self) -> int:
        return max((len(p) for p in self.plans), default=0)

    @property
    def sum_of_costs(self) -> int:
        return sum(len(p) for p in self.plans)


@dataclass
class SimState:
    """Mutable-world snapshot: one position per agent at a timestep."""

    positions: list[Coord]
    timestep: int
    arrived: list[bool]

    @classmethod
    def initial(cls, instance: Instance) -> "SimState":
        pos = list(instance.starts)
        arrived = [p == g for p, g in zip(pos, instance.goals)]
        return cls(pos, 0, arrived)


class ConflictKind(Enum):
    AGENT_VERTEX = "agent_vertex"
    OBSTACLE = "obstacle"
    OUT_OF_BOUNDS = "out_of_bounds"


@dataclass(frozen=True)
class ConflictEvent:
    timestep: int
    agent_id: int
    kind: ConflictKind


@dataclass
class ExecutionTrace:
    """Timestep-by-timestep record of one episode."""

    positions: list[list[Coord]]
    conflicts: list[ConflictEvent]
    success: bool
    makespan: int
    total_moves: int

    def conflict_count(self, kind: ConflictKind) -> int:
        return sum(1 for c in self.conflicts if c.kind == kind)


def valid_actions(state: SimState, instance: Instance, agent: int) -> set[Action]:
    """Actions whose target is in bounds, free, and not occupied by another agent.

    Wait is always valid, so the result is never empty.
    """
    if agent >= instance.n_agents:
        raise ValueError("agent index out of range")
    occupied = set(state.positions)
    own = state.positions[agent]
    out = {Action.WAIT}
    for a in MOVE_ACTIONS:
        target = apply_action(own, a)
        if instance.grid.is_free(target) and target not in occupied:
            out.add(a)
    return out


def step(state: SimState, instance: Instance,
         joint_action: Sequence[Action]) -> tuple[SimState, list[ConflictEvent]]:
    """Advance one timestep with simultaneous-move semantics.

    All intended targets are computed first, then moves are rejected in an
    order-independent way: out-of-bounds or obstacle targets, targets
    contested by two or more movers, pairwise swaps, and finally (by fixed
    point) moves into cells whose occupant does not itself move away.
    Rejected movers stay in place and emit one ConflictEvent each; Wait
    never conflicts. Events carry the arrival timestep (state.timestep + 1).
    """
    n = instance.n_agents
    if len(joint_action) != n:
        raise ValueError(f"joint action has {len(joint_action)} entries for {n} agents")
    grid = instance.grid
    pos = state.positions
    t_next = state.timestep + 1

    targets: list[Coord] = []
    moving = [False] * n
    rejected: dict[int, ConflictKind] = {}
    for i, a in enumerate(joint_action):
        a = Action(a)
        target = apply_action(pos[i], a)
        targets.append(target)
        if a == Action.WAIT:
            continue
        if not grid.in_bounds(target):
            rejected[i] = ConflictKind.OUT_OF_BOUNDS
        elif grid.obstacles[target[1], target[0]]:
            rejected[i] = ConflictKind.OBSTACLE
        else:
            moving[i] = True

    # Contested targets: every contender is rejected, nobody wins.
    counts = collections.Counter(targets[i] for i in range(n) if moving[i])
    for i in range(n):
        if moving[i] and counts[targets[i]] >= 2:
            rejected[i] = ConflictKind.AGENT_VERTEX
            moving[i] = False

    # Swaps (two agents exchanging cells) are disallowed outright.
    movers = [i for i in range(n) if moving[i]]
    target_of = {pos[i]: i for i in movers}
    for i in movers:
        j = target_of.get(targets[i])
        if j is not None and j != i and moving[j] and targets[j] == pos[i]:
            rejected[i] = ConflictKind.AGENT_VERTEX
            rejected[j] = ConflictKind.AGENT_VERTEX
            moving[i] = moving[j] = False

    # A move into an occupied cell succeeds only if the occupant's own move
    # executes; iterate to a fixed point since each rejection can block others.
    changed = True
    while changed:
        changed = False
        stationary = {pos[i] for i in range(n) if not moving[i]}
        for i in range(n):
            if moving[i] and targets[i] in stationary:
                rejected[i] = ConflictKind.AGENT_VERTEX
                moving[i] = False
                changed = True

    new_positions = [targets[i] if moving[i] else pos[i] for i in range(n)]
    arrived = [p == g for p, g in zip(new_positions, instance.goals)]
    events = [ConflictEvent(t_next, i, rejected[i]) for i in sorted(rejected)]
    return SimState(new_positions, t_next, arrived), events


@dataclass
class Observation:
    """Agent-centered local view plus goal direction and distance.

    `spatial[c, j, i]` covers offsets dy = j - r, dx = i - r from the agent
    (r = fov // 2): channel 0 obstacles (off-map cells read as obstacles),
    channel 1 other agents, channel 2 own goal, channel 3 other agents' goals.
    """

    spatial: np.ndarray
    direction: tuple[float, float]
    magnitude: float


def observe(state: SimState, instance: Instance, agent: int, fov: int = 11) -> Observation:
    """Build the 4-channel local observation for one agent."""
    if fov < 3 or fov % 2 == 0:
        raise ValueError("fov must be an odd integer >= 3")
    r = fov // 2
    grid = instance.grid
    x0, y0 = state.positions[agent]
    spatial = np.zeros((4, fov, fov), dtype=bool)

    for j in range(fov):
        y = y0 - r + j
        for i in range(fov):
            x = x0 - r + i
            if not grid.in_bounds((x, y)) or grid.obstacles[y, x]:
                spatial[0, j, i] = True

    def place(channel: int, pos: Coord):
        dx, dy = pos[0] - x0, pos[1] - y0
        if abs(dx) <= r and abs(dy) <= r:
            spatial[channel, dy + r, dx + r] = True

    for k in range(instance.n_agents):
        if k != agent:
            place(1, state.positions[k])
            place(3, instance.goals[k])
    place(2, instance.goals[agent])

    gx, gy = instance.goals[agent]
    dx, dy = gx - x0, gy - y0
    magnitude = float(abs(dx) + abs(dy))
    if dx == 0 and dy == 0:
        direction = (0.0, 0.0)
    else:
        norm = float(np.hypot(dx, dy))
        direction = (dx / norm, dy / norm)
    return Observation(spatial, direction, magnitude)


Policy = Callable[[SimState], Sequence[Action]]


class ScriptedPolicy:
    """Replays a Solution; plans shorter than the current timestep pad with Wait."""

    def __init__(self, solution: Solution):
        self.plans = solution.plans

    def __call__(self, state: SimState) -> list[Action]:
        t = state.timestep
        return [p.actions[t] if t < len(p.actions) else Action.WAIT for p in self.plans]


def execute_policy(instance: Instance, policy: Policy, max_steps: int) -> ExecutionTrace:
    """Run a policy until all agents sit on their goals or max_steps elapse.

    Success means simultaneous goal occupancy at some timestep <= max_steps;
    makespan is the elapsed timestep count (max_steps on failure).
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    n = instance.n_agents
    state = SimState.initial(instance)
    positions = [list(state.positions)]
    conflicts: list[ConflictEvent] = []
    total_moves = 0
    while True:
        if all(state.arrived):
            return ExecutionTrace(positions, conflicts, True, state.timestep, total_moves)
        if state.timestep >= max_steps:
            return ExecutionTrace(positions, conflicts, False, max_steps, total_moves)
        joint = list(policy(state))
        if len(joint) != n or not all(isinstance(a, Action) for a in joint):
            raise ValueError("policy returned a malformed joint action")
        prev = state.positions
        state, events = step(state, instance, joint)
        conflicts.extend(events)
        total_moves += sum(1 for a, b in zip(prev, state.positions) if a != b)
        positions.append(list(state.positions))


@dataclass
class MeasurementRow:
    """Aggregate episode measurements: collisions, success rate, makespan, moves."""

    ca: float
    co: float
    sr: float
    ms: float
    cr: float
    tm: float
    n_cases: int


def measurements(traces: Sequence[ExecutionTrace]) -> MeasurementRow:
    """Average CA/CO/SR/MS/CR/TM over traces; CR is computed per trace (0 when MS = 0)."""
    if not traces:
        raise ValueError("measurements need at least one trace")
    n = len(traces)
    cas = [t.conflict_count(ConflictKind.AGENT_VERTEX) for t in traces]
    cos = [t.conflict_count(ConflictKind.OBSTACLE) for t in traces]
    crs = [ca / t.makespan if t.makespan > 0 else 0.0 for ca, t in zip(cas, traces)]
    return MeasurementRow(
        ca=sum(cas) / n,
        co=sum(cos) / n,
        sr=100.0 * sum(1 for t in traces if t.success) / n,
        ms=sum(t.makespan for t in traces) / n,
        cr=sum(crs) / n,
        tm=sum(t.total_moves for t in traces) / n,
        n_cases=n,
    )


@dataclass
class RewardConfig:
    """Per-event shaping rewards; every value is configurable, none hard-coded."""

    move: float = -0.3
    wait_off_goal: float = -0.5
    wait_on_goal: float = 0.0
    rejected_move: float = -2.0
    completion_bonus: float = 20.0


def agent_rewards(trace: ExecutionTrace, instance: Instance,
                  config: RewardConfig | None = None) -> list[list[float]]:
    """Per-agent reward sequences for each executed transition of a trace."""
    cfg = config or RewardConfig()
    n = instance.n_agents
    conflict_at = {(c.timestep, c.agent_id) for c in trace.conflicts}
    rewards = [[] for _ in range(n)]
    for t in range(len(trace.positions) - 1):
        before, after = trace.positions[t], trace.positions[t + 1]
        for i in range(n):
            if (t + 1, i) in conflict_at:
                r = cfg.rejected_move
            elif after[i] != before[i]:
                r = cfg.move
            elif after[i] == instance.goals[i]:
                r = cfg.wait_on_goal
            else:
                r = cfg.wait_off_goal
            if trace.success and t + 1 == trace.makespan:
                r += cfg.completion_bonus
            rewards[i].append(r)
    return rewards


# --- text file formats -----------------------------------------------------
#
# Map file: line 1 "height width", then `height` lines of `width` characters,
# '.' free and '@' obstacle, line for y = 0 first. Scenario file: one line per
# agent, "agent_id sx sy gx gy", ids consecutive from 0. LF line endings.

def write_map(grid: GridMap, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(f"{grid.height} {grid.width}\n")
        for y in range(grid.height):
            f.write("".join("@" if grid.obstacles[y, x] else "." for x in range(grid.width)))
            f.write("\n")


def read_map(path) -> GridMap:
    with open(path, "r") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: bad map header")
        height, width = int(header[0]), int(header[1])
        rows = [f.readline().rstrip("\n") for _ in range(height)]
    grid = GridMap.from_rows(rows)
    if grid.width != width or grid.height != height:
        raise ValueError(f"{path}: map body does not match header")
    return grid


def write_scenario(starts: Sequence[Coord], goals: Sequence[Coord], path) -> None:
    with open(path, "w", newline="\n") as f:
        for i, (s, g) in enumerate(zip(starts, goals)):
            f.write(f"{i} {s[0]} {s[1]} {g[0]} {g[1]}\n")


def read_scenario(path) -> tuple[list[Coord], list[Coord]]:
    starts, goals = [], []
    with open(path, "r") as f:
        for lineno, line in enumerate(f):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 5 or int(parts[0]) != len(starts):
                raise ValueError(f"{path}:{lineno + 1}: bad scenario line")
            starts.append((int(parts[1]), int(parts[2])))
            goals.append((int(parts[3]), int(parts[4])))
    return starts, goals


def load_instance(map_path, scen_path) -> Instance:
    grid = read_map(map_path)
    starts, goals = read_scenario(scen_path)
    return Instance(grid, starts, goals)

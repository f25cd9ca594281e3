"""Seeded scenario generation and the benchmark protocol.

Instances are reproducible functions of their seed; a benchmark runs one
method over n_cases consecutive seeds per scenario and aggregates the
episode measurements into CSV rows. Sharing a seed range across methods
gives paired comparisons on identical instances.
"""

from __future__ import annotations

import collections
import random
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .core import (
    Coord,
    ExecutionTrace,
    GridMap,
    Instance,
    MeasurementRow,
    ScriptedPolicy,
    execute_policy,
    measurements,
)
from .planner import PlanOutcome, PlannerConfig, plan
from .policy import PrioritizedPolicy

CSV_HEADER = "method,size,agents,density,seed0,n_cases,CA,CO,SR,MS,CR,TM"


class Method(Enum):
    COUPLED = "coupled"
    PRIORITIZED = "prioritized"


@dataclass
class ScenarioSpec:
    """One benchmark setting: square map side, agent count, obstacle density, seed."""

    size: int
    n_agents: int
    density: float
    seed: int
    episode_cap: int = 256

    def __post_init__(self):
        if self.size < 1 or self.n_agents < 1 or self.episode_cap < 1:
            raise ValueError("size, n_agents and episode_cap must be positive")
        if not 0.0 <= self.density <= 0.5:
            raise ValueError("density must lie in [0, 0.5]")
        if self.n_agents > self.size * self.size - self.n_obstacles:
            raise ValueError("more agents than free cells")

    @property
    def n_obstacles(self) -> int:
        return int(self.density * self.size * self.size)


def _components(grid: GridMap) -> dict[Coord, int]:
    """Connected-component label per free cell (4-connectivity)."""
    labels: dict[Coord, int] = {}
    next_label = 0
    for cell in grid.free_cells():
        if cell in labels:
            continue
        queue = collections.deque([cell])
        labels[cell] = next_label
        while queue:
            cur = queue.popleft()
            for nb in grid.neighbors(cur):
                if nb not in labels:
                    labels[nb] = next_label
                    queue.append(nb)
        next_label += 1
    return labels


def generate_instance(spec: ScenarioSpec) -> Instance:
    """Deterministically generate a connected instance from the spec's seed.

    Obstacles are placed uniformly at random, then distinct starts and
    distinct goals are drawn from the free cells; disconnected start/goal
    pairs are redrawn (up to 1000 draws) before the obstacle layout itself
    is regenerated.
    """
    rng = random.Random(spec.seed)
    size, n = spec.size, spec.n_agents
    cells = [(x, y) for y in range(size) for x in range(size)]

    for _ in range(1000):
        obstacles = np.zeros((size, size), dtype=bool)
        for x, y in rng.sample(cells, spec.n_obstacles):
            obstacles[y, x] = True
        grid = GridMap(size, size, obstacles)
        free = grid.free_cells()
        comp = _components(grid)

        starts = rng.sample(free, n)
        goals = rng.sample(free, n)
        budget = 1000
        feasible = True
        for i in range(n):
            while comp[starts[i]] != comp[goals[i]]:
                budget -= 1
                if budget <= 0:
                    feasible = False
                    break
                taken_s = set(starts) - {starts[i]}
                taken_g = set(goals) - {goals[i]}
                starts[i] = rng.choice([c for c in free if c not in taken_s])
                goals[i] = rng.choice([c for c in free if c not in taken_g])
            if not feasible:
                break
        if feasible:
            return Instance(grid, starts, goals)
    raise ValueError(f"could not generate a connected instance for {spec}")


def training_spec(seed: int, n_agents: int = 8, episode_cap: int = 256) -> ScenarioSpec:
    """Training-ecology scenario draw: size 10 (twice as likely), 40, or 70,
    and density from a falling triangular distribution on [0, 0.5]."""
    rng = random.Random(seed)
    size = rng.choices([10, 40, 70], weights=[2, 1, 1])[0]
    density = rng.triangular(0.0, 0.5, 0.0)
    return ScenarioSpec(size, n_agents, density, rng.getrandbits(63), episode_cap)


def _failure_trace(instance: Instance, episode_cap: int) -> ExecutionTrace:
    return ExecutionTrace([list(instance.starts)], [], False, episode_cap, 0)


def run_case(spec: ScenarioSpec, method: Method, *, epsilon: float = 2.0,
             timeout_ms: float = 12_000.0, radius: float = 5.0,
             wait_relief: int | None = 8) -> ExecutionTrace:
    """Generate the spec's instance and run one episode of the method.

    Coupled-planner solutions are replayed through the execution engine;
    a planner timeout or unsolvable outcome counts as a failed episode at
    the full episode cap.
    """
    instance = generate_instance(spec)
    if method == Method.COUPLED:
        result = plan(instance, PlannerConfig(epsilon=epsilon, timeout_ms=timeout_ms))
        if result.outcome != PlanOutcome.SOLVED:
            return _failure_trace(instance, spec.episode_cap)
        return execute_policy(instance, ScriptedPolicy(result.solution), spec.episode_cap)
    policy = PrioritizedPolicy(instance, radius=radius, seed=spec.seed,
                               wait_relief=wait_relief)
    return execute_policy(instance, policy, spec.episode_cap)


def run_benchmark(specs: list[ScenarioSpec], method: Method, n_cases: int,
                  out_path=None, *, epsilon: float = 2.0,
                  timeout_ms: float = 12_000.0, radius: float = 5.0,
                  wait_relief: int | None = 8) -> list[MeasurementRow]:
    """Run n_cases seeded episodes per spec and aggregate one row per spec."""
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    rows = []
    for spec in specs:
        traces = [
            run_case(replace(spec, seed=spec.seed + c), method, epsilon=epsilon,
                     timeout_ms=timeout_ms, radius=radius, wait_relief=wait_relief)
            for c in range(n_cases)
        ]
        rows.append(measurements(traces))
    if out_path is not None:
        write_csv(out_path, [(method, spec, row) for spec, row in zip(specs, rows)])
    return rows


def format_row(method: Method, spec: ScenarioSpec, row: MeasurementRow) -> str:
    return (
        f"{method.value},{spec.size},{spec.n_agents},{spec.density:g},"
        f"{spec.seed},{row.n_cases},"
        f"{row.ca:.6f},{row.co:.6f},{row.sr:.6f},"
        f"{row.ms:.6f},{row.cr:.6f},{row.tm:.6f}"
    )


def write_csv(path, entries: list[tuple[Method, ScenarioSpec, MeasurementRow]]) -> None:
    """CSV rows `method,size,agents,density,seed0,n_cases,CA,CO,SR,MS,CR,TM`."""
    with open(path, "w", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for method, spec, row in entries:
            f.write(format_row(method, spec, row) + "\n")

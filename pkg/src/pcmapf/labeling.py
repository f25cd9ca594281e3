"""Imitation datasets built from coupled-planner solutions.

Unfolds each solved instance into one (observation, action) sample and one
(observation, priority) sample per agent per timestep, so both datasets have
exactly n_agents * sum(makespans) entries. The binary priority label marks
whether the planner's action was locally greedy-optimal for that agent.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .core import (
    Action,
    Coord,
    GridMap,
    Instance,
    MOVE_ACTIONS,
    Observation,
    SimState,
    apply_action,
    observe,
    step,
)
from .planner import PlanOutcome, PlannerConfig, plan


def optimal_action_set(grid: GridMap, position: Coord, goal: Coord) -> set[Action]:
    """Moves that strictly reduce the BFS distance to the goal, ignoring agents.

    Empty exactly when the agent already sits on its goal.
    """
    dist = grid.distance_field(goal)
    d0 = int(dist[position[1], position[0]])
    if d0 < 0:
        raise ValueError(f"goal {goal} unreachable from {position}")
    if d0 == 0:
        return set()
    out = set()
    for a in MOVE_ACTIONS:
        q = apply_action(position, a)
        if grid.is_free(q) and int(dist[q[1], q[0]]) == d0 - 1:
            out.add(a)
    return out


def label_priority(action: Action, optimal_set: set[Action]) -> int:
    """Binary priority: high (1) iff the action agrees with the greedy-optimal set.

    A wait is high-priority only when the optimal set is empty (agent on its
    goal); a move is high-priority only when it belongs to the optimal set.
    """
    if action == Action.WAIT:
        return 1 if not optimal_set else 0
    return 1 if action in optimal_set else 0


@dataclass
class ActionSample:
    observation: Observation
    action: Action


@dataclass
class PrioritySample:
    observation: Observation
    priority: int


@dataclass
class ImitationDatasets:
    """Paired behavior-cloning and priority datasets plus their provenance counts.

    `makespans` lists one entry per solved source instance; it is None for
    datasets loaded from disk (the file format keeps only the counts).
    """

    d_imt: list[ActionSample]
    d_imp: list[PrioritySample]
    n_agents: int
    source_instances: int
    makespans: list[int] | None
    fov: int

    @property
    def solved_instances(self) -> int:
        return len(self.makespans) if self.makespans is not None else self.source_instances

    @property
    def skipped_instances(self) -> int:
        return self.source_instances - self.solved_instances

    @property
    def pos_fraction(self) -> float:
        if not self.d_imp:
            return 0.0
        return sum(s.priority for s in self.d_imp) / len(self.d_imp)

    def summary_line(self) -> str:
        return (f"instances={self.source_instances} solved={self.solved_instances} "
                f"samples={len(self.d_imt)} pos_fraction={self.pos_fraction:.6f}")


def build_datasets(instances: list[Instance], planner: PlannerConfig,
                   seed: int = 0, fov: int = 11) -> ImitationDatasets:
    """Solve every instance and unfold the solutions into paired samples.

    Plans shorter than the instance makespan are padded with waits so every
    (agent, timestep) pair contributes exactly one sample to each dataset.
    Instances the planner cannot solve are skipped whole. The construction
    is fully deterministic; `seed` is accepted for call-site stability only.
    """
    del seed
    if not instances:
        raise ValueError("build_datasets needs at least one instance")
    n = instances[0].n_agents
    if any(inst.n_agents != n for inst in instances):
        raise ValueError("all instances in a batch must have the same agent count")

    d_imt: list[ActionSample] = []
    d_imp: list[PrioritySample] = []
    makespans: list[int] = []
    for inst in instances:
        result = plan(inst, planner)
        if result.outcome != PlanOutcome.SOLVED:
            continue
        solution = result.solution
        horizon = solution.makespan
        padded = [
            list(p.actions) + [Action.WAIT] * (horizon - len(p.actions))
            for p in solution.plans
        ]
        state = SimState.initial(inst)
        for t in range(horizon):
            joint = [padded[i][t] for i in range(n)]
            for i in range(n):
                obs = observe(state, inst, i, fov)
                opt = optimal_action_set(inst.grid, state.positions[i], inst.goals[i])
                d_imt.append(ActionSample(obs, joint[i]))
                d_imp.append(PrioritySample(obs, label_priority(joint[i], opt)))
            state, events = step(state, inst, joint)
            if events:
                raise RuntimeError("planner solution replayed with conflicts")
        makespans.append(horizon)

    return ImitationDatasets(d_imt, d_imp, n, len(instances), makespans, fov)


# --- PICD binary format ------------------------------------------------------
#
# Little-endian throughout. Header: magic "PICD", version u16, n_agents u32,
# solved instance count u32, fov u16 (16 bytes). Then one fixed-size record
# per sample: the 4 observation channels bit-packed row-major in (channel,
# row, col) order, most significant bit first (numpy packbits order), then
# goal direction dx, dy and distance magnitude as three f32, then action u8
# and priority u8. The record count is implied by the file size.

PICD_MAGIC = b"PICD"
PICD_VERSION = 1
_HEADER = struct.Struct("<4sHIIH")
_TAIL = struct.Struct("<fffBB")


def _packed_len(fov: int) -> int:
    return (4 * fov * fov + 7) // 8


def write_datasets(datasets: ImitationDatasets, path) -> None:
    fov = datasets.fov
    with open(path, "wb") as f:
        f.write(_HEADER.pack(PICD_MAGIC, PICD_VERSION, datasets.n_agents,
                             datasets.solved_instances, fov))
        for a_sample, p_sample in zip(datasets.d_imt, datasets.d_imp):
            obs = a_sample.observation
            f.write(np.packbits(obs.spatial.reshape(-1)).tobytes())
            f.write(_TAIL.pack(obs.direction[0], obs.direction[1], obs.magnitude,
                               int(a_sample.action), p_sample.priority))


def read_datasets(path) -> ImitationDatasets:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n_agents, solved, fov = _HEADER.unpack_from(raw, 0)
    if magic != PICD_MAGIC or version != PICD_VERSION:
        raise ValueError(f"{path}: not a PICD v{PICD_VERSION} file")
    packed = _packed_len(fov)
    record = packed + _TAIL.size
    body = raw[_HEADER.size:]
    if len(body) % record != 0:
        raise ValueError(f"{path}: truncated records")

    d_imt: list[ActionSample] = []
    d_imp: list[PrioritySample] = []
    for off in range(0, len(body), record):
        bits = np.unpackbits(
            np.frombuffer(body, dtype=np.uint8, count=packed, offset=off),
            count=4 * fov * fov,
        )
        spatial = bits.astype(bool).reshape(4, fov, fov)
        dx, dy, mag, action, priority = _TAIL.unpack_from(body, off + packed)
        obs = Observation(spatial, (dx, dy), mag)
        d_imt.append(ActionSample(obs, Action(action)))
        d_imp.append(PrioritySample(obs, priority))
    return ImitationDatasets(d_imt, d_imp, n_agents, solved, None, fov)

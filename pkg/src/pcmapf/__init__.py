"""Gridworld MAPF with cluster-based prioritized communication."""

from .core import (
    Action,
    ConflictEvent,
    ConflictKind,
    Coord,
    ExecutionTrace,
    GridMap,
    Instance,
    MeasurementRow,
    Observation,
    Plan,
    RewardConfig,
    ScriptedPolicy,
    SimState,
    Solution,
    agent_rewards,
    execute_policy,
    load_instance,
    manhattan,
    measurements,
    observe,
    read_map,
    read_scenario,
    shortest_path_distance,
    step,
    valid_actions,
    write_map,
    write_scenario,
)
from .planner import (
    PlanOutcome,
    PlannerConfig,
    PlannerResult,
    brute_force_optimal,
    plan,
    read_solution,
    write_solution,
)
from .labeling import (
    ActionSample,
    ImitationDatasets,
    PrioritySample,
    build_datasets,
    label_priority,
    optimal_action_set,
    read_datasets,
    write_datasets,
)
from .clusters import (
    AgentWeight,
    ClusterTopology,
    Message,
    MessagePayload,
    Role,
    distance,
    form_clusters,
    route,
)
from .policy import (
    DecisionInfo,
    PrioritizedPolicy,
    decide_joint_action,
    decide_joint_action_with_info,
    heuristic_priority,
    secondary_order,
)
from .losses import (
    RewardTrace,
    advantage,
    combined_priority_loss,
    discounted_return,
    entropy,
    imitation_loss,
    policy_loss,
    priority_loss,
    value_loss,
)
from .bench import (
    Method,
    ScenarioSpec,
    generate_instance,
    run_benchmark,
    run_case,
    training_spec,
    write_csv,
)

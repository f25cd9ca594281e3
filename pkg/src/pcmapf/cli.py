"""Command-line harness: generate instances, solve them, build datasets, benchmark.

Exit codes: 0 success, 1 contract violation (bad arguments or invalid
inputs), 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    CSV_HEADER,
    Method,
    ScenarioSpec,
    format_row,
    generate_instance,
    run_benchmark,
)
from .core import write_map, write_scenario, load_instance
from .labeling import build_datasets, write_datasets
from .planner import PlanOutcome, PlannerConfig, plan, write_solution


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValueError(message)


def _add_planner_flags(p, default_epsilon=2.0):
    p.add_argument("--epsilon", type=float, default=default_epsilon,
                   help="suboptimality inflation factor (>= 1)")
    p.add_argument("--timeout-ms", type=float, default=12_000.0,
                   help="planner timeout in milliseconds")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded map and scenario file")
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--agents", type=int, required=True)
    g.add_argument("--density", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-map", required=True)
    g.add_argument("--out-scen", required=True)
    g.set_defaults(func=_cmd_generate)

    s = sub.add_parser("solve", help="run the coupled planner on a map/scenario pair")
    s.add_argument("--map", required=True)
    s.add_argument("--scen", required=True)
    _add_planner_flags(s)
    s.add_argument("--out-plan", required=True)
    s.set_defaults(func=_cmd_solve)

    l = sub.add_parser("label", help="build imitation datasets from planner solutions")
    l.add_argument("--count", type=int, required=True)
    l.add_argument("--size", type=int, required=True)
    l.add_argument("--agents", type=int, required=True)
    l.add_argument("--density", type=float, default=0.0)
    l.add_argument("--seed", type=int, default=0)
    _add_planner_flags(l)
    l.add_argument("--fov", type=int, default=11)
    l.add_argument("--out", required=True)
    l.set_defaults(func=_cmd_label)

    r = sub.add_parser("run", help="benchmark one scenario setting")
    r.add_argument("--method", choices=[m.value for m in Method], required=True)
    r.add_argument("--size", type=int, default=20)
    r.add_argument("--agents", type=int, required=True)
    r.add_argument("--density", type=float, default=0.0)
    r.add_argument("--cases", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--radius", type=float, default=5.0)
    r.add_argument("--max-steps", type=int, default=256)
    r.add_argument("--wait-relief", type=int, default=8,
                   help="steps stuck off-goal before a random escape; 0 disables")
    _add_planner_flags(r)
    r.add_argument("--out", required=True)
    r.set_defaults(func=_cmd_run)

    b = sub.add_parser("bench", help="sweep agent counts x obstacle densities")
    b.add_argument("--method", choices=[m.value for m in Method],
                   default=Method.PRIORITIZED.value)
    b.add_argument("--size", type=int, default=20)
    b.add_argument("--agents", default="8,16,32,64",
                   help="comma-separated agent counts")
    b.add_argument("--densities", default="0,0.1,0.2,0.3",
                   help="comma-separated obstacle densities")
    b.add_argument("--cases", type=int, default=100)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--radius", type=float, default=5.0)
    b.add_argument("--max-steps", type=int, default=256)
    b.add_argument("--wait-relief", type=int, default=8)
    _add_planner_flags(b)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_bench)

    return parser


def _cmd_generate(args):
    spec = ScenarioSpec(args.size, args.agents, args.density, args.seed)
    instance = generate_instance(spec)
    write_map(instance.grid, args.out_map)
    write_scenario(instance.starts, instance.goals, args.out_scen)
    print(f"map={args.out_map} scen={args.out_scen} agents={instance.n_agents} "
          f"obstacles={spec.n_obstacles}")


def _cmd_solve(args):
    instance = load_instance(args.map, args.scen)
    result = plan(instance, PlannerConfig(args.epsilon, args.timeout_ms))
    if result.outcome == PlanOutcome.SOLVED:
        write_solution(result.solution, args.out_plan)
        print(f"outcome=solved cost={result.cost} "
              f"makespan={result.solution.makespan} expanded={result.expanded_nodes}")
    else:
        print(f"outcome={result.outcome.value} expanded={result.expanded_nodes}")


def _cmd_label(args):
    specs = [
        ScenarioSpec(args.size, args.agents, args.density, args.seed + k)
        for k in range(args.count)
    ]
    instances = [generate_instance(s) for s in specs]
    datasets = build_datasets(instances, PlannerConfig(args.epsilon, args.timeout_ms),
                              seed=args.seed, fov=args.fov)
    write_datasets(datasets, args.out)
    print(datasets.summary_line())


def _relief(args) -> int | None:
    return args.wait_relief if args.wait_relief > 0 else None


def _cmd_run(args):
    spec = ScenarioSpec(args.size, args.agents, args.density, args.seed, args.max_steps)
    rows = run_benchmark([spec], Method(args.method), args.cases, args.out,
                         epsilon=args.epsilon, timeout_ms=args.timeout_ms,
                         radius=args.radius, wait_relief=_relief(args))
    print(CSV_HEADER)
    print(format_row(Method(args.method), spec, rows[0]))


def _cmd_bench(args):
    agents = [int(a) for a in args.agents.split(",") if a]
    densities = [float(d) for d in args.densities.split(",") if d]
    specs = [
        ScenarioSpec(args.size, a, d, args.seed, args.max_steps)
        for a in agents for d in densities
    ]
    rows = run_benchmark(specs, Method(args.method), args.cases, args.out,
                         epsilon=args.epsilon, timeout_ms=args.timeout_ms,
                         radius=args.radius, wait_relief=_relief(args))
    print(CSV_HEADER)
    for spec, row in zip(specs, rows):
        print(format_row(Method(args.method), spec, row))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

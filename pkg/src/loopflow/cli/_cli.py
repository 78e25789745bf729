import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import anyio
from pydantic import ValidationError

from loopflow._utils.error_wrapper import EXIT_FAILURE, EXIT_OK, loopflow_error_handler
from loopflow._utils.exception import MissionAborted, PlanFileError
from loopflow._utils.printing import console, print_table
from loopflow._utils.serialization import to_serializable
from loopflow.config import __app_name__, __description__, __version__
from loopflow.planner import check_plan, solve
from loopflow.runtime import (
    bench_scalability,
    bench_summary_rows,
    run_mission,
    run_mission_async,
    scenario_query,
    write_bench_csv,
    write_events_csv,
    write_trajectory_csv,
)
from loopflow.schemas import PlanDocument, Scenario, parse_scenario

# Node-expansion budget used by --deterministic when the scenario sets none.
DEFAULT_NODE_BUDGET = 20_000
TRACE_COLUMNS = ("time_ms", "flowtime")


# ---------- Loading ---------- #
def load_scenario(path, seed: Optional[int] = None, deterministic: bool = False) -> Scenario:
    scenario = parse_scenario(Path(path).read_text())
    if seed is not None:
        scenario.runtime.seed = seed
    if deterministic and scenario.planner.node_budget is None:
        scenario.planner.node_budget = DEFAULT_NODE_BUDGET
    return scenario


def load_plan(path) -> PlanDocument:
    try:
        return PlanDocument.model_validate_json(Path(path).read_text())
    except (ValidationError, ValueError) as e:
        raise PlanFileError(f"Plan file {path} is not a valid plan document: {e}", original_error=e) from e


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n")


def _team_sizes(text: str) -> list[int]:
    try:
        sizes = [int(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("team sizes must be positive")
    return sizes


def _print_config(scenario: Scenario) -> int:
    sys.stdout.write(scenario.dump() + "\n")
    return EXIT_OK


# ---------- Commands ---------- #
@loopflow_error_handler()
def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario, args.seed, args.deterministic)
    if args.print_config:
        return _print_config(scenario)
    scenario.planner.verbose = scenario.planner.verbose or args.verbose
    query, ws = scenario_query(scenario)
    plan = solve(query, ws, scenario.planner, roadmap_params=scenario.roadmap)
    _write(args.output, plan.to_document().model_dump_json(indent=2))
    if args.trace:
        with Path(args.trace).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            writer.writerows((round(ms, 3), flowtime) for ms, _, flowtime in plan.stats.trace)
    if args.verbose:
        console.print(
            f"[bold]flowtime[/bold] {plan.flowtime}  [bold]cost[/bold] {plan.normalized_cost:.4f}  "
            f"[bold]T[/bold] {plan.T}  [bold]nodes[/bold] {plan.stats.nodes_expanded}"
        )
    return EXIT_OK


@loopflow_error_handler()
def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario, args.seed, args.deterministic)
    if args.print_config:
        return _print_config(scenario)
    record = bool(args.traj)
    try:
        if args.free_running:
            result = anyio.run(run_mission_async, scenario, None, args.verbose, record)
        else:
            result = run_mission(scenario, verbose=args.verbose, record_trajectory=record)
    except MissionAborted as e:
        if e.metrics is not None:
            _write(args.output, e.metrics.model_dump_json(indent=2))
        raise

    metrics = result.metrics
    _write(args.output, metrics.model_dump_json(indent=2))
    if args.traj:
        write_trajectory_csv(args.traj, result.trajectory)
    if args.events:
        write_events_csv(args.events, result.events)

    s = metrics.summary
    print_table(
        f"{__app_name__} mission ({metrics.mode})",
        ("ticks", "replans", "reuse hit rate", "tasks done", "max tracking err", "collisions", "completed"),
        [(s.ticks, s.replans, s.reuse_hit_rate if s.reuse_hit_rate is not None else "-", s.tasks_completed,
          s.max_tracking_error, s.collisions, metrics.completed)],
    )
    return EXIT_OK if metrics.completed and s.collisions == 0 else EXIT_FAILURE


@loopflow_error_handler()
def cmd_bench(args) -> int:
    node_budget = args.node_budget
    if args.deterministic and node_budget is None:
        node_budget = DEFAULT_NODE_BUDGET
    rows = bench_scalability(
        agents=args.agents,
        instances=args.instances,
        limit_ms=args.limit_ms,
        seed=args.seed or 0,
        radius=args.radius,
        node_budget=node_budget,
    )
    if args.output:
        write_bench_csv(args.output, rows)
    print_table(
        f"{__app_name__} bench (r_agent={args.radius})",
        ("n", "instances", "success rate", "median t_first [ms]", "median cost"),
        bench_summary_rows(rows),
    )
    return EXIT_OK


@loopflow_error_handler()
def cmd_check(args) -> int:
    scenario = load_scenario(args.scenario, args.seed)
    if args.print_config:
        return _print_config(scenario)
    doc = load_plan(args.plan)
    query, ws = scenario_query(scenario)
    violations = check_plan(doc.steps, query, ws)
    if not violations:
        console.print(f"[green]plan OK[/green]: {len(doc.steps)} step(s), {query.n} agent(s)")
        return EXIT_OK
    print_table(
        f"{len(violations)} violation(s)",
        ("condition", "step", "agents", "margin [m]", "detail"),
        [(v.condition.value, v.step, v.agents, v.margin, v.detail or "") for v in violations],
    )
    if args.json:
        sys.stdout.write(json.dumps(to_serializable(violations), indent=2) + "\n")
    return EXIT_FAILURE


# ---------- Parser ---------- #
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lf", description=__description__)
    parser.add_argument("--version", action="version", version=f"{__app_name__} {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--deterministic", action="store_true", help="use node-expansion budgets instead of wall clock")
    common.add_argument("-v", "--verbose", action="store_true")

    scenario_args = argparse.ArgumentParser(add_help=False)
    scenario_args.add_argument("-s", "--scenario", required=True, help="scenario JSON")
    scenario_args.add_argument("--print-config", action="store_true", help="print the scenario with defaults and exit")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common, scenario_args], help="solve the scenario's first query")
    p.add_argument("-o", "--output", default="-", help="plan JSON (stdout by default)")
    p.add_argument("--trace", help="CSV (time_ms,flowtime) of the incumbent cost at each improvement")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common, scenario_args], help="run the closed replanning loop")
    p.add_argument("-o", "--output", default="-", help="metrics JSON (stdout by default)")
    p.add_argument("--traj", help="per-tick trajectory CSV")
    p.add_argument("--events", help="replan / goal / reuse event CSV")
    p.add_argument("--free-running", action="store_true", help="run control and planner concurrently")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", parents=[common], help="scalability sweep on random pole arenas")
    p.add_argument("--agents", type=_team_sizes, default=[2, 4, 8, 16, 32], help="comma separated team sizes")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--limit-ms", type=float, default=1000.0)
    p.add_argument("--radius", type=float, default=0.2)
    p.add_argument("--node-budget", type=int, default=None)
    p.add_argument("-o", "--output", help="bench CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", parents=[common, scenario_args], help="validate a plan against a scenario")
    p.add_argument("-p", "--plan", required=True, help="plan JSON")
    p.add_argument("--json", action="store_true", help="also print violations as JSON")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)

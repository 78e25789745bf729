from ._cli import DEFAULT_NODE_BUDGET, build_parser, load_plan, load_scenario, main

__all__ = ["DEFAULT_NODE_BUDGET", "build_parser", "load_plan", "load_scenario", "main"]

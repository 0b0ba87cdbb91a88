"""Command line entry point: ``solve``, ``oracle``, ``verify`` and ``report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .ga import GAConfig, evolve, format_trace_csv, parse_config
from .instance import ValidationError, build_weight_matrices, canonicalize, format_number, load_instance
from .model import check_feasibility, format_solution, parse_solution, total_objective
from .oracle import solve_exhaustive, solve_greedy
from .report import flow_summary, net_flow_graph, render_report

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spatial-mobility", description="Inter-site staff mobility assignment solver.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="run the genetic algorithm")
    p.add_argument("instance")
    p.add_argument("--config", help="key = value run configuration")
    p.add_argument("--out", help="write the solution here instead of stdout")
    p.add_argument("--trace", help="write the per-generation fitness CSV here")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--workers", type=int, default=1, help="evaluation threads (result is unaffected)")

    p = sub.add_parser("oracle", help="solve exactly")
    p.add_argument("instance")
    p.add_argument("--method", choices=("greedy", "exhaustive"), default="greedy")
    p.add_argument("--out", help="also write the solution file here")

    p = sub.add_parser("verify", help="check a solution file")
    p.add_argument("instance")
    p.add_argument("solution")

    p = sub.add_parser("report", help="flow summary and net-flow graph of a solution")
    p.add_argument("instance")
    p.add_argument("solution")
    return parser


def _load(path: str):
    return canonicalize(load_instance(path))


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _cmd_solve(args) -> int:
    instance = _load(args.instance)
    config = GAConfig()
    if args.config:
        config = parse_config(Path(args.config).read_text(encoding="utf-8"))
    if args.seed is not None:
        config = GAConfig(**{**config.__dict__, "seed": args.seed})
    if args.workers < 1:
        raise ValidationError("--workers must be positive")
    result = evolve(instance, config, workers=args.workers)
    _write(args.out, format_solution(instance, result.best, result.best_value))
    if args.trace:
        Path(args.trace).write_text(format_trace_csv(result), encoding="utf-8")
    if args.out:
        print(f"best {format_number(result.best_value)} after {result.generations_run} generations")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    instance = _load(args.instance)
    solver = solve_greedy if args.method == "greedy" else solve_exhaustive
    result = solver(instance)
    text = format_solution(instance, result.best, result.best_value, result.prefixes)
    print(f"optimum {format_number(result.best_value)}")
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _read_solution(args):
    instance = _load(args.instance)
    x, claimed = parse_solution(instance, Path(args.solution).read_text(encoding="utf-8"))
    return instance, x, claimed


def _cmd_verify(args) -> int:
    instance, x, claimed = _read_solution(args)
    report = check_feasibility(instance, x)
    value = total_objective(build_weight_matrices(instance), x)
    if not report.feasible:
        print(f"infeasible, objective {format_number(value)}")
        print(report.describe())
        return EXIT_INFEASIBLE
    if claimed is not None and claimed != value:
        print(f"feasible, objective {format_number(value)} (file claims {format_number(claimed)})")
        return EXIT_INVALID
    print(f"feasible, objective {format_number(value)}")
    return EXIT_OK


def _cmd_report(args) -> int:
    instance, x, _ = _read_solution(args)
    report = check_feasibility(instance, x)
    if not report.feasible:
        print("infeasible solution")
        print(report.describe())
        return EXIT_INFEASIBLE
    summary = flow_summary(instance, x)
    sys.stdout.write(render_report(summary, net_flow_graph(summary)))
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "oracle": _cmd_oracle, "verify": _cmd_verify, "report": _cmd_report}


def run_cli(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

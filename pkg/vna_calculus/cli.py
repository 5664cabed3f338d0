"""Command-line entry point: ``vna <command> [args] --file problem.vna``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from .algebra import ProjectionSpec, canonicalize, classify, compress
from .config import resolve_options
from .const import (
    CHECK_MATCH,
    CONF_DEPTH,
    CONF_FORMAT,
    CONF_TRUNCATE,
    DEMO_NAMES,
    EXIT_INVALID,
    EXIT_NOT_STABLE,
    EXIT_OK,
    OUTPUT_FORMATS,
    STATUS_BOUNDS_ONLY,
)
from .demos import run_demo
from .dimension import fdim, rdim
from .embedding import validate_embedding, validate_subalgebra
from .exactnum import parse_ext
from .exceptions import VnaError
from .parser import ProblemFile, parse_problem
from .product import check_compression_consistency, compute_product
from .report import (
    algebra_payload,
    format_algebra,
    format_dimension,
    format_problems,
    format_product,
    render_json,
)

_LOGGER = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vna",
        description="Exact calculator for amalgamated free products over atomic type I subalgebras",
    )
    parser.add_argument("--file", type=Path, help="Problem file")
    parser.add_argument("--depth", type=int, help="Chain depth budget (default: 8)")
    parser.add_argument("--truncate", type=int, help="Terms kept from repeat families (default: 9)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, help="Output format (default: text)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log engine steps")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("validate", help="Check every definition in the file")
    for name in ("fdim", "rdim"):
        sub = commands.add_parser(name, help=f"{name} of a named algebra")
        sub.add_argument("name")
    commands.add_parser("product", help="Compute A *_D B for the two embedded algebras")
    compress_cmd = commands.add_parser("compress", help="Cut a named algebra down by an allocation")
    compress_cmd.add_argument("name")
    compress_cmd.add_argument("allocation", help="Comma separated traces, one per summand")
    consistency = commands.add_parser("consistency", help="Compare two computations of pMp")
    consistency.add_argument("label", help="Summand label of the first embedded algebra")
    demo = commands.add_parser("demo", help="Run a self-checking example")
    demo.add_argument("name", choices=DEMO_NAMES)
    return parser


def _load(args: argparse.Namespace) -> ProblemFile:
    if args.file is None:
        raise VnaError(f"{args.command} needs --file")
    return parse_problem(args.file.read_text(encoding="utf-8"), args.truncate)


def _emit(options: dict[str, Any], payload: dict[str, Any], text: str) -> None:
    print(render_json(payload) if options[CONF_FORMAT] == "json" else text)


def _validate(problem: ProblemFile, options: dict[str, Any]) -> int:
    problems: list[str] = []
    if problem.base is not None:
        problems.extend(f"{problem.base_name}: {p}" for p in validate_subalgebra(problem.base))
    for name, target in problem.embeddings.items():
        problems.extend(f"{name}: {p}" for p in validate_embedding(problem.base, problem.algebras[name], target))
    payload = {
        "valid": not problems,
        "problems": problems,
        "algebras": [algebra_payload(name, a) for name, a in problem.algebras.items()],
    }
    lines = [f"{name}: class {classify(a).name}, {a}" for name, a in problem.algebras.items()]
    lines.append("valid" if not problems else "invalid:\n" + format_problems(problems))
    _emit(options, payload, "\n".join(lines))
    return EXIT_OK if not problems else EXIT_INVALID


def _dimension(problem: ProblemFile, options: dict[str, Any], kind: str, name: str) -> int:
    a = problem.algebra(name)
    value = fdim(a) if kind == "fdim" else rdim(a)
    payload = {**algebra_payload(name, a), kind: str(value)}
    _emit(options, payload, format_dimension(kind, name, value, a))
    return EXIT_OK


def _product(problem: ProblemFile, options: dict[str, Any]) -> int:
    result = compute_product(*problem.product_inputs(), options[CONF_DEPTH])
    _emit(options, result.to_dict(), format_product(result))
    return EXIT_NOT_STABLE if result.convergence.status == STATUS_BOUNDS_ONLY else EXIT_OK


def _compress(problem: ProblemFile, options: dict[str, Any], name: str, allocation: str) -> int:
    a = problem.algebra(name)
    try:
        p = ProjectionSpec(tuple(parse_ext(part) for part in allocation.split(",")))
    except ValueError as err:
        raise VnaError(f"bad allocation {allocation!r}: {err}") from err
    corner = canonicalize(compress(a, p))
    payload = {**algebra_payload(f"p{name}p", corner), "source_rdim": str(rdim(a))}
    text = f"{format_algebra(f'p{name}p', corner)}\nrdim {rdim(corner)} (source {rdim(a)})"
    _emit(options, payload, text)
    return EXIT_OK


def _consistency(problem: ProblemFile, options: dict[str, Any], label: str) -> int:
    check, direct, rebuilt = check_compression_consistency(*problem.product_inputs(), label, options[CONF_DEPTH])
    payload = {"label": label, "check": check, "direct": direct.to_dict(), "rebuilt": rebuilt.to_dict()}
    text = f"pMp directly:   {direct}\npMp rebuilt:    {rebuilt}\ncheck: {check}"
    _emit(options, payload, text)
    return EXIT_OK if check == CHECK_MATCH else EXIT_INVALID


def _demo(options: dict[str, Any], name: str, truncate: int | None) -> int:
    outcome = run_demo(name, truncate, options[CONF_DEPTH])
    lines = [f"=== demo {name}: {'passed' if outcome.passed else 'FAILED'} ===", f"expected {outcome.expected}"]
    lines.append(format_product(outcome.result))
    lines.extend(f"note: {note}" for note in outcome.notes)
    _emit(options, outcome.to_dict(), "\n".join(lines))
    if not outcome.passed:
        return EXIT_INVALID
    return EXIT_NOT_STABLE if outcome.result.convergence.status == STATUS_BOUNDS_ONLY else EXIT_OK


def run(args: argparse.Namespace) -> int:
    """Dispatch a parsed command line."""
    overrides = {CONF_DEPTH: args.depth, CONF_FORMAT: args.format}
    if args.command == "demo":
        options = resolve_options(None, {**overrides, CONF_TRUNCATE: args.truncate})
        truncate = options[CONF_TRUNCATE] if args.truncate is not None else None
        return _demo(options, args.name, truncate)
    problem = _load(args)
    options = resolve_options(problem.options, overrides)
    if args.command == "validate":
        return _validate(problem, options)
    if args.command in ("fdim", "rdim"):
        return _dimension(problem, options, args.command, args.name)
    if args.command == "product":
        return _product(problem, options)
    if args.command == "compress":
        return _compress(problem, options, args.name, args.allocation)
    return _consistency(problem, options, args.label)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return run(args)
    except VnaError as err:
        print(f"Error: {err}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as err:
        print(f"Error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

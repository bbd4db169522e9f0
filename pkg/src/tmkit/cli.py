"""Command line interface.

    tmkit parse FILE [--canonical]
    tmkit check FILE [--strict]
    tmkit eventize FILE
    tmkit simulate FILE [--policy first|random|scripted:A,B] [--seed N]
                        [--horizon N] [--trace OUT.json]
    tmkit export FILE --format json|dot [-o OUT] [--regions] [--behavior]

Exit codes: 0 success, 1 failure (error diagnostics, unusable document, or a
run that could not be carried out), 2 usage errors. Diagnostics go to stderr;
requested artifacts go to stdout or to files, written atomically.
"""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

from tmkit import export as export_mod
from tmkit.diagnostics import Diagnostic, has_errors
from tmkit.dsl import ModelDocument, parse
from tmkit.events import BehaviorError, EventError, build_from_document
from tmkit.formatter import format_document
from tmkit.sim import (
    FirstDeclared,
    ScriptedExhaustedError,
    Scripted,
    SeededRandom,
    SimulationError,
    run,
)
from tmkit.validate import check_model


def _emit(diagnostics: Sequence[Diagnostic]) -> None:
    for diag in diagnostics:
        print(diag.render(), file=sys.stderr)


def _load(path: str) -> str | None:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None


def _parse_file(path: str) -> tuple[ModelDocument | None, bool]:
    """Returns (document, had_errors); prints all parse diagnostics."""
    text = _load(path)
    if text is None:
        return None, True
    result = parse(text, source=path)
    _emit(result.diagnostics)
    return result.document, not result.ok


def _checked_document(path: str, strict: bool = False) -> ModelDocument | None:
    document, failed = _parse_file(path)
    if failed or document is None:
        return None
    diagnostics = check_model(document.model)
    _emit(diagnostics)
    if has_errors(diagnostics) or (strict and diagnostics):
        return None
    return document


def _cmd_parse(args: argparse.Namespace) -> int:
    document, failed = _parse_file(args.file)
    if failed or document is None:
        return 1
    if args.canonical:
        sys.stdout.write(format_document(document))
    else:
        model = document.model
        print(
            f"ok: {len(model.machines) - 1} machines, {len(model.stages)} stages, "
            f"{len(model.flows)} flows, {len(model.triggers)} triggers, "
            f"{len(document.events)} events"
        )
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    document, failed = _parse_file(args.file)
    if failed or document is None:
        return 1
    diagnostics = check_model(document.model)
    _emit(diagnostics)
    if has_errors(diagnostics) or (args.strict and diagnostics):
        return 1
    print(f"ok: {len(diagnostics)} warning(s)" if diagnostics else "ok")
    return 0


def _cmd_eventize(args: argparse.Namespace) -> int:
    document = _checked_document(args.file)
    if document is None:
        return 1
    try:
        events, graph, report = build_from_document(document)
    except (EventError, BehaviorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name in events:
        event = events[name]
        marks = []
        if name in graph.initial:
            marks.append("initial")
        if name in graph.terminal:
            marks.append("terminal")
        suffix = f" [{', '.join(marks)}]" if marks else ""
        label = f" -- {event.label}" if event.label else ""
        print(
            f"{name}: {len(event.region.stages)} stages, duration {event.duration}"
            f"{suffix}{label}"
        )
    print(f"coverage: {len(report.uncovered)} uncovered stage(s), {len(report.overlaps)} shared")
    return 0


def _make_policy(choice: str, seed: int):
    if choice == "first":
        return FirstDeclared()
    if choice == "random":
        return SeededRandom(seed)
    if choice.startswith("scripted:"):
        names = tuple(part for part in choice[len("scripted:"):].split(",") if part)
        if not names:
            raise ValueError("scripted policy needs at least one event name")
        return Scripted(names)
    raise ValueError(f"unknown policy {choice!r} (use first, random, or scripted:A,B)")


def _cmd_simulate(args: argparse.Namespace) -> int:
    document = _checked_document(args.file)
    if document is None:
        return 1
    try:
        _, graph, _ = build_from_document(document)
        policy = _make_policy(args.policy, args.seed)
        trace = run(graph, policy, horizon=args.horizon, seed=args.seed)
    except (EventError, BehaviorError, SimulationError, ScriptedExhaustedError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    last = trace.ticks[-1] if trace.ticks else None
    print(f"termination: {trace.termination}")
    print(f"ticks: {len(trace.ticks)}")
    print(f"record: {len(trace.record)} archived instance(s)")
    if last is not None and last.live:
        print(f"live at end: {', '.join(last.live)}")
    if args.trace:
        export_mod.write_text_atomic(
            args.trace, export_mod.trace_to_json(trace, graph, document.model)
        )
        print(f"trace written: {args.trace}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    document = _checked_document(args.file)
    if document is None:
        return 1
    graph = None
    if args.behavior and document.events:
        try:
            _, graph, _ = build_from_document(document)
        except (EventError, BehaviorError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    if args.format == "json":
        text = export_mod.model_to_json(
            document,
            include_regions=args.regions,
            include_behavior=args.behavior,
        )
    else:
        text = export_mod.export_dot(
            document, behavior=graph, include_regions=args.regions
        )
    if args.output:
        export_mod.write_text_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmkit", description="Thinging machine toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_parse = sub.add_parser("parse", help="parse a model file and report diagnostics")
    p_parse.add_argument("file")
    p_parse.add_argument(
        "--canonical", action="store_true", help="print the canonical form on success"
    )
    p_parse.set_defaults(func=_cmd_parse)

    p_check = sub.add_parser("check", help="parse and run the structural rules")
    p_check.add_argument("file")
    p_check.add_argument("--strict", action="store_true", help="fail on warnings too")
    p_check.set_defaults(func=_cmd_check)

    p_event = sub.add_parser("eventize", help="list events, behavior roles, and coverage")
    p_event.add_argument("file")
    p_event.set_defaults(func=_cmd_eventize)

    p_sim = sub.add_parser("simulate", help="run the behavior graph")
    p_sim.add_argument("file")
    p_sim.add_argument(
        "--policy",
        default="first",
        help="first | random | scripted:EventA,EventB (default: first)",
    )
    p_sim.add_argument("--seed", type=int, default=0, help="seed for the random policy")
    p_sim.add_argument("--horizon", type=int, default=100, help="maximum tick (default 100)")
    p_sim.add_argument("--trace", metavar="OUT", help="write the trace as JSON to OUT")
    p_sim.set_defaults(func=_cmd_simulate)

    p_export = sub.add_parser("export", help="emit the model as JSON or DOT")
    p_export.add_argument("file")
    p_export.add_argument("--format", choices=("json", "dot"), required=True)
    p_export.add_argument("-o", "--output", metavar="OUT", help="write to OUT instead of stdout")
    p_export.add_argument(
        "--regions", action="store_true", help="include regions and events"
    )
    p_export.add_argument(
        "--behavior", action="store_true", help="include the behavior graph"
    )
    p_export.set_defaults(func=_cmd_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
